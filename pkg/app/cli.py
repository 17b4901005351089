"""
Command line: ``wick {validate,spectrum,kernel,order,rep,audit} [options]``.

Exit codes: 0 success, 1 mathematical finding, 2 input error, 3 dimension cap.
Reports go to stdout; logs and error messages go to stderr.
"""
import argparse
import json
import logging
import sys
from typing import Callable, Dict, List, Optional

from pydantic import BaseModel, ValidationError

from app import commands
from app.commands import EXIT_CAP, EXIT_FINDING, EXIT_INPUT, RunConfig
from app.config import default_value, settings, use_defaults
from app.errors import (
    AlgebraDocumentError,
    DimensionCapExceeded,
    ExprSyntaxError,
    IndexRangeError,
    PresetError,
    WickError,
    WickSymmetryError,
)
from app.models import (
    AuditReport,
    KernelReport,
    OrderReport,
    PositivityVerdict,
    RepReport,
    SpectrumReport,
    TheoremEntry,
    ValidationResult,
)

logger = logging.getLogger(__name__)

INPUT_ERRORS = (AlgebraDocumentError, PresetError, WickSymmetryError, ExprSyntaxError, IndexRangeError)


def fmt(value: Optional[float]) -> str:
    return "n/a" if value is None else f"{value:.17g}"


# Text renderers

def render_validation(result: ValidationResult) -> str:
    lines = [
        f"valid: {'yes' if result.ok else 'no'} (d={result.d})",
        f"max Wick symmetry deviation: {fmt(result.symmetry_deviation)}",
        f"||T - T*||: {fmt(result.hermitian_deviation)}",
        f"threshold: {fmt(result.threshold)}",
    ]
    lines += [f"violation: {v}" for v in result.violations]
    return "\n".join(lines)


def _verdict_line(v: PositivityVerdict) -> str:
    return (f"P_{v.degree}: {v.verdict.value} min eig {fmt(v.min_eigenvalue)} "
            f"kernel dim {v.kernel_dim} tol {fmt(v.tol_used)}")


def render_spectrum(report: SpectrumReport) -> str:
    lines = [report.algebra.summary, f"truncation N={report.max_degree}"]
    for v in report.degrees:
        lines.append(_verdict_line(v))
        lines.append("  eigenvalues: " + " ".join(fmt(e) for e in v.eigenvalues))
    if report.indefinite_degree is not None:
        lines.append(f"indefinite at degree {report.indefinite_degree}; higher degrees not built")
    return "\n".join(lines)


def render_kernel(report: KernelReport) -> str:
    lines = [
        report.algebra.summary,
        f"truncation N={report.max_degree}",
        f"braid: {'holds' if report.braid_holds else 'fails'} (residual {fmt(report.braid_residual)})",
        f"||T||: {fmt(report.norm_T)}",
        "jor-bas: ker P_{n+1} vs sum_k ker(1+T_k)",
    ]
    for row in report.rows:
        lines.append(f"  degree {row.degree}: observed {row.observed_dim} predicted {row.predicted_dim} "
                     f"distance {fmt(row.distance)} {'equal' if row.equal else 'DIFFERENT'}")
    if report.trivial:
        lines.append(f"kernel trivial at all degrees <= {report.max_degree}")
    for g in report.generators:
        lines.append(f"generator: {g}")
    if report.mismatch:
        lines.append("ALARM: kernel equality fails while its hypothesis holds")
    return "\n".join(lines)


def render_order(report: OrderReport) -> str:
    return report.normal_form


def render_rep(report: RepReport) -> str:
    growth = report.norm_growth
    lines = [
        report.algebra.summary,
        f"truncation N={report.max_degree}",
        "quotient dims: " + ",".join(str(n) for n in report.quotient_dims),
        f"adjoint residual: {fmt(report.adjoint_residual)}",
        f"relation residual: {fmt(report.relation_residual)}",
        f"kernel covariance residual: {fmt(report.kernel_covariance_residual)}",
        f"annihilation path residual: {fmt(report.annihilation_path_residual)}",
        "creation norms by degree: " + " ".join(fmt(x) for x in growth.max_by_degree),
        f"norm trend: {growth.trend}",
        f"passed: {'yes' if report.passed else 'no'}",
    ]
    return "\n".join(lines)


def _theorem_lines(entry: TheoremEntry) -> List[str]:
    tag = " (informational)" if entry.informational else ""
    status = "ok" if entry.consistent else "ALARM"
    lines = [
        f"[{entry.name}]{tag} {entry.statement}",
        f"  hypothesis: {'holds' if entry.hypothesis.holds else 'fails'}; {entry.hypothesis.detail}",
        f"  applicable: {entry.applicable}",
        f"  conclusion: {'holds' if entry.conclusion.holds else 'fails'}; {entry.conclusion.detail} "
        f"(value {fmt(entry.conclusion.value)}, threshold {fmt(entry.conclusion.threshold)})",
        f"  consistency: {status}",
    ]
    if entry.note:
        lines.append(f"  note: {entry.note}")
    return lines


def render_audit(report: AuditReport) -> str:
    s = report.structural
    lines = [
        report.preamble,
        report.algebra.summary,
        f"truncation N={report.max_degree} tol {fmt(report.tol)}",
        "structure:",
        f"  Wick symmetry deviation {fmt(s.wick_symmetry_deviation)}",
        f"  ||T - T*|| {fmt(s.hermitian_deviation)}",
        f"  ||T|| {fmt(s.norm_T)}; spectrum in [{fmt(s.min_eig_T)}, {fmt(s.max_eig_T)}]",
        f"  braid {'holds' if s.braid_holds else 'fails'} (residual {fmt(s.braid_residual)})",
        f"  dim ker(1+T) {s.dim_ker_one_plus_T}",
        "positivity:",
    ]
    lines += ["  " + _verdict_line(v) for v in report.verdicts]
    lines.append("theorems:")
    for entry in report.theorems:
        lines += ["  " + line for line in _theorem_lines(entry)]
    lines.append("kernel table:")
    for row in report.kernel_table:
        lines.append(f"  degree {row.degree}: observed {row.observed_dim} predicted {row.predicted_dim} "
                     f"distance {fmt(row.distance)}")
    r = report.representation
    lines.append("representation:")
    if r.available:
        lines += [
            "  quotient dims: " + ",".join(str(n) for n in r.quotient_dims),
            f"  adjoint residual {fmt(r.adjoint_residual)}",
            f"  relation residual {fmt(r.relation_residual)}",
            f"  kernel covariance residual {fmt(r.kernel_covariance_residual)}",
            f"  annihilation path residual {fmt(r.annihilation_path_residual)}",
            f"  positivity gate min {fmt(r.positivity_gate_min)}"
            + ("" if r.positivity_gate_passed is not False else " FAILED"),
            f"  norm trend {r.norm_growth.trend}",
        ]
        if r.cuntz_toeplitz_residual is not None:
            lines.append(f"  Cuntz-Toeplitz A_i C_j = delta_ij residual {fmt(r.cuntz_toeplitz_residual)}")
    else:
        lines.append(f"  unavailable: {r.reason}")
    f = report.faithfulness
    lines.append("faithfulness evidence:")
    lines.append(f"  {f.summary}")
    for g, res in zip(f.generators, f.generator_residuals):
        lines.append(f"  {g}: residual {fmt(res)}")
    lines.append(f"alarms: {report.alarms}")
    return "\n".join(lines)


RENDERERS: Dict[type, Callable[[BaseModel], str]] = {
    ValidationResult: render_validation,
    SpectrumReport: render_spectrum,
    KernelReport: render_kernel,
    OrderReport: render_order,
    RepReport: render_rep,
    AuditReport: render_audit,
}


def render(report: BaseModel, output_format: str) -> str:
    if output_format == "json":
        return report.model_dump_json(indent=2)
    return RENDERERS[type(report)](report)


# Argument parsing

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--algebra", type=str, help="Coefficient document (JSON).")
    common.add_argument("--preset", choices=["q-ccr", "tccr", "zero"], help="Built-in algebra family.")
    common.add_argument("--q", type=str, help="q_ij for i < j, e.g. 0.5 or (0+1i); q_ji is its conjugate.")
    common.add_argument("--q-diag", type=str, help="q_ii (default: q when real, else 0).")
    common.add_argument("--mu", type=float, help="TCCR deformation parameter.")
    common.add_argument("--d", type=int, help="Number of generators (default 2).")
    common.add_argument("--max-degree", type=int, default=default_value("max_degree"), help="Truncation degree N.")
    common.add_argument("--tol", type=float, default=default_value("rank_tol"), help="Relative rank tolerance.")
    common.add_argument("--format", choices=["text", "json"], default="text", help="Report format.")
    common.add_argument("--seed", type=int, default=default_value("seed"), help="Seed for randomized checks.")
    common.add_argument("--dim-cap", type=int, default=default_value("dim_cap"), help="Largest tensor dimension.")
    common.add_argument("--allow-modulus-violation", action="store_true",
                        help="Admit |q_ij| > 1 and the extended TCCR range -1 <= mu <= 1.")
    common.add_argument("--log-level", default=default_value("log_level"), help="Log level for stderr.")

    parser = argparse.ArgumentParser(prog="wick", description="Wick algebra workbench.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="Check Wick symmetry and self-adjointness of T.")
    sub.add_parser("spectrum", parents=[common], help="Eigenvalues and positivity of P_2..P_N.")
    sub.add_parser("kernel", parents=[common], help="Kernels of P_n against sum_k ker(1+T_k).")
    order = sub.add_parser("order", parents=[common], help="Wick-order an expression.")
    order.add_argument("expr", help='Expression such as "a1* a2 - (0+1i) a2 a1".')
    sub.add_parser("rep", parents=[common], help="Fock representation residuals and norm growth.")
    sub.add_parser("audit", parents=[common], help="Full theorem audit.")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        algebra=args.algebra,
        preset=args.preset,
        q=args.q,
        q_diag=args.q_diag,
        mu=args.mu,
        d=args.d,
        max_degree=args.max_degree,
        tol=args.tol,
        format=args.format,
        seed=args.seed,
        dim_cap=args.dim_cap,
        allow_modulus_violation=args.allow_modulus_violation,
    )


def _fail(message: str, code: int, output_format: str) -> int:
    if output_format == "json":
        print(json.dumps({"error": message, "exit_code": code}))
    print(f"error: {message}", file=sys.stderr)
    return code


def run(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), stream=sys.stderr,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s", force=True)
    use_defaults(settings)
    output_format = args.format
    try:
        config = config_from_args(args)
        if args.command == "order":
            report, code = commands.cmd_order(config, args.expr)
        else:
            report, code = getattr(commands, f"cmd_{args.command}")(config)
    except DimensionCapExceeded as exc:
        return _fail(str(exc), EXIT_CAP, output_format)
    except INPUT_ERRORS as exc:
        return _fail(str(exc), EXIT_INPUT, output_format)
    except ValidationError as exc:
        return _fail(f"invalid arguments: {exc}", EXIT_INPUT, output_format)
    except WickError as exc:
        return _fail(str(exc), EXIT_FINDING, output_format)
    print(render(report, output_format))
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
