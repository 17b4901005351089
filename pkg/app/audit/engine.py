"""
Theorem-by-theorem audit of a Wick algebra at a finite truncation.

Each theorem entry carries a numeric hypothesis check, a numeric conclusion check and a
three-valued applicability. An alarm is raised only when a non-informational entry is
applicable ("yes") and its conclusion fails, or when a sampled Fock norm falls below
-POSITIVITY_GATE_TOL ||X||^2.
"""
import logging
from itertools import product
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from app.algebra.coefficients import WickCoefficients, build_T, describe, validate
from app.algebra.fock import (
    FockTruncation,
    RepMatrices,
    build_rep,
    build_truncation,
    cuntz_toeplitz_residual,
    norm_growth,
    verify_adjoint,
    verify_annihilation_paths,
    verify_relations,
)
from app.algebra.operators import Operator, check_braid, one_plus_T_kernel, predicted_kernel
from app.algebra.symbolic import (
    StarPolynomial,
    evaluate_in_fock,
    kernel_generator_polynomials,
    render_kernel_generators,
)
from app.config import settings
from app.errors import IndefiniteGramError, QuotientError
from app.models import (
    AuditReport,
    Check,
    FaithfulnessEvidence,
    FaithfulnessSection,
    KernelRow,
    KernelSection,
    PositivityClass,
    PositivitySection,
    PositivityVerdict,
    RepresentationChecks,
    StructuralChecks,
    TheoremEntry,
)
from app.numerics import hermitian_eigen, kernel_basis, operator_norm, subspace_equal

logger = logging.getLogger(__name__)

Applicability = Literal["yes", "no", "borderline"]

CUNST_BOUND = float(np.sqrt(2.0) - 1.0)
BORDERLINE_FACTOR = 10.0
POSITIVITY_GATE_TOL = 1e-9

PREAMBLE = (
    "Numerical audit at truncation degree N. Positivity and kernel statements are checked "
    "degree by degree up to N with relative tolerances; faithfulness entries are evidence at "
    "this truncation (generator vanishing and rank of normal-ordered monomial images), not a proof."
)


class SpectralBound(BaseModel):
    """A bound on a scalar, strict or not on each side; applicability is three-valued."""
    parameter: str
    min_value: Optional[float] = None
    max_value: Optional[float] = None
    strict_min: bool = False
    strict_max: bool = False

    def applicability(self, value: float, tol: float) -> Applicability:
        verdicts = []
        if self.min_value is not None:
            verdicts.append(self._side(value - self.min_value, self.strict_min, tol))
        if self.max_value is not None:
            verdicts.append(self._side(self.max_value - value, self.strict_max, tol))
        return combine(verdicts)

    @staticmethod
    def _side(margin: float, strict: bool, tol: float) -> Applicability:
        band = BORDERLINE_FACTOR * tol
        if strict:
            if margin > band:
                return "yes"
            return "no" if margin < -band else "borderline"
        if margin >= -tol:
            return "yes"
        return "borderline" if margin >= -band else "no"

    def describe(self) -> str:
        parts = []
        if self.min_value is not None:
            parts.append(f"{self.min_value:.6g} {'<' if self.strict_min else '<='}")
        parts.append(self.parameter)
        if self.max_value is not None:
            parts.append(f"{'<' if self.strict_max else '<='} {self.max_value:.6g}")
        return " ".join(parts)


def combine(verdicts: Sequence[Applicability]) -> Applicability:
    if "no" in verdicts:
        return "no"
    if "borderline" in verdicts:
        return "borderline"
    return "yes"


def _braid_applicability(holds: bool, residual: float, scale_bound: float) -> Applicability:
    if holds:
        return "yes"
    return "borderline" if residual <= BORDERLINE_FACTOR * scale_bound else "no"


def _entry(name: str, statement: str, hypothesis: Check, applicable: Applicability, conclusion: Check,
           informational: bool = False, note: str = "") -> TheoremEntry:
    consistent = not (applicable == "yes" and not conclusion.holds)
    if not consistent and not informational:
        logger.warning("%s: hypothesis holds but conclusion fails (%s)", name, conclusion.detail)
    return TheoremEntry(
        name=name,
        statement=statement,
        hypothesis=hypothesis,
        conclusion=conclusion,
        applicable=applicable,
        consistent=consistent,
        informational=informational,
        note=note,
    )


class _Spectrum(BaseModel):
    norm: float
    min_eig: float
    max_eig: float
    braid_holds: bool
    braid_residual: float
    braid_bound: float
    tol: float
    excluded: str = ""


def _diagonal_exclusion(c: WickCoefficients) -> str:
    """q-CCR with some |q_ii| = 1 is outside every audited hypothesis."""
    if c.preset.kind != "q_ccr" or c.preset.q is None:
        return ""
    diagonal = np.abs(np.diag(c.preset.q))
    if np.any(diagonal >= 1.0 - settings.symmetry_tol):
        return "unimodular diagonal q_ii excluded from all theorem hypotheses"
    return ""


def _spectrum_of_T(t: Operator, tol: float, dim_cap: Optional[int],
                   c: Optional[WickCoefficients] = None) -> _Spectrum:
    values, _ = hermitian_eigen(t.matrix)
    norm = float(np.max(np.abs(values)))
    braid = check_braid(t, dim_cap=dim_cap)
    return _Spectrum(
        norm=norm,
        min_eig=float(values[0]),
        max_eig=float(values[-1]),
        braid_holds=braid.holds,
        braid_residual=braid.residual,
        braid_bound=settings.braid_tol * (1.0 + norm ** 3),
        tol=tol * max(1.0, norm),
        excluded=_diagonal_exclusion(c) if c is not None else "",
    )


def structural_checks(c: WickCoefficients, tol: Optional[float] = None, dim_cap: Optional[int] = None) -> StructuralChecks:
    tol = settings.rank_tol if tol is None else tol
    validation = validate(c)
    t = build_T(c)
    spectrum = _spectrum_of_T(t, tol, dim_cap)
    return StructuralChecks(
        wick_symmetry_deviation=validation.symmetry_deviation,
        hermitian_deviation=validation.hermitian_deviation,
        norm_T=spectrum.norm,
        min_eig_T=spectrum.min_eig,
        max_eig_T=spectrum.max_eig,
        braid_holds=spectrum.braid_holds,
        braid_residual=spectrum.braid_residual,
        dim_ker_one_plus_T=one_plus_T_kernel(t, tol).dim,
    )


def _hypothesis(parts: Sequence[Tuple[SpectralBound, float]], spectrum: _Spectrum,
                braided: bool) -> Tuple[Check, Applicability]:
    verdicts = [bound.applicability(value, spectrum.tol) for bound, value in parts]
    details = [f"{bound.describe()} at {value:.6g}" for bound, value in parts]
    if braided:
        verdicts.append(_braid_applicability(spectrum.braid_holds, spectrum.braid_residual, spectrum.braid_bound))
        details.append(f"braid residual {spectrum.braid_residual:.3e}")
    if spectrum.excluded:
        verdicts.append("no")
        details.append(spectrum.excluded)
    applicable = combine(verdicts)
    bound, value = parts[0]
    threshold = bound.max_value if bound.max_value is not None else bound.min_value
    return Check(holds=applicable == "yes", value=value, threshold=threshold, detail="; ".join(details)), applicable


def _degrees_from_two(verdicts: List[PositivityVerdict]) -> List[PositivityVerdict]:
    return [v for v in verdicts if v.degree >= 2]


def _all_definite(verdicts: List[PositivityVerdict], N: int) -> Check:
    tail = _degrees_from_two(verdicts)
    complete = bool(tail) and tail[-1].degree == N
    holds = complete and all(v.verdict == PositivityClass.positive_definite for v in tail)
    value = min((v.min_eigenvalue for v in tail), default=None)
    threshold = max((v.tol_used for v in tail), default=None)
    failing = [v.degree for v in tail if v.verdict != PositivityClass.positive_definite]
    detail = "P_n > 0 for 2 <= n <= N" if holds else f"not positive definite at degrees {failing}"
    return Check(holds=holds, value=value, threshold=threshold, detail=detail)


def _none_indefinite(verdicts: List[PositivityVerdict], N: int) -> Check:
    tail = _degrees_from_two(verdicts)
    failing = [v.degree for v in tail if v.verdict == PositivityClass.indefinite]
    holds = not failing and bool(tail) and tail[-1].degree == N
    value = min((v.min_eigenvalue for v in tail), default=None)
    threshold = max((v.tol_used for v in tail), default=None)
    detail = "P_n >= 0 for 2 <= n <= N" if holds else f"indefinite at degree {failing[0] if failing else '?'}"
    return Check(holds=holds, value=value, threshold=threshold, detail=detail)


def audit_positivity(c: WickCoefficients, N: int, tol: Optional[float] = None, dim_cap: Optional[int] = None,
                     trunc: Optional[FockTruncation] = None, norm_trend: Optional[str] = None) -> PositivitySection:
    """Positivity theorems: norm bound, T >= 0, and the braided -1 <= T <= 1 family."""
    tol = settings.rank_tol if tol is None else tol
    trunc = trunc or build_truncation(c, N, tol, dim_cap)
    spectrum = _spectrum_of_T(trunc.T, tol, dim_cap, c)
    verdicts = trunc.verdicts
    definite = _all_definite(verdicts, N)
    semidefinite = _none_indefinite(verdicts, N)
    theorems = []

    norm = SpectralBound(parameter="||T||", max_value=CUNST_BOUND, strict_max=True)
    hyp, applicable = _hypothesis([(norm, spectrum.norm)], spectrum, braided=False)
    theorems.append(_entry("jor-cunst", "||T|| < sqrt(2) - 1 implies P_n > 0", hyp, applicable, definite))

    nonnegative = SpectralBound(parameter="min eig T", min_value=0.0)
    hyp, applicable = _hypothesis([(nonnegative, spectrum.min_eig)], spectrum, braided=False)
    theorems.append(_entry("T>=0", "T >= 0 implies P_n > 0", hyp, applicable, definite))

    upper = (SpectralBound(parameter="max eig T", max_value=1.0), spectrum.max_eig)
    lower = (SpectralBound(parameter="min eig T", min_value=-1.0), spectrum.min_eig)
    hyp, applicable = _hypothesis([lower, upper], spectrum, braided=True)
    theorems.append(_entry("jor-fobs", "braided T with -1 <= T <= 1 implies P_n >= 0", hyp, applicable, semidefinite))

    strict_lower = (SpectralBound(parameter="min eig T", min_value=-1.0, strict_min=True), spectrum.min_eig)
    hyp, applicable = _hypothesis([strict_lower, upper], spectrum, braided=True)
    theorems.append(_entry("jor-fobs-strict", "braided T with -1 < T <= 1 implies P_n > 0", hyp, applicable, definite))

    hyp, applicable = _hypothesis([(SpectralBound(parameter="||T||", max_value=1.0), spectrum.norm)],
                                  spectrum, braided=True)
    theorems.append(_entry(
        "jor-fobs-as-printed", "braided T with ||T|| <= 1 implies P_n > 0", hyp, applicable, definite,
        informational=True,
        note="fails whenever ker(1+T) != 0 at ||T|| = 1; the strict form above is the one audited",
    ))

    hyp, applicable = _hypothesis([(SpectralBound(parameter="||T||", max_value=1.0, strict_max=True), spectrum.norm)],
                                  spectrum, braided=True)
    if norm_trend is None:
        bounded = Check(holds=False, detail="representation unavailable")
    else:
        bounded = Check(holds=norm_trend == "bounded", detail=f"creation norm trend: {norm_trend}")
    theorems.append(_entry(
        "jor-fobs-bounded", "braided T with ||T|| < 1 gives bounded Fock operators", hyp, applicable, bounded,
        informational=True, note="trend over the truncated degrees only",
    ))
    logger.info("positivity audit: %d entries, %d degrees", len(theorems), len(verdicts))
    return PositivitySection(verdicts=verdicts, theorems=theorems)


def kernel_rows(trunc: FockTruncation, tol: Optional[float] = None, dim_cap: Optional[int] = None) -> List[KernelRow]:
    """Observed ker P_{n+1} against sum_k ker(1+T_k) for every built degree n+1 >= 2."""
    tol = settings.rank_tol if tol is None else tol
    rows = []
    for p in trunc.grams[2:]:
        n = p.degree - 1
        if p.degree < len(trunc.kernels):
            observed = trunc.kernels[p.degree]
        else:
            observed = kernel_basis(p.matrix, tol)
        predicted = predicted_kernel(trunc.T, n, tol, dim_cap)
        equal, distance = subspace_equal(observed, predicted)
        rows.append(KernelRow(degree=p.degree, observed_dim=observed.dim, predicted_dim=predicted.dim,
                              distance=distance, equal=equal))
    return rows


def audit_kernel(c: WickCoefficients, N: int, tol: Optional[float] = None, dim_cap: Optional[int] = None,
                 trunc: Optional[FockTruncation] = None) -> KernelSection:
    """Kernel structure: ker P_{n+1} = sum_k ker(1+T_k) for braided T with ||T|| <= 1."""
    tol = settings.rank_tol if tol is None else tol
    trunc = trunc or build_truncation(c, N, tol, dim_cap)
    spectrum = _spectrum_of_T(trunc.T, tol, dim_cap, c)
    rows = kernel_rows(trunc, tol, dim_cap)
    hyp, applicable = _hypothesis([(SpectralBound(parameter="||T||", max_value=1.0), spectrum.norm)],
                                  spectrum, braided=True)
    worst = max((row.distance for row in rows), default=0.0)
    complete = bool(rows) and rows[-1].degree == N
    holds = complete and all(row.equal for row in rows)
    detail = "kernels agree at every degree" if holds else \
        f"disagreement at degrees {[row.degree for row in rows if not row.equal] or 'beyond the built truncation'}"
    conclusion = Check(holds=holds, value=worst, threshold=settings.kernel_distance_tol, detail=detail)
    theorem = _entry("jor-bas", "braided T with ||T|| <= 1 has ker P_{n+1} = sum_k ker(1+T_k)",
                     hyp, applicable, conclusion)
    generators = render_kernel_generators(trunc.T, tol)
    logger.info("kernel audit: %d rows, %d generators", len(rows), len(generators))
    return KernelSection(rows=rows, generators=generators, theorem=theorem)


def normal_ordered_monomials(d: int, max_length: int) -> List[StarPolynomial]:
    """a_u a_v* for all unstarred u and v with |u| + |v| <= max_length."""
    monomials = []
    for length in range(max_length + 1):
        for split in range(length + 1):
            for u in product(range(1, d + 1), repeat=split):
                for v in product(range(1, d + 1), repeat=length - split):
                    word = tuple((i, False) for i in u) + tuple((i, True) for i in v)
                    monomials.append(StarPolynomial.monomial(word))
    return monomials


def _build_representation(trunc: FockTruncation):
    try:
        return build_rep(trunc), ""
    except IndefiniteGramError as exc:
        return None, str(exc)
    except QuotientError as exc:
        return None, str(exc)


def audit_faithfulness(c: WickCoefficients, N: int, tol: Optional[float] = None, dim_cap: Optional[int] = None,
                       trunc: Optional[FockTruncation] = None, rep: Optional[RepMatrices] = None) -> FaithfulnessSection:
    """
    Evidence that the kernel of the Fock representation is generated by ker(1+T): each
    generator must vanish on the quotient, and with ker(1+T) = 0 the images of the
    normal-ordered monomials of length <= 3 must be linearly independent.
    """
    tol = settings.rank_tol if tol is None else tol
    trunc = trunc or build_truncation(c, N, tol, dim_cap)
    spectrum = _spectrum_of_T(trunc.T, tol, dim_cap, c)
    hyp, applicable = _hypothesis([(SpectralBound(parameter="||T||", max_value=1.0), spectrum.norm)],
                                  spectrum, braided=True)
    reason = ""
    if rep is None:
        rep, reason = _build_representation(trunc)
    if rep is None:
        evidence = FaithfulnessEvidence(available=False, reason=reason, summary="no representation at this truncation")
        conclusion = Check(holds=False, detail=reason)
        theorem = _entry("ker-lambda0", "ker of the Fock representation is generated by ker(1+T)",
                         hyp, combine([applicable, "no"]), conclusion)
        return FaithfulnessSection(evidence=evidence, theorem=theorem)

    offsets = trunc.offsets()
    generators = kernel_generator_polynomials(trunc.T, tol)
    residuals = []
    for generator in generators:
        evaluation = evaluate_in_fock(generator, trunc, rep)
        residuals.append(operator_norm(evaluation.restricted(offsets)))
    threshold = tol
    generators_vanish = all(r <= threshold for r in residuals)

    injectivity_checked = False
    full_rank = None
    gram_rank = 0
    count = 0
    if not generators and trunc.N >= 3:
        injectivity_checked = True
        monomials = normal_ordered_monomials(trunc.d, 3)
        count = len(monomials)
        columns = offsets[4]
        images = np.stack([evaluate_in_fock(m, trunc, rep).matrix[:, :columns].reshape(-1) for m in monomials],
                          axis=1)
        gram = images.conj().T @ images
        values, _ = hermitian_eigen((gram + gram.conj().T) / 2)
        gram_rank = int(np.sum(values > tol * max(1.0, float(values[-1]))))
        full_rank = gram_rank == count

    holds = generators_vanish and full_rank is not False
    if generators:
        summary = (f"{len(generators)} generator(s) of ker(1+T) vanish on the quotient"
                   if generators_vanish else "a kernel generator does not vanish on the quotient")
    elif injectivity_checked:
        summary = (f"ker(1+T) = 0 and {count} normal-ordered monomials of length <= 3 have independent images"
                   if full_rank else f"ker(1+T) = 0 but monomial images have rank {gram_rank} < {count}")
    else:
        summary = "ker(1+T) = 0; truncation too short for the injectivity check"
    evidence = FaithfulnessEvidence(
        available=True,
        generators=render_kernel_generators(trunc.T, tol),
        generator_residuals=residuals,
        injectivity_checked=injectivity_checked,
        monomial_count=count,
        gram_rank=gram_rank,
        full_rank=full_rank,
        summary=summary,
    )
    conclusion = Check(holds=holds, value=max(residuals, default=0.0), threshold=threshold, detail=summary)
    theorem = _entry("ker-lambda0", "ker of the Fock representation is generated by ker(1+T)",
                     hyp, applicable, conclusion, note="evidence at truncation N")
    return FaithfulnessSection(evidence=evidence, theorem=theorem)


def positivity_gate(trunc: FockTruncation, seed: int, samples: int = 100) -> float:
    """min <X, P_n X> / ||X||^2 over seeded random X at every built non-indefinite degree."""
    rng = np.random.default_rng(seed)
    worst = float("inf")
    for n, p in enumerate(trunc.grams[:len(trunc.Q)]):
        dim = p.dim
        x = rng.standard_normal((dim, samples)) + 1j * rng.standard_normal((dim, samples))
        ratios = np.real(np.einsum("ij,ij->j", x.conj(), p.matrix @ x)) / np.sum(np.abs(x) ** 2, axis=0)
        worst = min(worst, float(np.min(ratios)))
    return worst


def representation_checks(c: WickCoefficients, trunc: FockTruncation, rep: Optional[RepMatrices], reason: str,
                          seed: int) -> RepresentationChecks:
    if rep is None:
        return RepresentationChecks(available=False, reason=reason, quotient_dims=trunc.quotient_dims)
    growth = norm_growth(trunc, rep)
    gate = positivity_gate(trunc, seed)
    if gate < -POSITIVITY_GATE_TOL:
        logger.warning("Fock inner product negative on a sampled vector: %.3e", gate)
    return RepresentationChecks(
        available=True,
        quotient_dims=rep.quotient_dims,
        adjoint_residual=verify_adjoint(trunc, rep),
        relation_residual=verify_relations(trunc, rep),
        kernel_covariance_residual=rep.kernel_covariance_residual,
        annihilation_path_residual=verify_annihilation_paths(trunc),
        cuntz_toeplitz_residual=cuntz_toeplitz_residual(trunc, rep) if c.is_zero() else None,
        positivity_gate_min=gate,
        positivity_gate_passed=gate >= -POSITIVITY_GATE_TOL,
        norm_growth=growth,
    )


def audit_all(c: WickCoefficients, N: int, tol: Optional[float] = None, dim_cap: Optional[int] = None,
              seed: Optional[int] = None) -> AuditReport:
    tol = settings.rank_tol if tol is None else tol
    seed = settings.seed if seed is None else seed
    structural = structural_checks(c, tol, dim_cap)
    trunc = build_truncation(c, N, tol, dim_cap)
    rep, reason = _build_representation(trunc)
    representation = representation_checks(c, trunc, rep, reason, seed)
    trend = representation.norm_growth.trend if representation.norm_growth else None

    positivity = audit_positivity(c, N, tol, dim_cap, trunc=trunc, norm_trend=trend)
    kernel = audit_kernel(c, N, tol, dim_cap, trunc=trunc)
    faithfulness = audit_faithfulness(c, N, tol, dim_cap, trunc=trunc, rep=rep)

    theorems = positivity.theorems + [kernel.theorem, faithfulness.theorem]
    alarms = sum(1 for t in theorems if not t.informational and t.applicable == "yes" and not t.conclusion.holds)
    if representation.positivity_gate_passed is False:
        alarms += 1
    if alarms:
        logger.warning("audit raised %d consistency alarm(s)", alarms)
    return AuditReport(
        preamble=PREAMBLE,
        algebra=describe(c),
        max_degree=N,
        tol=tol,
        structural=structural,
        verdicts=positivity.verdicts,
        theorems=theorems,
        kernel_table=kernel.rows,
        representation=representation,
        faithfulness=faithfulness.evidence,
        alarms=alarms,
        consistent=alarms == 0,
    )
