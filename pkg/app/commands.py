"""
Subcommand logic shared by the command line and the HTTP service. Each command returns
its report model together with the exit code the command line uses.
"""
import logging
from pathlib import Path
from typing import Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from app.algebra.coefficients import (
    WickCoefficients,
    describe,
    load_document,
    preset_q_ccr,
    preset_tccr,
    preset_zero,
    read_document,
    validate,
)
from app.algebra.fock import (
    build_rep,
    build_truncation,
    norm_growth,
    verify_adjoint,
    verify_annihilation_paths,
    verify_relations,
)
from app.algebra.symbolic import parse_expr, parse_scalar, wick_order, word_text
from app.audit.engine import audit_all, audit_kernel, structural_checks
from app.config import default_value
from app.errors import AlgebraDocumentError
from app.models import (
    AlgebraDocument,
    AuditReport,
    KernelReport,
    OrderReport,
    OrderTerm,
    RepReport,
    SpectrumReport,
    ValidationResult,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FINDING = 1
EXIT_INPUT = 2
EXIT_CAP = 3


class RunConfig(BaseModel):
    """Everything a subcommand needs; defaults are the class-level settings defaults."""
    algebra: Optional[Path] = Field(None, description="Coefficient document (JSON)")
    document: Optional[AlgebraDocument] = Field(None, description="Inline coefficient document")
    preset: Optional[Literal["q-ccr", "tccr", "zero"]] = None
    q: Optional[str] = Field(None, description="q_ij for i < j as a scalar literal; conj(q) for i > j")
    q_diag: Optional[str] = Field(None, description="q_ii; defaults to q when q is real, else 0")
    mu: Optional[float] = None
    d: Optional[int] = Field(None, ge=1)
    max_degree: int = Field(default_factory=lambda: default_value("max_degree"))
    tol: float = Field(default_factory=lambda: default_value("rank_tol"), gt=0)
    format: Literal["text", "json"] = "text"
    seed: int = Field(default_factory=lambda: default_value("seed"))
    dim_cap: int = Field(default_factory=lambda: default_value("dim_cap"), ge=1)
    allow_modulus_violation: bool = False

    @field_validator("max_degree")
    @classmethod
    def truncation_headroom(cls, v: int) -> int:
        if v < 2:
            raise ValueError("max_degree must be at least 2")
        return v

    @model_validator(mode="after")
    def one_algebra_source(self):
        sources = [self.algebra is not None, self.document is not None, self.preset is not None]
        if sum(sources) > 1:
            raise ValueError("give exactly one of --algebra and --preset")
        if not any(sources):
            raise ValueError("an algebra is required: pass --algebra FILE or --preset")
        return self


def _q_matrix(config: RunConfig, d: int) -> np.ndarray:
    if config.q is None:
        raise AlgebraDocumentError("--preset q-ccr needs --q")
    q = parse_scalar(config.q)
    if config.q_diag is not None:
        diag = parse_scalar(config.q_diag)
    else:
        diag = q if q.imag == 0 else 0j
    matrix = np.full((d, d), q, dtype=np.complex128)
    matrix[np.tril_indices(d, -1)] = np.conj(q)
    np.fill_diagonal(matrix, diag)
    return matrix


def resolve_algebra(config: RunConfig, symmetrize_input: bool = True) -> WickCoefficients:
    if config.algebra is not None:
        document = read_document(config.algebra)
    else:
        document = config.document
    if document is not None:
        if config.allow_modulus_violation:
            document = document.model_copy(update={"allow_modulus_violation": True})
        return load_document(document, symmetrize_input)
    if config.preset == "zero":
        return preset_zero(config.d or 2)
    if config.preset == "tccr":
        if config.mu is None:
            raise AlgebraDocumentError("--preset tccr needs --mu")
        return preset_tccr(config.mu, config.d or 2, config.allow_modulus_violation)
    return preset_q_ccr(_q_matrix(config, config.d or 2), config.allow_modulus_violation)


def cmd_validate(config: RunConfig) -> Tuple[ValidationResult, int]:
    c = resolve_algebra(config, symmetrize_input=False)
    result = validate(c)
    return result, EXIT_OK if result.ok else EXIT_FINDING


def cmd_spectrum(config: RunConfig) -> Tuple[SpectrumReport, int]:
    c = resolve_algebra(config)
    trunc = build_truncation(c, config.max_degree, config.tol, config.dim_cap, keep_spectrum=True)
    report = SpectrumReport(
        algebra=describe(c),
        max_degree=config.max_degree,
        degrees=[v for v in trunc.verdicts if v.degree >= 2],
        indefinite_degree=trunc.indefinite_degree,
    )
    return report, EXIT_FINDING if trunc.indefinite_degree is not None else EXIT_OK


def cmd_kernel(config: RunConfig) -> Tuple[KernelReport, int]:
    c = resolve_algebra(config)
    trunc = build_truncation(c, config.max_degree, config.tol, config.dim_cap)
    structural = structural_checks(c, config.tol, config.dim_cap)
    section = audit_kernel(c, config.max_degree, config.tol, config.dim_cap, trunc=trunc)
    mismatch = section.theorem.applicable == "yes" and not section.theorem.conclusion.holds
    report = KernelReport(
        algebra=describe(c),
        max_degree=config.max_degree,
        braid_holds=structural.braid_holds,
        braid_residual=structural.braid_residual,
        norm_T=structural.norm_T,
        rows=section.rows,
        generators=section.generators,
        trivial=all(row.observed_dim == 0 for row in section.rows),
        mismatch=mismatch,
    )
    return report, EXIT_FINDING if mismatch else EXIT_OK


def cmd_order(config: RunConfig, expr: str) -> Tuple[OrderReport, int]:
    c = resolve_algebra(config)
    ordered = wick_order(parse_expr(expr, c.d), c)
    report = OrderReport(
        algebra=describe(c),
        input=expr,
        normal_form=ordered.to_text(),
        terms=[OrderTerm(word=word_text(w), re=z.real, im=z.imag) for w, z in ordered],
        normal_ordered=ordered.is_normal_ordered(),
    )
    return report, EXIT_OK


def cmd_rep(config: RunConfig) -> Tuple[RepReport, int]:
    """Raises IndefiniteGramError when some P_n is indefinite; callers map it to a finding."""
    c = resolve_algebra(config)
    trunc = build_truncation(c, config.max_degree, config.tol, config.dim_cap)
    rep = build_rep(trunc, config.tol)
    adjoint = verify_adjoint(trunc, rep)
    relation = verify_relations(trunc, rep)
    paths = verify_annihilation_paths(trunc)
    adjoint_tol = default_value("adjoint_tol")
    passed = adjoint <= adjoint_tol and relation <= default_value("relation_tol") and paths <= adjoint_tol
    report = RepReport(
        algebra=describe(c),
        max_degree=config.max_degree,
        quotient_dims=rep.quotient_dims,
        adjoint_residual=adjoint,
        relation_residual=relation,
        kernel_covariance_residual=rep.kernel_covariance_residual,
        annihilation_path_residual=paths,
        norm_growth=norm_growth(trunc, rep, config.tol),
        passed=passed,
    )
    return report, EXIT_OK if passed else EXIT_FINDING


def cmd_audit(config: RunConfig) -> Tuple[AuditReport, int]:
    c = resolve_algebra(config)
    report = audit_all(c, config.max_degree, config.tol, config.dim_cap, config.seed)
    return report, EXIT_OK if report.alarms == 0 else EXIT_FINDING
