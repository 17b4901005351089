"""
Pydantic documents and reports.

Everything the CLI prints as JSON, the HTTP service returns, and the audit engine
produces is one of these models. Text renderings are derived from the models only,
so parsing a JSON report and re-rendering it reproduces the text report exactly.
"""
from enum import Enum
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator

ComplexPair = Tuple[float, float]


class PresetDocument(BaseModel):
    kind: Literal["q_ccr", "tccr", "zero", "explicit"] = Field(..., description="Preset family")
    q: Optional[List[List[ComplexPair]]] = Field(None, description="d x d matrix of [re, im] pairs (q_ccr only)")
    mu: Optional[float] = Field(None, description="Deformation parameter (tccr only)")

    @field_validator('kind', mode='before')
    @classmethod
    def normalize_kind(cls, v):
        return v.replace("-", "_") if isinstance(v, str) else v


class AlgebraDocument(BaseModel):
    """
    Coefficient input schema. Exactly one of `preset` and `coeff` is present;
    `coeff` is a nested d x d x d x d array of [re, im] pairs holding T_ij^kl.
    """
    d: int = Field(..., ge=1, description="Number of generators")
    preset: Optional[PresetDocument] = None
    coeff: Optional[List[List[List[List[ComplexPair]]]]] = None
    allow_modulus_violation: bool = Field(False, description="Admit |q_ij| > 1 and the extended TCCR range")

    @model_validator(mode='after')
    def exactly_one_source(self):
        if (self.preset is None) == (self.coeff is None):
            raise ValueError("exactly one of 'preset' and 'coeff' must be given")
        if self.preset is not None and self.preset.kind == "explicit":
            raise ValueError("preset kind 'explicit' is expressed through the 'coeff' field")
        return self


class AlgebraDescriptor(BaseModel):
    kind: str
    d: int
    summary: str


class ValidationResult(BaseModel):
    ok: bool
    d: int
    symmetry_deviation: float = Field(..., description="max |T_ij^kl - conj(T_ji^lk)|")
    hermitian_deviation: float = Field(..., description="||T - T^H|| of the assembled operator")
    threshold: float
    violations: List[str] = Field(default_factory=list)


class PositivityClass(str, Enum):
    positive_definite = "positive_definite"
    positive_semidefinite = "positive_semidefinite"
    indefinite = "indefinite"


class PositivityVerdict(BaseModel):
    degree: int
    verdict: PositivityClass
    min_eigenvalue: float
    kernel_dim: int
    tol_used: float
    asymmetry: float = Field(0.0, description="||P - P^H|| before symmetrization")
    eigenvalues: List[float] = Field(default_factory=list)


class SpectrumReport(BaseModel):
    algebra: AlgebraDescriptor
    max_degree: int
    degrees: List[PositivityVerdict]
    indefinite_degree: Optional[int] = None


class KernelRow(BaseModel):
    degree: int = Field(..., description="n+1, the degree of P_{n+1}")
    observed_dim: int
    predicted_dim: int
    distance: float
    equal: bool


class KernelReport(BaseModel):
    algebra: AlgebraDescriptor
    max_degree: int
    braid_holds: bool
    braid_residual: float
    norm_T: float
    rows: List[KernelRow]
    generators: List[str] = Field(default_factory=list, description="ker(1+T) rendered as degree-2 polynomials")
    trivial: bool
    mismatch: bool = Field(False, description="Kernel equality failed while its hypothesis held")


class OrderTerm(BaseModel):
    word: str
    re: float
    im: float


class OrderReport(BaseModel):
    algebra: AlgebraDescriptor
    input: str
    normal_form: str
    terms: List[OrderTerm]
    normal_ordered: bool


class NormGrowth(BaseModel):
    norms: List[List[float]] = Field(..., description="norms[i-1][n]: creation a_i restricted to degree n")
    max_by_degree: List[float]
    trend: Literal["bounded", "unbounded_trend", "undetermined"]


class RepReport(BaseModel):
    algebra: AlgebraDescriptor
    max_degree: int
    quotient_dims: List[int]
    adjoint_residual: float
    relation_residual: float
    kernel_covariance_residual: float
    annihilation_path_residual: float
    norm_growth: NormGrowth
    passed: bool


class Check(BaseModel):
    holds: bool
    value: Optional[float] = None
    threshold: Optional[float] = None
    detail: str = ""


class TheoremEntry(BaseModel):
    name: str
    statement: str
    hypothesis: Check
    conclusion: Check
    applicable: Literal["yes", "no", "borderline"]
    consistent: bool
    informational: bool = False
    note: str = ""


class StructuralChecks(BaseModel):
    wick_symmetry_deviation: float
    hermitian_deviation: float
    norm_T: float
    min_eig_T: float
    max_eig_T: float
    braid_holds: bool
    braid_residual: float
    dim_ker_one_plus_T: int


class RepresentationChecks(BaseModel):
    available: bool
    reason: str = ""
    quotient_dims: List[int] = Field(default_factory=list)
    adjoint_residual: Optional[float] = None
    relation_residual: Optional[float] = None
    kernel_covariance_residual: Optional[float] = None
    annihilation_path_residual: Optional[float] = None
    cuntz_toeplitz_residual: Optional[float] = None
    positivity_gate_min: Optional[float] = Field(None, description="min <X,X>_T / ||X||^2 over seeded random X")
    positivity_gate_passed: Optional[bool] = None
    norm_growth: Optional[NormGrowth] = None


class FaithfulnessEvidence(BaseModel):
    available: bool
    reason: str = ""
    generators: List[str] = Field(default_factory=list)
    generator_residuals: List[float] = Field(default_factory=list)
    injectivity_checked: bool = False
    monomial_count: int = 0
    gram_rank: int = 0
    full_rank: Optional[bool] = None
    summary: str = ""


class AuditReport(BaseModel):
    preamble: str
    algebra: AlgebraDescriptor
    max_degree: int
    tol: float
    structural: StructuralChecks
    verdicts: List[PositivityVerdict]
    theorems: List[TheoremEntry]
    kernel_table: List[KernelRow]
    representation: RepresentationChecks
    faithfulness: FaithfulnessEvidence
    alarms: int
    consistent: bool


class PositivitySection(BaseModel):
    verdicts: List[PositivityVerdict]
    theorems: List[TheoremEntry]


class KernelSection(BaseModel):
    rows: List[KernelRow]
    generators: List[str] = Field(default_factory=list)
    theorem: TheoremEntry


class FaithfulnessSection(BaseModel):
    evidence: FaithfulnessEvidence
    theorem: TheoremEntry
