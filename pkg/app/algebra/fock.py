"""
Truncated Fock representation of a Wick algebra.

Degrees run 0..N. The Gram operator P_n defines the Fock inner product
<X, Y>_T = <X, P_n Y> on H^{(x)n}; quotient coordinates Q_n = Lambda^{1/2} V^H over the
eigenvalues above tolerance make that inner product standard, so adjointness of the
creation and annihilation blocks is plain conjugate-transpose equality.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np

from app.algebra.coefficients import WickCoefficients, build_T
from app.algebra.operators import Operator, build_R, classify_positivity, iter_P
from app.config import settings
from app.errors import IndefiniteGramError, IndexRangeError, QuotientError
from app.models import NormGrowth, PositivityClass, PositivityVerdict
from app.numerics import Subspace, check_dimension, hermitian_eigen, identity, kron, operator_norm, spectral_scale

logger = logging.getLogger(__name__)

BlockKey = Tuple[int, int]


@dataclass(frozen=True, eq=False)
class TensorVector:
    """Element of H^{(x)degree} in the flat most-significant-left basis."""
    degree: int
    d: int
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.complex128).reshape(-1)
        if data.shape[0] != self.d ** self.degree:
            raise ValueError(f"degree-{self.degree} vector over d={self.d} needs {self.d ** self.degree} entries")
        object.__setattr__(self, "data", data)

    @classmethod
    def basis(cls, indices, d: int) -> "TensorVector":
        """e_{i_1} (x) ... (x) e_{i_n} for 1-based indices; the empty tuple is the vacuum."""
        indices = tuple(indices)
        flat = 0
        for i in indices:
            _check_generator(i, d)
            flat = flat * d + (i - 1)
        data = np.zeros(d ** len(indices), dtype=np.complex128)
        data[flat] = 1.0
        return cls(len(indices), d, data)


@dataclass(frozen=True, eq=False)
class FockTruncation:
    N: int
    coefficients: WickCoefficients
    T: Operator
    grams: List[Operator]
    rs: List[Optional[Operator]]
    verdicts: List[PositivityVerdict]
    kernels: List[Subspace] = field(default_factory=list)
    Q: List[np.ndarray] = field(default_factory=list)
    Qinv: List[np.ndarray] = field(default_factory=list)
    indefinite_degree: Optional[int] = None
    dim_cap: Optional[int] = None

    @property
    def d(self) -> int:
        return self.coefficients.d

    @property
    def built_degree(self) -> int:
        return len(self.grams) - 1

    @property
    def quotient_dims(self) -> List[int]:
        return [q.shape[0] for q in self.Q]

    def offsets(self) -> List[int]:
        """Start of each degree's block inside the direct sum of quotients."""
        return [0] + list(np.cumsum(self.quotient_dims))


@dataclass(frozen=True, eq=False)
class RepMatrices:
    """
    creation[(i, n)]: quotient_n -> quotient_{n+1};
    annihilation[(i, n)]: quotient_{n+1} -> quotient_n. i is 1-based, 0 <= n < N.
    """
    N: int
    d: int
    creation: Dict[BlockKey, np.ndarray]
    annihilation: Dict[BlockKey, np.ndarray]
    quotient_dims: List[int]
    kernel_covariance_residual: float = 0.0


def _check_generator(i: int, d: int):
    if not 1 <= i <= d:
        raise IndexRangeError(f"generator index {i} outside 1..{d}")


def _quotient_coordinates(p: Operator, verdict: PositivityVerdict):
    if np.array_equal(p.matrix, identity(p.dim)):
        return Subspace.empty(p.dim), identity(p.dim), identity(p.dim)
    values, vectors = hermitian_eigen(p.matrix)
    keep = values > verdict.tol_used
    kernel = Subspace(vectors.shape[0], vectors[:, np.abs(values) <= verdict.tol_used])
    kept = vectors[:, keep]
    root = np.sqrt(values[keep])
    return kernel, root[:, None] * kept.conj().T, kept / root[None, :]


def build_truncation(c: WickCoefficients, N: int, tol: Optional[float] = None,
                     dim_cap: Optional[int] = None, keep_spectrum: bool = False) -> FockTruncation:
    """
    Gram operators, verdicts and quotient coordinates for degrees 0..N. Construction
    stops at the first indefinite degree, which is kept with its verdict only.
    """
    if N < 2:
        raise IndexRangeError(f"truncation degree must be at least 2, got {N}")
    tol = settings.rank_tol if tol is None else tol
    t = build_T(c)
    check_dimension(c.d ** N, dim_cap)
    grams, rs, verdicts, kernels, qs, qinvs = [], [None], [], [], [], []
    indefinite = None
    for p in iter_P(t, N, dim_cap):
        verdict = classify_positivity(p, tol, keep_spectrum)
        grams.append(p)
        verdicts.append(verdict)
        if p.degree >= 1:
            rs.append(build_R(t, p.degree, dim_cap) if p.degree > 1 else Operator.identity(1, c.d))
        if verdict.verdict == PositivityClass.indefinite:
            indefinite = p.degree
            logger.info("P_%d is indefinite (min eigenvalue %.3e); truncation stops", p.degree, verdict.min_eigenvalue)
            break
        kernel, q, qinv = _quotient_coordinates(p, verdict)
        kernels.append(kernel)
        qs.append(q)
        qinvs.append(qinv)
    logger.debug("truncation N=%d built to degree %d, quotient dims %s", N, len(grams) - 1, [q.shape[0] for q in qs])
    return FockTruncation(N, c, t, grams, rs, verdicts, kernels, qs, qinvs, indefinite, dim_cap)


def _require_degree(trunc: FockTruncation, n: int, limit: Optional[int] = None):
    limit = trunc.built_degree if limit is None else limit
    if not 0 <= n <= limit:
        raise IndexRangeError(f"degree {n} outside 0..{limit}")


def fock_inner(x: TensorVector, y: TensorVector, trunc: FockTruncation) -> complex:
    if x.degree != y.degree:
        return 0j
    _require_degree(trunc, x.degree)
    return complex(np.vdot(x.data, trunc.grams[x.degree].matrix @ y.data))


def mu_star_matrix(i: int, n: int, d: int, dim_cap: Optional[int] = None) -> np.ndarray:
    """mu(e_i*) on H^{(x)n} for n >= 1: removes a leading e_i, kills any other leading letter."""
    _check_generator(i, d)
    if n < 1:
        raise IndexRangeError("mu(e_i*) on the vacuum is the zero functional")
    row = np.zeros((1, d), dtype=np.complex128)
    row[0, i - 1] = 1.0
    return kron(row, identity(d ** (n - 1)), dim_cap)


def mu_star(i: int, x: TensorVector) -> TensorVector:
    if x.degree == 0:
        _check_generator(i, x.d)
        return TensorVector(0, x.d, np.zeros(1, dtype=np.complex128))
    return TensorVector(x.degree - 1, x.d, mu_star_matrix(i, x.degree, x.d) @ x.data)


def creation_matrix(i: int, n: int, trunc: FockTruncation) -> np.ndarray:
    """Left tensoring by e_i, H^{(x)n} -> H^{(x)(n+1)}, pre-quotient."""
    _check_generator(i, trunc.d)
    _require_degree(trunc, n, trunc.N - 1)
    column = np.zeros((trunc.d, 1), dtype=np.complex128)
    column[i - 1, 0] = 1.0
    return kron(column, identity(trunc.d ** n), trunc.dim_cap)


def annihilation_matrix(i: int, m: int, trunc: FockTruncation,
                        method: Literal["closed", "rewrite"] = "closed") -> np.ndarray:
    """
    a_i* on H^{(x)m} -> H^{(x)(m-1)}, pre-quotient, 1 <= m <= N.
    "closed" is mu(e_i*) R_m; "rewrite" Wick-orders a_i* against every basis monomial.
    """
    _check_generator(i, trunc.d)
    if not 1 <= m <= trunc.N:
        raise IndexRangeError(f"annihilation source degree {m} outside 1..{trunc.N}")
    if method == "rewrite":
        from app.algebra.symbolic import annihilation_by_rewriting
        return annihilation_by_rewriting(i, m, trunc.coefficients, trunc.dim_cap)
    if method != "closed":
        raise ValueError(f"unknown annihilation method {method!r}")
    if m >= len(trunc.rs):
        r = build_R(trunc.T, m, trunc.dim_cap).matrix
    else:
        r = trunc.rs[m].matrix
    return mu_star_matrix(i, m, trunc.d, trunc.dim_cap) @ r


def verify_kernel_covariance(trunc: FockTruncation) -> float:
    """max_{i,n} ||P_{n+1} C_i K_n|| / max(1, ||P_{n+1}||) over kernel bases K_n."""
    worst = 0.0
    for n in range(min(trunc.N, len(trunc.kernels) - 1)):
        kernel = trunc.kernels[n]
        if kernel.dim == 0:
            continue
        p_next = trunc.grams[n + 1].matrix
        scale = max(1.0, operator_norm(p_next))
        for i in range(1, trunc.d + 1):
            image = p_next @ (creation_matrix(i, n, trunc) @ kernel.basis)
            worst = max(worst, operator_norm(image) / scale)
    return worst


def build_rep(trunc: FockTruncation, covariance_tol: Optional[float] = None) -> RepMatrices:
    if trunc.indefinite_degree is not None:
        verdict = trunc.verdicts[trunc.indefinite_degree]
        raise IndefiniteGramError(trunc.indefinite_degree, verdict.min_eigenvalue)
    covariance_tol = settings.rank_tol if covariance_tol is None else covariance_tol
    residual = verify_kernel_covariance(trunc)
    if residual > covariance_tol:
        raise QuotientError(residual)
    if residual > 0:
        logger.debug("kernel covariance residual %.3e", residual)
    creation, annihilation = {}, {}
    for n in range(trunc.N):
        for i in range(1, trunc.d + 1):
            c = creation_matrix(i, n, trunc)
            a = annihilation_matrix(i, n + 1, trunc)
            creation[(i, n)] = trunc.Q[n + 1] @ c @ trunc.Qinv[n]
            annihilation[(i, n)] = trunc.Q[n] @ a @ trunc.Qinv[n + 1]
    return RepMatrices(trunc.N, trunc.d, creation, annihilation, trunc.quotient_dims, residual)


def verify_adjoint(trunc: FockTruncation, rep: RepMatrices) -> float:
    """max ||C_i(n)^H - A_i(n+1)|| in quotient coordinates."""
    worst = 0.0
    for key, c in rep.creation.items():
        worst = max(worst, operator_norm(c.conj().T - rep.annihilation[key]))
    return worst


def relation_defect(trunc: FockTruncation, rep: RepMatrices, i: int, j: int, n: int) -> np.ndarray:
    """A_i C_j - delta_ij - sum_kl T_ij^kl C_l A_k on quotient_n, 0 <= n <= N-1."""
    coeff = trunc.coefficients.coeff
    dim = rep.quotient_dims[n]
    defect = rep.annihilation[(i, n)] @ rep.creation[(j, n)]
    if i == j:
        defect = defect - identity(dim)
    if n >= 1:
        for k in range(1, trunc.d + 1):
            for l in range(1, trunc.d + 1):
                t = coeff[i - 1, j - 1, k - 1, l - 1]
                if t != 0:
                    defect = defect - t * (rep.creation[(l, n - 1)] @ rep.annihilation[(k, n - 1)])
    return defect


def verify_relations(trunc: FockTruncation, rep: RepMatrices) -> float:
    worst = 0.0
    for n in range(trunc.N):
        for i in range(1, trunc.d + 1):
            for j in range(1, trunc.d + 1):
                worst = max(worst, operator_norm(relation_defect(trunc, rep, i, j, n)))
    return worst


def verify_annihilation_paths(trunc: FockTruncation) -> float:
    """Largest discrepancy between mu(e_i*) R_m and the rewritten annihilation, pre-quotient."""
    worst = 0.0
    for m in range(1, trunc.N + 1):
        for i in range(1, trunc.d + 1):
            closed = annihilation_matrix(i, m, trunc, "closed")
            rewritten = annihilation_matrix(i, m, trunc, "rewrite")
            worst = max(worst, operator_norm(closed - rewritten))
    return worst


def cuntz_toeplitz_residual(trunc: FockTruncation, rep: RepMatrices) -> float:
    """max ||A_i C_j - delta_ij|| over all degrees below N."""
    worst = 0.0
    for n in range(trunc.N):
        for i in range(1, trunc.d + 1):
            for j in range(1, trunc.d + 1):
                product = rep.annihilation[(i, n)] @ rep.creation[(j, n)]
                if i == j:
                    product = product - identity(rep.quotient_dims[n])
                worst = max(worst, operator_norm(product))
    return worst


def norm_growth(trunc: FockTruncation, rep: RepMatrices, tol: Optional[float] = None) -> NormGrowth:
    """
    Operator norms of the creation blocks per generator and degree. The trend compares
    the last increment of the squared maximal norm with the first one.
    """
    tol = settings.rank_tol if tol is None else tol
    norms = [[operator_norm(rep.creation[(i, n)]) for n in range(trunc.N)] for i in range(1, trunc.d + 1)]
    max_by_degree = [max(column) for column in zip(*norms)]
    if len(max_by_degree) < 3:
        trend = "undetermined"
    else:
        increments = np.diff(np.square(max_by_degree))
        first, last = float(increments[0]), float(increments[-1])
        trend = "unbounded_trend" if first > tol and last >= 0.9 * first else "bounded"
    return NormGrowth(norms=norms, max_by_degree=max_by_degree, trend=trend)


def quotient_reconstruction_residual(trunc: FockTruncation) -> float:
    """max_n ||Q_n^H Q_n - P_n|| / scale, which stays below the kernel tolerance."""
    worst = 0.0
    for n, q in enumerate(trunc.Q):
        p = trunc.grams[n].matrix
        worst = max(worst, operator_norm(q.conj().T @ q - p) / spectral_scale(np.array([operator_norm(p)])))
    return worst
