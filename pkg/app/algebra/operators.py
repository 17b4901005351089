"""
The operator family T_i, R_n, P_n on tensor powers of H, the braid check, positivity
verdicts for the Gram operators P_n, and the kernel predicted by the braided
kernel theorem (ker P_{n+1} = sum_k ker(1+T_k)).
"""
import logging
from dataclasses import dataclass
from typing import Iterator, List, NamedTuple, Optional

import numpy as np

from app.config import settings
from app.errors import IndexRangeError
from app.models import PositivityClass, PositivityVerdict
from app.numerics import (
    Subspace,
    check_dimension,
    hermitian_eigen,
    hermitian_part,
    identity,
    kernel_basis,
    kron,
    operator_norm,
    orthonormal_span,
    spectral_scale,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense operator on H^{(x)degree}, H = C^dim_per_leg. Degree 0 is the vacuum line."""
    degree: int
    dim_per_leg: int
    matrix: np.ndarray

    def __post_init__(self):
        expected = self.dim_per_leg ** self.degree
        if self.matrix.shape != (expected, expected):
            raise ValueError(
                f"degree-{self.degree} operator over d={self.dim_per_leg} must be "
                f"{expected}x{expected}, got {self.matrix.shape}"
            )
        self.matrix.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def identity(cls, degree: int, d: int) -> "Operator":
        return cls(degree, d, identity(d ** degree))


class BraidResult(NamedTuple):
    holds: bool
    residual: float


def _require_degree_two(t: Operator):
    if t.degree != 2:
        raise ValueError(f"T must act on H (x) H, got a degree-{t.degree} operator")


def lift(t: Operator, n: int, i: int, dim_cap: Optional[int] = None) -> Operator:
    """T_i = 1^{(x)(i-1)} (x) T (x) 1^{(x)(n-i-1)} on H^{(x)n}, 1 <= i <= n-1."""
    _require_degree_two(t)
    if not 1 <= i <= n - 1:
        raise IndexRangeError(f"leg position {i} outside 1..{n - 1}")
    d = t.dim_per_leg
    check_dimension(d ** n, dim_cap)
    left = identity(d ** (i - 1))
    right = identity(d ** (n - i - 1))
    return Operator(n, d, kron(left, kron(t.matrix, right, dim_cap), dim_cap))


def build_R(t: Operator, n: int, dim_cap: Optional[int] = None) -> Operator:
    """R_n = 1 + T_1 + T_1T_2 + ... + T_1...T_{n-1}; R_1 is the identity on H."""
    _require_degree_two(t)
    if n < 1:
        raise IndexRangeError(f"R_n needs n >= 1, got {n}")
    d = t.dim_per_leg
    check_dimension(d ** n, dim_cap)
    total = identity(d ** n)
    product = identity(d ** n)
    for k in range(1, n):
        product = product @ lift(t, n, k, dim_cap).matrix
        total = total + product
    return Operator(n, d, total)


def iter_P(t: Operator, n_max: int, dim_cap: Optional[int] = None) -> Iterator[Operator]:
    """Yield P_0..P_{n_max} by the recursion P_2 = R_2, P_{n+1} = (1 (x) P_n) R_{n+1}."""
    _require_degree_two(t)
    d = t.dim_per_leg
    check_dimension(d ** n_max, dim_cap)
    previous = Operator.identity(0, d)
    yield previous
    if n_max >= 1:
        previous = Operator.identity(1, d)
        yield previous
    for n in range(2, n_max + 1):
        r = build_R(t, n, dim_cap).matrix
        p = r if n == 2 else kron(identity(d), previous.matrix, dim_cap) @ r
        logger.debug("built P_%d (%dx%d)", n, p.shape[0], p.shape[1])
        previous = Operator(n, d, p)
        yield previous


def build_P_sequence(t: Operator, n_max: int, dim_cap: Optional[int] = None) -> List[Operator]:
    return list(iter_P(t, n_max, dim_cap))


def build_P(t: Operator, n: int, dim_cap: Optional[int] = None) -> Operator:
    if n < 0:
        raise IndexRangeError(f"P_n needs n >= 0, got {n}")
    return build_P_sequence(t, n, dim_cap)[n]


def expanded_P(t: Operator, n: int, dim_cap: Optional[int] = None) -> Operator:
    """P_n as the product (1^{(x)(n-2)} (x) R_2)(1^{(x)(n-3)} (x) R_3)...(1 (x) R_{n-1}) R_n."""
    _require_degree_two(t)
    d = t.dim_per_leg
    if n <= 1:
        return Operator.identity(max(n, 0), d)
    check_dimension(d ** n, dim_cap)
    p = identity(d ** n)
    for k in range(2, n + 1):
        p = p @ kron(identity(d ** (n - k)), build_R(t, k, dim_cap).matrix, dim_cap)
    return Operator(n, d, p)


def check_braid(t: Operator, tol: Optional[float] = None, dim_cap: Optional[int] = None) -> BraidResult:
    """Residual ||T_1T_2T_1 - T_2T_1T_2|| on H^{(x)3}; holds when it is <= tol*(1+||T||^3)."""
    tol = settings.braid_tol if tol is None else tol
    t1 = lift(t, 3, 1, dim_cap).matrix
    t2 = lift(t, 3, 2, dim_cap).matrix
    residual = operator_norm(t1 @ t2 @ t1 - t2 @ t1 @ t2)
    bound = tol * (1.0 + operator_norm(t.matrix) ** 3)
    return BraidResult(residual <= bound, residual)


def classify_positivity(p: Operator, tol: Optional[float] = None, keep_spectrum: bool = False) -> PositivityVerdict:
    """
    Positivity verdict for a Gram operator. P is symmetrized before the eigensolve and
    the asymmetry it carried is reported; tol is relative to max(1, ||P||).
    """
    tol = settings.rank_tol if tol is None else tol
    sym, asymmetry = hermitian_part(p.matrix)
    values, _ = hermitian_eigen(p.matrix)
    if asymmetry > 1e-12 * (1.0 + spectral_scale(values)):
        logger.warning("P_%d carried asymmetry %.3e before symmetrization", p.degree, asymmetry)
    tol_used = tol * spectral_scale(values)
    min_eig = float(values[0])
    kernel_dim = int(np.sum(np.abs(values) <= tol_used))
    if min_eig < -tol_used:
        verdict = PositivityClass.indefinite
    elif min_eig > tol_used:
        verdict = PositivityClass.positive_definite
        kernel_dim = 0
    else:
        verdict = PositivityClass.positive_semidefinite
    return PositivityVerdict(
        degree=p.degree,
        verdict=verdict,
        min_eigenvalue=min_eig,
        kernel_dim=kernel_dim,
        tol_used=tol_used,
        asymmetry=asymmetry,
        eigenvalues=[float(v) for v in values] if keep_spectrum else [],
    )


def one_plus_T_kernel(t: Operator, tol: Optional[float] = None) -> Subspace:
    _require_degree_two(t)
    return kernel_basis(identity(t.dim) + t.matrix, tol)


def predicted_kernel(t: Operator, n: int, tol: Optional[float] = None, dim_cap: Optional[int] = None) -> Subspace:
    """Orthonormal basis of sum_{k=1..n} H^{(x)(k-1)} (x) ker(1+T) (x) H^{(x)(n-k)} inside H^{(x)(n+1)}."""
    if n < 1:
        raise IndexRangeError(f"predicted_kernel needs n >= 1, got {n}")
    d = t.dim_per_leg
    ambient = check_dimension(d ** (n + 1), dim_cap)
    base = one_plus_T_kernel(t, tol)
    if base.dim == 0:
        return Subspace.empty(ambient)
    blocks = [
        kron(identity(d ** (k - 1)), kron(base.basis, identity(d ** (n - k)), dim_cap), dim_cap)
        for k in range(1, n + 1)
    ]
    return orthonormal_span(np.hstack(blocks), ambient, tol)
