"""
Dense complex linear-algebra substrate.

Conventions used by every other module:

* A ComplexMatrix is a 2-D ``numpy.complex128`` array in C (row-major) order.
* Tensor powers use the most-significant-left ordering: the basis vector
  e_{i_1} (x) ... (x) e_{i_n} of H^{(x)n} sits at flat index
  ``i_1*d**(n-1) + ... + i_n`` (0-based indices), which is exactly the ordering
  ``numpy.kron`` produces with its LEFT factor as the most significant index.
"""
import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np
import scipy.linalg

from app.config import settings
from app.errors import (
    DimensionCapExceeded,
    EigenConvergenceError,
    NotHermitianError,
    SubspaceMismatchError,
)
from app.utils.helpers import warn_if_memory_heavy

logger = logging.getLogger(__name__)


def as_matrix(a) -> np.ndarray:
    """Coerce to a finite 2-D complex matrix."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got an array of shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def check_dimension(dim: int, dim_cap: Optional[int] = None) -> int:
    cap = settings.dim_cap if dim_cap is None else dim_cap
    if dim > cap:
        raise DimensionCapExceeded(dim, cap)
    warn_if_memory_heavy(dim, dim, settings.memory_fraction)
    return dim


def kron(a, b, dim_cap: Optional[int] = None) -> np.ndarray:
    """Kronecker product, left factor most significant: K[i*rB+k, j*cB+l] = A[i,j]*B[k,l]."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    rows = a.shape[0] * b.shape[0]
    cols = a.shape[1] * b.shape[1]
    check_dimension(max(rows, cols), dim_cap)
    return np.kron(a, b)


def identity(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=np.complex128)


def hermitian_part(a) -> Tuple[np.ndarray, float]:
    """(A + A^H)/2 together with the asymmetry residual ||A - A^H||."""
    a = as_matrix(a)
    residual = float(np.linalg.norm(a - a.conj().T, 2)) if a.size else 0.0
    return (a + a.conj().T) / 2, residual


class EigenDecomposition(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray


def hermitian_eigen(a, tol: Optional[float] = None) -> EigenDecomposition:
    """
    Eigendecomposition of a Hermitian matrix with ascending real eigenvalues.

    Inputs whose asymmetry exceeds tol*(1+||A||) are rejected; the accepted input is
    symmetrized before it reaches LAPACK.
    """
    tol = settings.hermitian_tol if tol is None else tol
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"hermitian_eigen needs a square matrix, got {a.shape}")
    sym, residual = hermitian_part(a)
    scale = 1.0 + operator_norm(a)
    if residual > tol * scale:
        raise NotHermitianError(residual, scale)
    try:
        values, vectors = scipy.linalg.eigh(sym)
    except np.linalg.LinAlgError as exc:
        raise EigenConvergenceError(str(exc)) from exc
    return EigenDecomposition(values, vectors)


@dataclass(frozen=True, eq=False)
class Subspace:
    """Orthonormal basis (as matrix columns) of a subspace of C^ambient_dim."""
    ambient_dim: int
    basis: np.ndarray

    def __post_init__(self):
        if self.basis.shape[0] != self.ambient_dim:
            raise SubspaceMismatchError(
                f"basis has {self.basis.shape[0]} rows, ambient dimension is {self.ambient_dim}"
            )

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    @classmethod
    def empty(cls, ambient_dim: int) -> "Subspace":
        return cls(ambient_dim, np.zeros((ambient_dim, 0), dtype=np.complex128))


def spectral_scale(values: np.ndarray) -> float:
    return max(1.0, float(np.max(np.abs(values)))) if values.size else 1.0


def kernel_basis(a, tol: Optional[float] = None) -> Subspace:
    """Span of the eigenvectors with |lambda| <= tol*max(1, ||A||)."""
    tol = settings.rank_tol if tol is None else tol
    values, vectors = hermitian_eigen(a)
    mask = np.abs(values) <= tol * spectral_scale(values)
    logger.debug("kernel of %dx%d matrix has dimension %d", vectors.shape[0], vectors.shape[0], int(mask.sum()))
    return Subspace(vectors.shape[0], vectors[:, mask])


def orthonormal_span(columns, ambient_dim: int, tol: Optional[float] = None) -> Subspace:
    """Orthonormal basis of the column span; singular values below tol*max(1, s_max) are dropped."""
    tol = settings.rank_tol if tol is None else tol
    columns = np.asarray(columns, dtype=np.complex128)
    if columns.ndim != 2 or columns.shape[1] == 0:
        return Subspace.empty(ambient_dim)
    u, s, _ = scipy.linalg.svd(columns, full_matrices=False)
    keep = s > tol * max(1.0, s[0] if s.size else 0.0)
    return Subspace(ambient_dim, u[:, keep])


def subspace_equal(u: Subspace, v: Subspace, tol: Optional[float] = None) -> Tuple[bool, float]:
    """Compare two subspaces through the spectral norm of their projector difference."""
    tol = settings.kernel_distance_tol if tol is None else tol
    if u.ambient_dim != v.ambient_dim:
        raise SubspaceMismatchError(f"ambient dimensions differ: {u.ambient_dim} vs {v.ambient_dim}")
    distance = operator_norm(u.projector() - v.projector())
    return distance <= tol, distance


def operator_norm(a) -> float:
    """Largest singular value; 0 for an empty block."""
    a = np.asarray(a, dtype=np.complex128)
    if a.size == 0:
        return 0.0
    return float(scipy.linalg.svdvals(a)[0])
