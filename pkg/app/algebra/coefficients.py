"""
The coefficient tensor of a Wick algebra and the operator T it assembles.

``coeff[i, j, k, l]`` stores T_ij^kl (0-based) of the relations

    a_i* a_j = delta_ij 1 + sum_{k,l} T_ij^kl a_l a_k*,

and the assembled operator on H (x) H has matrix entries

    <e_a (x) e_b, T (e_c (x) e_d)> = coeff[a, c, d, b].

With this placement the Hermitian Wick symmetry T_ij^kl = conj(T_ji^lk) is the same
statement as T = T*, and the Fock representation satisfies the relations exactly.
"""
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import ValidationError

from app.algebra.operators import Operator
from app.config import settings
from app.errors import AlgebraDocumentError, PresetError, ValidationFailed, WickSymmetryError
from app.models import AlgebraDescriptor, AlgebraDocument, ValidationResult
from app.numerics import hermitian_eigen, operator_norm

logger = logging.getLogger(__name__)

PresetKind = Literal["q_ccr", "tccr", "zero", "explicit"]


@dataclass(frozen=True, eq=False)
class PresetSpec:
    kind: PresetKind = "explicit"
    q: Optional[np.ndarray] = None
    mu: Optional[float] = None
    allow_modulus_violation: bool = False


@dataclass(frozen=True, eq=False)
class WickCoefficients:
    coeff: np.ndarray
    preset: PresetSpec = PresetSpec()

    def __post_init__(self):
        arr = np.array(self.coeff, dtype=np.complex128)
        if arr.ndim != 4 or len(set(arr.shape)) != 1 or arr.shape[0] < 1:
            raise ValueError(f"coefficient tensor must have shape (d, d, d, d), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("coefficient tensor has non-finite entries")
        arr.setflags(write=False)
        object.__setattr__(self, "coeff", arr)

    @property
    def d(self) -> int:
        return self.coeff.shape[0]

    def is_zero(self) -> bool:
        return not np.any(self.coeff)


def wick_partner(coeff: np.ndarray) -> np.ndarray:
    """partner[i, j, k, l] = conj(coeff[j, i, l, k])."""
    return np.conj(np.transpose(coeff, (1, 0, 3, 2)))


def symmetrize(coeff: np.ndarray) -> np.ndarray:
    return (coeff + wick_partner(coeff)) / 2


def operator_matrix(coeff: np.ndarray) -> np.ndarray:
    """Assemble T on H (x) H without validating the tensor."""
    d = coeff.shape[0]
    return np.einsum("ijkl->iljk", coeff).reshape(d * d, d * d)


def coefficients_from_operator(matrix, d: int, preset: Optional[PresetSpec] = None) -> WickCoefficients:
    """Pull a Hermitian matrix on H (x) H back to a Wick-symmetric coefficient tensor."""
    m = np.asarray(matrix, dtype=np.complex128).reshape(d, d, d, d)
    return WickCoefficients(np.einsum("iljk->ijkl", m), preset or PresetSpec())


def validate(c: WickCoefficients) -> ValidationResult:
    symmetry = float(np.max(np.abs(c.coeff - wick_partner(c.coeff))))
    t = operator_matrix(c.coeff)
    hermitian = operator_norm(t - t.conj().T)
    scale = max(1.0, float(np.max(np.abs(c.coeff))))
    threshold = settings.symmetry_tol * scale
    violations = []
    if symmetry > threshold:
        violations.append(f"Wick symmetry T_ij^kl = conj(T_ji^lk) violated: max deviation {symmetry:.6g}")
    herm_threshold = settings.symmetry_tol * (1.0 + operator_norm(t))
    if hermitian > herm_threshold:
        violations.append(f"assembled T is not self-adjoint: ||T - T*|| = {hermitian:.6g}")
    return ValidationResult(
        ok=not violations,
        d=c.d,
        symmetry_deviation=symmetry,
        hermitian_deviation=hermitian,
        threshold=threshold,
        violations=violations,
    )


def from_array(coeff, tol: Optional[float] = None, preset: Optional[PresetSpec] = None) -> WickCoefficients:
    """Accept a tensor whose Wick asymmetry is float noise, symmetrizing it; refuse anything larger."""
    tol = settings.symmetry_tol if tol is None else tol
    raw = WickCoefficients(coeff, preset or PresetSpec())
    deviation = float(np.max(np.abs(raw.coeff - wick_partner(raw.coeff))))
    if deviation > tol * max(1.0, float(np.max(np.abs(raw.coeff)))):
        raise WickSymmetryError(deviation)
    if deviation > 0:
        logger.warning("symmetrizing coefficient tensor (deviation %.3e)", deviation)
    return WickCoefficients(symmetrize(raw.coeff), raw.preset)


def preset_q_ccr(q, allow_modulus_violation: bool = False) -> WickCoefficients:
    """q_ij-CCR: a_i* a_j = delta_ij + q_ij a_j a_i*, so T e_i (x) e_j = q_ji e_j (x) e_i."""
    q = np.atleast_2d(np.asarray(q, dtype=np.complex128))
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise PresetError(f"q must be a square matrix, got shape {q.shape}")
    if not np.all(np.isfinite(q)):
        raise PresetError("q has non-finite entries")
    asymmetry = float(np.max(np.abs(q - q.conj().T)))
    if asymmetry > settings.symmetry_tol * max(1.0, float(np.max(np.abs(q)))):
        raise PresetError(f"q must satisfy q_ji = conj(q_ij); max deviation {asymmetry:.6g}")
    modulus = float(np.max(np.abs(q)))
    if modulus > 1.0 + settings.symmetry_tol and not allow_modulus_violation:
        raise PresetError(f"|q_ij| <= 1 required (max modulus {modulus:.6g}); pass the modulus override to explore")
    q = (q + q.conj().T) / 2
    d = q.shape[0]
    coeff = np.zeros((d, d, d, d), dtype=np.complex128)
    for i in range(d):
        for j in range(d):
            coeff[i, j, i, j] = q[i, j]
    return WickCoefficients(coeff, PresetSpec("q_ccr", q=q, allow_modulus_violation=allow_modulus_violation))


def preset_tccr(mu: float, d: int, allow_modulus_violation: bool = False) -> WickCoefficients:
    """
    Twisted CCR:
        a_i* a_i = 1 + mu^2 a_i a_i* - (1 - mu^2) sum_{k<i} a_k a_k*,
        a_i* a_j = mu a_j a_i*  (i != j).
    The printed range is 0 < mu < 1; the override admits -1 <= mu <= 1.
    """
    mu = float(mu)
    if d < 1:
        raise PresetError(f"d must be at least 1, got {d}")
    if allow_modulus_violation:
        if not -1.0 <= mu <= 1.0:
            raise PresetError(f"extended TCCR needs -1 <= mu <= 1, got {mu}")
        if not 0.0 < mu < 1.0:
            logger.info("TCCR with mu=%g is outside 0 < mu < 1 (extension)", mu)
    elif not 0.0 < mu < 1.0:
        raise PresetError(f"TCCR needs 0 < mu < 1, got {mu}")
    coeff = np.zeros((d, d, d, d), dtype=np.complex128)
    for i in range(d):
        coeff[i, i, i, i] = mu ** 2
        for k in range(i):
            coeff[i, i, k, k] = -(1.0 - mu ** 2)
        for j in range(d):
            if j != i:
                coeff[i, j, i, j] = mu
    return WickCoefficients(coeff, PresetSpec("tccr", mu=mu, allow_modulus_violation=allow_modulus_violation))


def preset_zero(d: int) -> WickCoefficients:
    if d < 1:
        raise PresetError(f"d must be at least 1, got {d}")
    return WickCoefficients(np.zeros((d, d, d, d), dtype=np.complex128), PresetSpec("zero"))


def build_T(c: WickCoefficients) -> Operator:
    result = validate(c)
    if not result.ok:
        raise ValidationFailed(result)
    t = operator_matrix(c.coeff)
    return Operator(2, c.d, (t + t.conj().T) / 2)


def _rescale(c: WickCoefficients, target_norm: Optional[float]) -> WickCoefficients:
    if target_norm is None:
        return c
    norm = operator_norm(operator_matrix(c.coeff))
    if norm == 0.0:
        return c
    return WickCoefficients(c.coeff * (target_norm / norm), c.preset)


def random_coefficients(d: int, rng: np.random.Generator, target_norm: Optional[float] = None) -> WickCoefficients:
    """Random complex tensor, symmetrized to Wick symmetry, optionally rescaled so ||T|| = target_norm."""
    shape = (d, d, d, d)
    raw = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return _rescale(WickCoefficients(symmetrize(raw)), target_norm)


def random_psd_coefficients(d: int, rng: np.random.Generator, rank: Optional[int] = None,
                            target_norm: Optional[float] = None, max_attempts: int = 20) -> WickCoefficients:
    """Random valid tensor whose assembled T is positive semidefinite (a Gram matrix on H (x) H)."""
    rank = d * d if rank is None else rank
    for attempt in range(max_attempts):
        b = rng.standard_normal((d * d, rank)) + 1j * rng.standard_normal((d * d, rank))
        candidate = coefficients_from_operator(b @ b.conj().T, d)
        candidate = WickCoefficients(symmetrize(candidate.coeff))
        t = operator_matrix(candidate.coeff)
        values, _ = hermitian_eigen((t + t.conj().T) / 2)
        if values[0] >= -settings.symmetry_tol * max(1.0, float(values[-1])):
            return _rescale(candidate, target_norm)
        logger.debug("PSD draw %d lost positivity after symmetrization; retrying", attempt)
    raise RuntimeError(f"no PSD coefficient tensor after {max_attempts} attempts")


def _complex_array(pairs, shape, name: str) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float)
    if arr.shape != tuple(shape) + (2,):
        raise AlgebraDocumentError(f"'{name}' must have shape {tuple(shape)} of [re, im] pairs, got {arr.shape[:-1]}")
    return arr[..., 0] + 1j * arr[..., 1]


def load_document(doc: AlgebraDocument, symmetrize_input: bool = True) -> WickCoefficients:
    """
    Build coefficients from an input document. With symmetrize_input=False an explicit
    tensor is taken as entered so that validate() can report on it.
    """
    d = doc.d
    if doc.coeff is not None:
        coeff = _complex_array(doc.coeff, (d, d, d, d), "coeff")
        if symmetrize_input:
            return from_array(coeff)
        return WickCoefficients(coeff)
    preset = doc.preset
    if preset.kind == "zero":
        return preset_zero(d)
    if preset.kind == "q_ccr":
        if preset.q is None:
            raise AlgebraDocumentError("q_ccr preset needs 'q'")
        return preset_q_ccr(_complex_array(preset.q, (d, d), "q"), doc.allow_modulus_violation)
    if preset.mu is None:
        raise AlgebraDocumentError("tccr preset needs 'mu'")
    return preset_tccr(preset.mu, d, doc.allow_modulus_violation)


def read_document(path) -> AlgebraDocument:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise AlgebraDocumentError(f"cannot read algebra document {path}: {exc}") from exc
    try:
        return AlgebraDocument.model_validate_json(text)
    except ValidationError as exc:
        raise AlgebraDocumentError(f"malformed algebra document {path}: {exc}") from exc


def to_document(c: WickCoefficients) -> AlgebraDocument:
    pairs = np.stack([c.coeff.real, c.coeff.imag], axis=-1).tolist()
    return AlgebraDocument(d=c.d, coeff=pairs)


def format_complex(z: complex) -> str:
    """Compact literal: reals as plain floats, otherwise (re+imi)."""
    z = complex(z.real + 0.0, z.imag + 0.0)
    if z.imag == 0.0:
        return f"{z.real:.12g}"
    sign = "+" if z.imag >= 0 else "-"
    return f"({z.real:.12g}{sign}{abs(z.imag):.12g}i)"


def describe(c: WickCoefficients) -> AlgebraDescriptor:
    preset = c.preset
    if preset.kind == "q_ccr":
        rows = ", ".join("[" + ", ".join(format_complex(z) for z in row) + "]" for row in preset.q)
        summary = f"q_ij-CCR, d={c.d}, q=[{rows}]"
    elif preset.kind == "tccr":
        summary = f"twisted CCR, d={c.d}, mu={preset.mu:.12g}"
    elif preset.kind == "zero":
        summary = f"T=0 (Cuntz-Toeplitz), d={c.d}"
    else:
        norm = operator_norm(operator_matrix(c.coeff))
        summary = f"explicit tensor, d={c.d}, ||T||={norm:.12g}"
    return AlgebraDescriptor(kind=preset.kind, d=c.d, summary=summary)


def dumps_document(c: WickCoefficients) -> str:
    return json.dumps(to_document(c).model_dump(exclude_none=True))
