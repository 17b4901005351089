"""Shared builders for the test suite."""
import numpy as np

from app.algebra.coefficients import preset_q_ccr, preset_tccr


def q_matrix(d, off_diagonal, diagonal=None):
    """
    q_ij = off_diagonal for i < j and its conjugate for i > j. The diagonal defaults to
    off_diagonal when that is real and to 0 otherwise.
    """
    off = complex(off_diagonal)
    if diagonal is None:
        diagonal = off if off.imag == 0 else 0.0
    diag = complex(diagonal)
    q = np.full((d, d), off, dtype=np.complex128)
    q[np.tril_indices(d, -1)] = np.conj(off)
    np.fill_diagonal(q, diag)
    return q


def random_valid_q(d, rng, unimodular=False):
    """Random q with q_ji = conj(q_ij) and |q_ij| <= 1."""
    phases = np.exp(2j * np.pi * rng.random((d, d)))
    moduli = np.ones((d, d)) if unimodular else rng.random((d, d))
    q = np.triu(moduli * phases, 1)
    q = q + q.conj().T
    np.fill_diagonal(q, rng.uniform(-1, 1, d))
    return q


def preset_grid():
    """(label, coefficients) for presets inside their stated parameter ranges."""
    grid = []
    for d in (1, 2, 3):
        for value in (0.0, 0.3, 0.9):
            grid.append((f"q-ccr d={d} q={value}", preset_q_ccr(q_matrix(d, value))))
        grid.append((f"q-ccr d={d} unimodular", preset_q_ccr(q_matrix(d, 1.0, 0.0))))
    for d in (2, 3):
        for mu in (0.3, 0.5, 0.7):
            grid.append((f"tccr d={d} mu={mu}", preset_tccr(mu, d)))
    return grid
