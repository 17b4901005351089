import itertools
import math

import numpy as np
import pytest

from app.algebra.coefficients import (
    build_T,
    preset_q_ccr,
    preset_tccr,
    random_coefficients,
    random_psd_coefficients,
)
from app.algebra.operators import (
    Operator,
    build_P,
    build_P_sequence,
    build_R,
    check_braid,
    classify_positivity,
    expanded_P,
    lift,
    predicted_kernel,
)
from app.errors import DimensionCapExceeded, IndexRangeError
from app.models import PositivityClass
from app.numerics import identity, kernel_basis, subspace_equal
from tests.support import q_matrix, random_valid_q


def q_factorial(n, q):
    """[n]_q! with [k]_q = 1 + q + ... + q^{k-1}."""
    return math.prod(sum(q ** j for j in range(k)) for k in range(1, n + 1))


@pytest.mark.parametrize("q", [-0.9, -0.5, 0.0, 0.5, 0.9, 1.0])
def test_scalar_gram_is_q_factorial(q):
    t = build_T(preset_q_ccr([[q]]))
    for n, p in enumerate(build_P_sequence(t, 8)):
        assert p.matrix.shape == (1, 1)
        assert p.matrix[0, 0].real == pytest.approx(q_factorial(n, q), abs=1e-12, rel=1e-12)
        assert abs(p.matrix[0, 0].imag) < 1e-12


def test_low_degrees():
    t = build_T(preset_tccr(0.5, 2))
    assert np.array_equal(build_R(t, 1).matrix, identity(2))
    assert np.allclose(build_R(t, 2).matrix, identity(4) + t.matrix)
    assert np.array_equal(build_P(t, 0).matrix, identity(1))
    assert np.array_equal(build_P(t, 1).matrix, identity(2))
    assert np.allclose(build_P(t, 2).matrix, identity(4) + t.matrix)


def test_lift_places_T_on_adjacent_legs():
    t = build_T(preset_tccr(0.5, 2))
    assert np.allclose(lift(t, 3, 1).matrix, np.kron(t.matrix, identity(2)))
    assert np.allclose(lift(t, 3, 2).matrix, np.kron(identity(2), t.matrix))
    with pytest.raises(IndexRangeError):
        lift(t, 3, 3)


def _lift_by_index_loop(t, n, i):
    """T on legs i, i+1 of H^{(x)n}, entry by entry."""
    d = t.dim_per_leg
    out = np.zeros((d ** n, d ** n), dtype=complex)
    for row in itertools.product(range(d), repeat=n):
        for col in itertools.product(range(d), repeat=n):
            if row[:i - 1] != col[:i - 1] or row[i + 1:] != col[i + 1:]:
                continue
            r = np.ravel_multi_index(row, (d,) * n)
            c = np.ravel_multi_index(col, (d,) * n)
            out[r, c] = t.matrix[row[i - 1] * d + row[i], col[i - 1] * d + col[i]]
    return out


@pytest.mark.parametrize("c", [preset_tccr(0.5, 2), preset_q_ccr(q_matrix(3, 0.3 + 0.4j))], ids=["tccr", "q-ccr"])
def test_lift_matches_index_loop(c):
    t = build_T(c)
    for i in (1, 2, 3):
        assert np.array_equal(lift(t, 4, i).matrix, _lift_by_index_loop(t, 4, i))
    d = t.dim_per_leg
    assert np.array_equal(lift(t, 4, 2).matrix, np.kron(identity(d), np.kron(t.matrix, identity(d))))


def test_lift_of_flip_swaps_last_two_legs():
    flip = build_T(preset_q_ccr(np.ones((2, 2))))
    lifted = lift(flip, 3, 2).matrix
    for a, b, c in itertools.product(range(2), repeat=3):
        assert lifted[a * 4 + c * 2 + b, a * 4 + b * 2 + c] == 1
    assert np.count_nonzero(lifted) == 8


def test_operator_shape_is_checked():
    with pytest.raises(ValueError):
        Operator(2, 2, identity(3))


def test_recursion_matches_product_form(rng):
    for d in (1, 2):
        t = build_T(random_coefficients(d, rng, target_norm=0.8))
        for n, p in enumerate(build_P_sequence(t, 4)):
            assert np.allclose(p.matrix, expanded_P(t, n).matrix, atol=1e-12)


def test_gram_sequence_respects_dimension_cap():
    t = build_T(preset_tccr(0.5, 3))
    with pytest.raises(DimensionCapExceeded):
        build_P_sequence(t, 5, dim_cap=100)


def test_q_ccr_is_braided(rng):
    for _ in range(20):
        d = int(rng.integers(1, 4))
        t = build_T(preset_q_ccr(random_valid_q(d, rng)))
        holds, residual = check_braid(t)
        assert holds
        assert residual < 1e-12


@pytest.mark.parametrize("mu", [0.1, 0.3, 0.5, 0.7, 0.9])
@pytest.mark.parametrize("d", [2, 3])
def test_tccr_is_braided(mu, d):
    holds, residual = check_braid(build_T(preset_tccr(mu, d)))
    assert holds
    assert residual < 1e-12


def test_generic_tensor_is_not_braided(rng):
    holds, residual = check_braid(build_T(random_coefficients(2, rng, target_norm=0.5)))
    assert not holds
    assert residual > 1e-6


def test_classify_positivity():
    assert classify_positivity(Operator(1, 3, np.diag([1.0, 2.0, 3.0]))).verdict == PositivityClass.positive_definite
    semi = classify_positivity(Operator(1, 3, np.diag([1.0, 0.0, 3.0])))
    assert semi.verdict == PositivityClass.positive_semidefinite
    assert semi.kernel_dim == 1
    bad = classify_positivity(Operator(1, 3, np.diag([1.0, 0.0, -0.5])), keep_spectrum=True)
    assert bad.verdict == PositivityClass.indefinite
    assert bad.min_eigenvalue == pytest.approx(-0.5)
    assert bad.eigenvalues == pytest.approx([-0.5, 0.0, 1.0])


def test_small_norm_gives_definite_grams(rng):
    """||T|| < sqrt(2) - 1 keeps every P_n strictly positive."""
    for _ in range(20):
        t = build_T(random_coefficients(2, rng, target_norm=0.4))
        for p in build_P_sequence(t, 4)[2:]:
            assert classify_positivity(p).verdict == PositivityClass.positive_definite


def test_positive_T_gives_definite_grams(rng):
    for _ in range(20):
        t = build_T(random_psd_coefficients(2, rng, target_norm=1.0))
        for p in build_P_sequence(t, 4)[2:]:
            assert classify_positivity(p).verdict == PositivityClass.positive_definite


def _in_range_presets():
    presets = []
    for d in (1, 2, 3):
        for value in (0.3, 0.9):
            presets.append(preset_q_ccr(q_matrix(d, value)))
        presets.append(preset_q_ccr(q_matrix(d, np.exp(1j * np.pi / 3), 0.0)))
    for d in (2, 3):
        for mu in (0.3, 0.5, 0.7):
            presets.append(preset_tccr(mu, d))
    return presets


@pytest.mark.parametrize("c", _in_range_presets())
def test_braided_contractions_never_indefinite(c):
    t = build_T(c)
    for p in build_P_sequence(t, 6)[2:]:
        assert classify_positivity(p).verdict != PositivityClass.indefinite


def test_predicted_kernel_dimensions():
    unimodular = build_T(preset_q_ccr(q_matrix(2, 1.0, 0.0)))
    assert predicted_kernel(unimodular, 1).dim == 1
    assert predicted_kernel(build_T(preset_tccr(0.5, 3)), 1).dim == 3
    assert predicted_kernel(build_T(preset_q_ccr(q_matrix(2, 0.5))), 2).dim == 0


def _kernel_cases():
    cases = [preset_q_ccr(q_matrix(2, q12, 0.0)) for q12 in (1.0, 1j, np.exp(1j * np.pi / 3))]
    cases += [preset_tccr(mu, d) for d in (2, 3) for mu in (0.3, 0.7)]
    return cases


@pytest.mark.parametrize("c", _kernel_cases())
def test_kernel_of_gram_is_generated_by_one_plus_T(c):
    t = build_T(c)
    for p in build_P_sequence(t, 5)[2:]:
        n = p.degree - 1
        observed = kernel_basis(p.matrix)
        equal, distance = subspace_equal(observed, predicted_kernel(t, n))
        assert equal, f"degree {p.degree}: distance {distance}"
        assert distance < 1e-8


def test_degree_two_kernel_dimensions():
    assert kernel_basis(build_P(build_T(preset_q_ccr(q_matrix(2, 1j, 0.0))), 2).matrix).dim == 1
    for d in (2, 3):
        assert kernel_basis(build_P(build_T(preset_tccr(0.5, d)), 2).matrix).dim == d * (d - 1) // 2
