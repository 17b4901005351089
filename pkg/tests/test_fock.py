import math
from dataclasses import replace

import numpy as np
import pytest

from app.algebra.coefficients import preset_q_ccr, preset_tccr, preset_zero, random_coefficients
from app.algebra.fock import (
    TensorVector,
    annihilation_matrix,
    build_rep,
    build_truncation,
    creation_matrix,
    cuntz_toeplitz_residual,
    fock_inner,
    mu_star,
    mu_star_matrix,
    norm_growth,
    quotient_reconstruction_residual,
    verify_adjoint,
    verify_annihilation_paths,
    verify_kernel_covariance,
    verify_relations,
)
from app.audit.engine import positivity_gate
from app.config import settings
from app.errors import DimensionCapExceeded, IndefiniteGramError, IndexRangeError
from tests.support import preset_grid, q_matrix


def test_tensor_vector_basis():
    v = TensorVector.basis([2, 1], 2)
    assert v.degree == 2
    assert np.flatnonzero(v.data).tolist() == [2]
    assert TensorVector.basis([], 3).data.tolist() == [1]
    with pytest.raises(IndexRangeError):
        TensorVector.basis([3], 2)


def test_fock_inner_products(scalar_q, zero2):
    trunc = build_truncation(scalar_q(0.5), 3)
    e = TensorVector.basis([1, 1], 1)
    assert fock_inner(e, e, trunc) == pytest.approx(1.5)
    assert fock_inner(e, TensorVector.basis([1], 1), trunc) == 0

    free = build_truncation(zero2, 3)
    x = TensorVector.basis([1, 2], 2)
    y = TensorVector.basis([2, 1], 2)
    assert fock_inner(x, x, free) == pytest.approx(1.0)
    assert fock_inner(x, y, free) == pytest.approx(0.0)
    with pytest.raises(IndexRangeError):
        fock_inner(TensorVector.basis([1] * 4, 2), TensorVector.basis([1] * 4, 2), free)


def test_unimodular_degree_two_is_degenerate(unimodular_i):
    trunc = build_truncation(unimodular_i, 2)
    x = TensorVector(2, 2, np.array([0, -1j, 1, 0]))
    assert abs(fock_inner(x, x, trunc)) < 1e-12


def test_mu_star_removes_leading_letter():
    assert np.flatnonzero(mu_star(1, TensorVector.basis([1, 2], 2)).data).tolist() == [1]
    assert not np.any(mu_star(2, TensorVector.basis([1, 2], 2)).data)
    vacuum = mu_star(1, TensorVector.basis([], 2))
    assert vacuum.degree == 0
    assert not np.any(vacuum.data)
    assert mu_star_matrix(2, 1, 2).tolist() == [[0, 1]]


def test_creation_tensors_on_the_left(zero2):
    trunc = build_truncation(zero2, 3)
    image = creation_matrix(1, 1, trunc) @ TensorVector.basis([2], 2).data
    assert np.array_equal(image, TensorVector.basis([1, 2], 2).data)
    with pytest.raises(IndexRangeError):
        creation_matrix(1, 3, trunc)


def test_free_annihilation(zero2):
    trunc = build_truncation(zero2, 3)
    a = annihilation_matrix(1, 2, trunc)
    assert np.array_equal(a @ TensorVector.basis([1, 2], 2).data, TensorVector.basis([2], 2).data)
    assert not np.any(a @ TensorVector.basis([2, 1], 2).data)


@pytest.mark.parametrize("q", [-0.5, 0.5, 0.9])
def test_scalar_annihilation_is_q_number(scalar_q, q):
    trunc = build_truncation(scalar_q(q), 6)
    for n in range(6):
        a = annihilation_matrix(1, n + 1, trunc)
        assert a[0, 0] == pytest.approx(sum(q ** j for j in range(n + 1)))


def test_annihilation_on_degree_one(tccr):
    trunc = build_truncation(tccr(0.5, 3), 2)
    for i in (1, 2, 3):
        a = annihilation_matrix(i, 1, trunc)
        assert np.array_equal(a, mu_star_matrix(i, 1, 3))


@pytest.mark.parametrize("label,c", preset_grid(), ids=[label for label, _ in preset_grid()])
def test_representation_residuals(label, c):
    trunc = build_truncation(c, 5)
    rep = build_rep(trunc)
    assert verify_adjoint(trunc, rep) < 1e-10
    assert verify_relations(trunc, rep) < 1e-8
    assert verify_kernel_covariance(trunc) < 1e-9
    assert quotient_reconstruction_residual(trunc) < 1e-8


def test_cuntz_toeplitz_is_exact(zero2):
    trunc = build_truncation(zero2, 4)
    rep = build_rep(trunc)
    assert rep.quotient_dims == [1, 2, 4, 8, 16]
    assert verify_adjoint(trunc, rep) == 0.0
    assert verify_relations(trunc, rep) == 0.0
    assert cuntz_toeplitz_residual(trunc, rep) == 0.0


def test_quotient_dimensions_shrink_with_kernel(tccr, unimodular_i):
    assert build_rep(build_truncation(tccr(0.5, 2), 3)).quotient_dims[2] == 3
    assert build_rep(build_truncation(tccr(0.5, 3), 2)).quotient_dims[2] == 6
    assert build_rep(build_truncation(unimodular_i, 3)).quotient_dims[:3] == [1, 2, 3]


def test_annihilation_paths_agree(rng, tccr, unimodular_i):
    cases = [tccr(0.5, 2), tccr(0.3, 3), unimodular_i, preset_q_ccr(q_matrix(2, 0.3 + 0.4j)),
             random_coefficients(2, rng, target_norm=0.3)]
    for c in cases:
        trunc = build_truncation(c, 4)
        assert verify_annihilation_paths(trunc) < 1e-10


def test_indefinite_gram_refuses_representation(scalar_q):
    trunc = build_truncation(scalar_q(-1.5, allow_modulus_violation=True), 5)
    assert trunc.indefinite_degree == 2
    assert trunc.built_degree == 2
    with pytest.raises(IndefiniteGramError) as exc:
        build_rep(trunc)
    assert exc.value.degree == 2
    assert exc.value.min_eigenvalue == pytest.approx(-0.5)


def test_truncation_needs_degree_two(zero2):
    with pytest.raises(IndexRangeError):
        build_truncation(zero2, 1)


def test_norm_growth_for_bosons(scalar_q):
    trunc = build_truncation(scalar_q(1.0), 7)
    growth = norm_growth(trunc, build_rep(trunc))
    for n in range(7):
        assert growth.norms[0][n] == pytest.approx(math.sqrt(n + 1), rel=1e-10)
    assert growth.trend == "unbounded_trend"


def test_norm_growth_saturates_below_one(scalar_q):
    trunc = build_truncation(scalar_q(0.5), 7)
    growth = norm_growth(trunc, build_rep(trunc))
    assert growth.norms[0][6] == pytest.approx(math.sqrt(2), rel=0.02)
    assert growth.trend == "bounded"


def test_norm_growth_for_free_creation(zero2):
    trunc = build_truncation(zero2, 4)
    growth = norm_growth(trunc, build_rep(trunc))
    assert growth.max_by_degree == pytest.approx([1.0] * 4)
    assert growth.trend == "bounded"


def test_norm_growth_needs_three_degrees(zero2):
    trunc = build_truncation(zero2, 2)
    assert norm_growth(trunc, build_rep(trunc)).trend == "undetermined"


def test_positivity_gate(tccr, unimodular_i):
    for c in (tccr(0.7, 2), unimodular_i, preset_zero(2)):
        trunc = build_truncation(c, 4)
        assert positivity_gate(trunc, seed=0) >= -1e-9


def test_explicit_cap_reaches_representation(tccr):
    settings.dim_cap = 4
    trunc = build_truncation(tccr(0.5, 2), 3, dim_cap=100)
    rep = build_rep(trunc)
    assert rep.quotient_dims == [1, 2, 3, 4]
    assert verify_kernel_covariance(trunc) < 1e-9
    assert verify_annihilation_paths(trunc) < 1e-10
    assert annihilation_matrix(1, 3, trunc, "rewrite").shape == (4, 8)


def test_truncation_cap_still_binds(tccr):
    trunc = build_truncation(tccr(0.5, 2), 3, dim_cap=8)
    with pytest.raises(DimensionCapExceeded):
        creation_matrix(1, 2, replace(trunc, dim_cap=4))
