from dataclasses import replace

import pytest

from app.algebra.coefficients import preset_q_ccr, preset_tccr, preset_zero, random_coefficients
from app.algebra.fock import build_rep, build_truncation
from app.algebra.operators import Operator
from app.audit import engine
from app.audit.engine import (
    CUNST_BOUND,
    POSITIVITY_GATE_TOL,
    SpectralBound,
    audit_all,
    audit_faithfulness,
    audit_kernel,
    audit_positivity,
    combine,
    normal_ordered_monomials,
    positivity_gate,
    representation_checks,
    structural_checks,
)
from app.numerics import identity
from tests.support import preset_grid, q_matrix


def _theorem(report, name):
    return next(t for t in report.theorems if t.name == name)


@pytest.mark.parametrize("label,c", preset_grid(), ids=[label for label, _ in preset_grid()])
def test_grid_raises_no_alarms(label, c):
    report = audit_all(c, 5)
    assert report.alarms == 0, [t.name for t in report.theorems if not t.consistent]
    assert report.consistent
    assert report.representation.available


def test_tccr_entries():
    report = audit_all(preset_tccr(0.5, 3), 5)
    assert _theorem(report, "jor-fobs").applicable == "yes"
    assert _theorem(report, "jor-fobs").conclusion.holds
    # min eig T = -1 sits exactly on the strict bound
    assert _theorem(report, "jor-fobs-strict").applicable == "borderline"
    assert _theorem(report, "jor-bas").applicable == "yes"
    assert _theorem(report, "jor-bas").conclusion.holds
    assert report.structural.dim_ker_one_plus_T == 3
    assert [row.observed_dim for row in report.kernel_table] == [row.predicted_dim for row in report.kernel_table]
    assert report.faithfulness.generators == ["a2 a1 - 0.5 a1 a2", "a3 a1 - 0.5 a1 a3", "a3 a2 - 0.5 a2 a3"]
    assert max(report.faithfulness.generator_residuals) < 1e-9


def test_small_q_entries():
    report = audit_all(preset_q_ccr(q_matrix(2, 0.3)), 5)
    cunst = _theorem(report, "jor-cunst")
    assert cunst.applicable == "yes"
    assert cunst.conclusion.holds
    assert _theorem(report, "T>=0").applicable == "no"
    assert report.faithfulness.injectivity_checked
    assert report.faithfulness.full_rank
    assert report.faithfulness.monomial_count == len(normal_ordered_monomials(2, 3))
    assert _theorem(report, "ker-lambda0").conclusion.holds


def test_cuntz_toeplitz_audit():
    report = audit_all(preset_zero(2), 4)
    assert report.representation.cuntz_toeplitz_residual == 0.0
    assert _theorem(report, "T>=0").applicable == "yes"
    assert _theorem(report, "T>=0").conclusion.holds
    assert report.alarms == 0


def test_large_norm_is_out_of_scope(rng):
    report = audit_all(random_coefficients(2, rng, target_norm=1.5), 4)
    assert _theorem(report, "jor-cunst").applicable == "no"
    assert _theorem(report, "jor-fobs").applicable == "no"
    assert _theorem(report, "jor-bas").applicable == "no"
    assert report.alarms == 0


def test_indefinite_truncation_reports_unavailable_representation():
    c = preset_q_ccr([[-1.5]], allow_modulus_violation=True)
    report = audit_all(c, 4)
    assert not report.representation.available
    assert "indefinite" in report.representation.reason
    assert not report.faithfulness.available
    assert report.verdicts[-1].verdict.value == "indefinite"
    assert report.alarms == 0


def test_unimodular_diagonal_is_outside_every_hypothesis():
    report = audit_all(preset_q_ccr([[1.0]]), 4)
    assert {t.applicable for t in report.theorems} == {"no"}
    assert "unimodular diagonal" in _theorem(report, "jor-fobs").hypothesis.detail
    assert report.alarms == 0


def test_audit_is_deterministic():
    c = preset_q_ccr(q_matrix(2, 1j, 0.0))
    first = audit_all(c, 4, seed=3).model_dump_json()
    second = audit_all(c, 4, seed=3).model_dump_json()
    assert first == second


def test_sections_agree_with_full_report():
    c = preset_tccr(0.3, 2)
    report = audit_all(c, 4)
    positivity = audit_positivity(c, 4)
    kernel = audit_kernel(c, 4)
    faithfulness = audit_faithfulness(c, 4)
    assert [t.name for t in positivity.theorems] == [t.name for t in report.theorems[:6]]
    assert kernel.theorem.name == "jor-bas"
    assert kernel.rows == report.kernel_table
    assert faithfulness.evidence.generators == report.faithfulness.generators


def test_structural_checks():
    s = structural_checks(preset_tccr(0.5, 2))
    assert s.min_eig_T == pytest.approx(-1.0)
    assert s.max_eig_T == pytest.approx(0.25)
    assert s.norm_T == pytest.approx(1.0)
    assert s.braid_holds
    assert s.dim_ker_one_plus_T == 1


def test_spectral_bound_applicability():
    strict = SpectralBound(parameter="||T||", max_value=CUNST_BOUND, strict_max=True)
    assert strict.applicability(0.4, 1e-9) == "yes"
    assert strict.applicability(CUNST_BOUND, 1e-9) == "borderline"
    assert strict.applicability(0.5, 1e-9) == "no"

    closed = SpectralBound(parameter="min eig T", min_value=-1.0)
    assert closed.applicability(-1.0, 1e-9) == "yes"
    assert closed.applicability(-1.0 - 5e-9, 1e-9) == "borderline"
    assert closed.applicability(-1.1, 1e-9) == "no"
    assert closed.describe() == "-1 <= min eig T"


def test_combine():
    assert combine(["yes", "yes"]) == "yes"
    assert combine(["yes", "borderline"]) == "borderline"
    assert combine(["borderline", "no"]) == "no"


def test_positivity_gate_passes_on_psd_truncations():
    report = audit_all(preset_tccr(0.5, 2), 4)
    assert report.representation.positivity_gate_min >= -POSITIVITY_GATE_TOL
    assert report.representation.positivity_gate_passed


def test_negative_sampled_norm_is_an_alarm(monkeypatch):
    c = preset_zero(2)
    trunc = build_truncation(c, 3)
    rep = build_rep(trunc)
    broken = replace(trunc, grams=trunc.grams[:2] + [Operator(2, 2, -identity(4))] + trunc.grams[3:])
    assert positivity_gate(broken, seed=0) == pytest.approx(-1.0)
    checks = representation_checks(c, broken, rep, "", seed=0)
    assert checks.positivity_gate_passed is False

    monkeypatch.setattr(engine, "positivity_gate", lambda trunc, seed: -1e-6)
    report = audit_all(c, 4)
    assert report.alarms == 1
    assert not report.consistent
    assert not report.representation.positivity_gate_passed
