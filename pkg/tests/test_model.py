import math

import pytest

from qbattery.model import (
    InvalidParameters,
    ModelParams,
    derive_rates,
    is_stable,
    resolved,
    stability_threshold,
    validate,
)


def test_unit_couplings_are_valid():
    report = validate(ModelParams(p_a=1, p_b=1))
    assert report.ok
    assert derive_rates(ModelParams()).mu == -1


def test_normalization_violation():
    report = validate(ModelParams(p_a=2, p_b=1))
    assert not report.ok
    assert any("normalization |p_b p_a*| != 1" in v for v in report.violations)


def test_negative_drive_rejected():
    report = validate(ModelParams(epsilon=-0.1))
    assert "epsilon must be nonnegative" in report.violations
    with pytest.raises(InvalidParameters):
        derive_rates(ModelParams(epsilon=-0.1))


@pytest.mark.parametrize(
    "changes",
    [
        {"gamma": -1.0},
        {"kappa_a": -0.1},
        {"kappa_b": -0.1},
        {"x_scale": 0.0},
        {"xi": -2.0},
        {"omega": 0.0},
        {"epsilon": math.nan},
    ],
)
def test_sign_constraints(changes):
    assert not validate(ModelParams(**changes)).ok


def test_kappa_b_must_agree_with_xi():
    assert not validate(ModelParams(kappa_a=0.08, kappa_b=0.08, xi=2.0)).ok
    assert validate(ModelParams(kappa_a=0.08, kappa_b=0.02, xi=2.0)).ok


def test_symmetric_rates():
    r = derive_rates(ModelParams(gamma=0.5, kappa_a=0.06, kappa_b=0.06))
    assert r.lambda_total == pytest.approx(0.56, abs=1e-15)
    assert r.delta_total == pytest.approx(0.56, abs=1e-15)


def test_x_scaling():
    r = derive_rates(ModelParams(gamma=0.5, x_scale=2.0, kappa_a=0.02))
    assert r.gamma_a == pytest.approx(1.0, rel=1e-15)
    assert r.gamma_b == pytest.approx(0.25, rel=1e-15)
    assert r.lambda_total == pytest.approx(1.02, rel=1e-15)


def test_xi_sets_battery_damping():
    r = derive_rates(ModelParams(kappa_a=0.02, xi=2.0))
    assert r.kappa_b == pytest.approx(0.005)
    assert r.xi == pytest.approx(2.0)


def test_dissipation_free_limit():
    r = derive_rates(ModelParams(gamma=0.0, kappa_a=0.0, kappa_b=0.0))
    assert r.lambda_total == 0.0 and r.delta_total == 0.0
    assert stability_threshold(r) == 0.0
    assert not is_stable(ModelParams(gamma=0.0, kappa_a=0.0, kappa_b=0.0, epsilon=1e-6))


@pytest.mark.parametrize("lam, expected", [(0.56, 0.14), (1.0, 0.25)])
def test_threshold(lam, expected):
    p = ModelParams(gamma=lam - 0.06, kappa_a=0.06)
    assert stability_threshold(derive_rates(p)) == pytest.approx(expected)


def test_nonreciprocal_coupling_cancels_forward_term():
    for p_a, p_b in [(1, 1), (1j, 1), (complex(0.6, 0.8), complex(-0.8, 0.6))]:
        r = derive_rates(ModelParams(p_a=p_a, p_b=p_b, gamma=0.7))
        assert r.coupling_J + 0.5j * r.mu * 0.7 == 0


def test_reciprocal_keeps_given_coupling():
    r = derive_rates(ModelParams(nonreciprocal=False, coupling_J=0.3 + 0.1j))
    assert r.coupling_J == 0.3 + 0.1j


def test_derive_rates_idempotent():
    p = ModelParams(x_scale=1.7, xi=1.3, kappa_a=0.05, p_a=1j)
    assert derive_rates(resolved(p)) == derive_rates(p)


def test_kappa_shorthand():
    p = ModelParams().replace(kappa=0.1)
    assert p.kappa_a == 0.1 and p.kappa_b == 0.1
