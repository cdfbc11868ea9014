"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line.

The recorded lines are printed at the end of the pytest run (see conftest),
and also when this file is executed directly.
"""

import json
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.integrate import trapezoid
from scipy.optimize import brentq

from qbattery import analytic, metrics
from qbattery.analytic import AnalyticDomain
from qbattery.cli import evaluate_asymmetry_grid, oracle_check
from qbattery.dynamics import MOMENT_NAMES, integrate, steady_state_numeric
from qbattery.export import json_safe
from qbattery.model import ModelParams, derive_rates

REPORT = Path(__file__).parent.parent / "reports" / "formula_adjudication.json"

# |J| = Gamma / 2 at Gamma = 0.5
J_ABS = 0.25
FIG2 = ModelParams(epsilon=0.05, kappa_a=0.06, gamma=0.5)
KAPPA_SWEEP = (0.02, 0.06, 0.10)
EPSILON_SWEEP = (0.03, 0.06, 0.09, 0.12)

RESULTS: list[str] = []


def record(label: str, ok: bool, detail: str, *, soft: bool = False) -> None:
    status = "PASS" if ok else ("SOFT-FAIL" if soft else "FAIL")
    RESULTS.append(f"CRITERION {label}: {status} {detail}")


def sup_relative(ref: np.ndarray, got: np.ndarray) -> float:
    return float(np.max(np.abs(got - ref)) / np.max(np.abs(ref)))


def kappa_points() -> list[ModelParams]:
    return [FIG2.replace(kappa=k) for k in KAPPA_SWEEP]


def epsilon_points() -> list[ModelParams]:
    return [FIG2.replace(epsilon=e) for e in EPSILON_SWEEP]


def test_criterion_1_trajectory_equivalence():
    start = time.perf_counter()
    traj = integrate(FIG2, 20 / J_ABS, 1e-3 / J_ABS)
    am = analytic.analytic_moments(traj.t_grid, AnalyticDomain.from_params(FIG2))
    elapsed = time.perf_counter() - start
    errs = {
        "n_a": sup_relative(am.n_a, traj.column("n_a").real),
        "n_b": sup_relative(am.n_b, traj.column("n_b").real),
        "|bb|": sup_relative(np.abs(am.bb), np.abs(traj.column("bb"))),
    }
    ok = max(errs.values()) < 1e-6 and elapsed < 1.0
    detail = ", ".join(f"{k} {v:.1e}" for k, v in errs.items())
    record("1", ok, f"max relative error {detail} (< 1e-6); runtime {elapsed:.2f} s (< 1 s)")
    assert ok


def test_criterion_2_symmetric_steady_state():
    energy = metrics.battery_energy(steady_state_numeric(FIG2), FIG2.omega)
    L = derive_rates(FIG2).lambda_total
    printed = analytic.printed_sym_energy(FIG2.gamma, FIG2.epsilon, L)
    rel = abs(energy - printed) / printed
    ok = abs(energy - 0.1806) <= 1e-3 and rel <= 1e-10 and L == pytest.approx(0.56)
    record("2", ok, f"E_b(inf) = {energy:.6f} (0.1806 +- 1e-3); printed form rel diff {rel:.1e}")
    assert ok


def test_criterion_3_stability_threshold():
    below = FIG2.replace(epsilon=0.12)
    traj = integrate(below, 200 / J_ABS)
    steady = steady_state_numeric(below).to_array()
    dev = float(np.max(np.abs(traj.moments[-1] - steady)))
    above = integrate(FIG2.replace(epsilon=0.15), 200 / J_ABS)
    ok = not traj.diverged and dev < 1e-8 and above.diverged
    record(
        "3",
        ok,
        f"eps=0.12 max |moment - steady| at Jt=200 {dev:.1e} (< 1e-8); "
        f"eps=0.15 diverged={above.diverged} at Jt~{above.Jt[-1]:.0f}",
    )
    assert ok


def test_criterion_4_oracle_equivalence():
    start = time.perf_counter()
    rep = oracle_check(FIG2, t_final_Jt=20.0)
    elapsed = time.perf_counter() - start
    n_cut = rep["cutoff"]["chosen"]
    moment_checks = {f"oracle_vs_dynamics:{n}" for n in MOMENT_NAMES}
    dyn = [c for c in rep["checks"] if c["check"] in moment_checks]
    ss = [c for c in rep["checks"] if c["check"].startswith("steady_oracle_vs_correlators:")]
    ok = (
        all(c["ratio"] <= 1 for c in dyn)
        and len(ss) == len(MOMENT_NAMES)
        and all(c["ratio"] <= 1 for c in ss)
        and n_cut <= 16
        and elapsed < 30
    )
    record(
        "4",
        ok,
        f"n_cut {n_cut}; worst trajectory ratio {max(c['ratio'] for c in dyn):.2f}, "
        f"worst steady ratio {max(c['ratio'] for c in ss):.2f} (<= 1 at 1e-5 rel / 1e-8 abs); "
        f"runtime {elapsed:.1f} s (< 30 s)",
    )
    assert ok


def test_criterion_5_cascaded_nonreciprocity():
    runs = [integrate(FIG2.replace(kappa_b=kb), 20 / J_ABS) for kb in (0.01, 0.06, 0.2)]
    same = all(
        np.array_equal(r.column(name), runs[0].column(name))
        for r in runs[1:]
        for name in ("n_a", "aa")
    )
    zero_means = all(
        np.all(r.column("mean_a") == 0) and np.all(r.column("mean_b") == 0) for r in runs
    )
    ok = same and zero_means
    record("5", ok, f"charger bit-identical={same}; <a>=<b>=0 exactly={zero_means}")
    assert ok


def _identity_runs():
    for p in [FIG2, *kappa_points(), *epsilon_points()]:
        yield p, integrate(p, 20 / J_ABS, 1e-2 / J_ABS)


def test_criterion_6_metric_identities():
    worst_split = 0.0
    worst_D = np.inf
    worst_power = 0.0
    for p, traj in _identity_runs():
        tm = metrics.trajectory_metrics(traj)
        worst_split = max(worst_split, float(np.max(np.abs(tm.E_b - tm.E_b_passive - tm.ergotropy))))
        worst_D = min(worst_D, float(tm.radicand.min()))
        gained = trapezoid(tm.power, tm.t)
        change = tm.ergotropy[-1] - tm.ergotropy[0]
        worst_power = max(worst_power, abs(gained - change) / max(1.0, tm.ergotropy[-1]))
    ok = worst_split <= 1e-14 and worst_D >= 1 - 1e-9 and worst_power <= 1e-6
    record(
        "6 (identities)",
        ok,
        f"|E_b - passive - ergotropy| {worst_split:.1e} (<= 1e-14); min D {worst_D:.6f}; "
        f"power integral error {worst_power:.1e} (<= 1e-6)",
    )
    assert ok


def test_criterion_6_power_zero_crossing():
    traj = integrate(FIG2, 20 / J_ABS)
    power = metrics.ergotropy_power(traj)
    peak = int(np.argmax(power))
    below = np.nonzero(power[peak:] < 1e-4)[0]
    crossing = float(traj.Jt[peak + below[0]]) if below.size else float("nan")
    ok = 6.0 <= crossing <= 10.0
    record(
        "6 (power crossing)",
        ok,
        f"power first below 1e-4 at Jt = {crossing:.3f} (expected in [6, 10]); "
        f"peak at Jt = {traj.Jt[peak]:.3f}, power at Jt=8 = {power[np.argmin(np.abs(traj.Jt - 8))]:.1e}",
    )
    assert ok


def test_criterion_7_monotonicity():
    def steady(p):
        s = steady_state_numeric(p)
        return metrics.battery_energy(s), metrics.ergotropy(s)

    kap = np.array([steady(p) for p in kappa_points()])
    eps = np.array([steady(p) for p in epsilon_points()])
    base = ModelParams(kappa_a=0.02, epsilon=0.05, gamma=0.5)
    grid_axis = np.linspace(0.5, 3.0, 26)
    grid = evaluate_asymmetry_grid(base, grid_axis, grid_axis)
    E = np.array([g.E_b for g in grid]).reshape(26, 26)
    erg = np.array([g.ergotropy for g in grid]).reshape(26, 26)
    checks = {
        "kappa decreasing": bool(np.all(np.diff(kap, axis=0) < 0)),
        "epsilon increasing": bool(np.all(np.diff(eps, axis=0) > 0)),
        "x decreasing": bool(np.all(np.diff(E, axis=0) < 0) and np.all(np.diff(erg, axis=0) < 0)),
        "xi nondecreasing": bool(np.all(np.diff(E, axis=1) >= 0) and np.all(np.diff(erg, axis=1) >= 0)),
    }
    ok = all(checks.values())
    record("7", ok, "; ".join(f"{k}={v}" for k, v in checks.items()))
    assert ok


def test_criterion_8_conversion_ratio():
    values = {
        f"{name}={getattr(p, attr)}": metrics.efficiency_ratios(steady_state_numeric(p)).eta_conv
        for name, attr, pts in (
            ("kappa", "kappa_a", kappa_points()),
            ("eps", "epsilon", epsilon_points()),
        )
        for p in pts
    }
    ok = all(v is not None and v > 1 for v in values.values())
    record("8", ok, "steady eta_conv " + ", ".join(f"{k}: {v:.3f}" for k, v in values.items()))
    assert ok


def test_criterion_9_adjudication_report():
    fresh = json_safe(analytic.adjudication_report(FIG2))
    stored = json.loads(REPORT.read_text()) if REPORT.exists() else None
    sym = fresh["symmetric_point"]
    asym = fresh["asymmetric"]
    ok = (
        stored == fresh
        and bool(sym["verdict"])
        and len(sym["diagnostics"]) >= 3
        and "ergotropy_equals_energy_anywhere" in asym
    )
    record(
        "9",
        ok,
        f"report present and current={stored == fresh}; verdict: {sym['verdict']}; "
        f"asymmetric ergotropy equals energy anywhere={asym['ergotropy_equals_energy_anywhere']}",
    )
    assert ok


def test_criterion_10_single_photon_comparison():
    chis = [metrics.steady_comparison(p).chi for p in kappa_points() + epsilon_points()]

    def eta_erg_minus_one(kappa: float) -> float:
        return metrics.steady_comparison(FIG2.replace(kappa=kappa)).eta_erg - 1

    grid = np.linspace(0.01, 1.0, 100)
    vals = np.array([eta_erg_minus_one(k) for k in grid])
    flips = np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]
    crossings = [brentq(eta_erg_minus_one, grid[i], grid[i + 1], xtol=1e-12) for i in flips]
    in_band = any(0.4 <= c <= 0.8 for c in crossings)
    chi_ok = max(chis) < 1
    record(
        "10 (soft)",
        chi_ok and in_band,
        f"max steady chi {max(chis):.3f} (< 1); eta_erg = 1 crossing at kappa = "
        f"{', '.join(f'{c:.4f}' for c in crossings) or 'none'} (expected in [0.4, 0.8])",
        soft=True,
    )
    # the crossing depends on the reconstructed baseline and is reported, not enforced
    assert chi_ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
