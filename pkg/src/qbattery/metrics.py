"""Battery figures of merit computed from moments.

Energies are in units of ``omega``. The passive energy uses the Gaussian
formula E_passive = omega (sqrt(D) - 1) / 2 with

    D = (1 + 2 n_b - 2 |<b>|^2)^2 - 4 |<bb> - <b>^2|^2,

so the ergotropy is only meaningful for Gaussian battery states, which is
what the quadratic model produces from vacuum.

The single-photon baseline is the linear-drive analogue of the charger
(drive term -i eps e^{i theta} in d<a>/dt) feeding the same cascaded battery;
its battery state is coherent, so its ergotropy equals its energy.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.linalg import expm

from .dynamics import (
    MomentState,
    Trajectory,
    integrate,
    rk4_propagator,
    steady_state_numeric,
    time_grid,
)
from .model import ModelParams, derive_rates

# slack on D >= 1 before a state is declared unphysical
RADICAND_TOL = 1e-9
# Im<b^dag b> allowed relative to max(1, |Re<b^dag b>|)
IMAG_TOL = 1e-10

ArrayLike = Union[float, np.ndarray]


class UnphysicalMoments(ValueError):
    pass


def _check_real(n: np.ndarray, label: str) -> np.ndarray:
    n = np.asarray(n)
    if np.iscomplexobj(n):
        bad = np.abs(n.imag) > IMAG_TOL * np.maximum(1.0, np.abs(n.real))
        if np.any(bad):
            raise UnphysicalMoments(f"Im<{label}> exceeds tolerance")
        n = n.real
    return n.astype(float)


def radicand(n_b, mean_b, bb) -> np.ndarray:
    """D for the given battery moments (vectorized)."""
    n = _check_real(n_b, "b^dag b")
    mean_b = np.asarray(mean_b, dtype=complex)
    bb = np.asarray(bb, dtype=complex)
    return (1 + 2 * n - 2 * np.abs(mean_b) ** 2) ** 2 - 4 * np.abs(bb - mean_b**2) ** 2


def _passive_from_radicand(D: np.ndarray, omega: float) -> np.ndarray:
    D = np.asarray(D, dtype=float)
    if np.any(D < 1 - RADICAND_TOL) or np.any(~np.isfinite(D)):
        worst = float(np.nanmin(D))
        raise UnphysicalMoments(f"radicand D = {worst:.12g} < 1: unphysical battery moments")
    return omega * (np.sqrt(np.maximum(D, 1.0)) - 1) / 2


def battery_energy(state: MomentState, omega: float = 1.0) -> float:
    return float(omega * _check_real(state.n_b, "b^dag b"))


def charger_energy(state: MomentState, omega: float = 1.0) -> float:
    return float(omega * _check_real(state.n_a, "a^dag a"))


def passive_energy(state: MomentState, omega: float = 1.0) -> float:
    D = radicand(state.n_b, state.mean_b, state.bb)
    return float(_passive_from_radicand(D, omega))


def ergotropy(state: MomentState, omega: float = 1.0) -> float:
    return battery_energy(state, omega) - passive_energy(state, omega)


def _ratio(num: float, den: float) -> Optional[float]:
    return num / den if den > 0 else None


@dataclass(frozen=True)
class EfficiencyRatios:
    # None marks a vanishing denominator (undefined at the origin)
    eta_util: Optional[float]
    eta_conv: Optional[float]


def efficiency_ratios(state: MomentState, omega: float = 1.0) -> EfficiencyRatios:
    """Ergotropy over battery energy (utilization) and over charger energy (conversion)."""
    erg = ergotropy(state, omega)
    return EfficiencyRatios(
        eta_util=_ratio(erg, battery_energy(state, omega)),
        eta_conv=_ratio(erg, charger_energy(state, omega)),
    )


@dataclass(frozen=True)
class BatteryMetrics:
    E_b: float
    E_b_passive: float
    ergotropy: float
    E_a: float
    power: Optional[float] = None
    eta_util: Optional[float] = None
    eta_conv: Optional[float] = None

    @classmethod
    def from_state(
        cls, state: MomentState, omega: float = 1.0, power: Optional[float] = None
    ) -> "BatteryMetrics":
        E_b = battery_energy(state, omega)
        passive = passive_energy(state, omega)
        erg = E_b - passive
        E_a = charger_energy(state, omega)
        return cls(E_b, passive, erg, E_a, power, _ratio(erg, E_b), _ratio(erg, E_a))


def _safe_divide(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.full(np.shape(num), np.nan)
    ok = den > 0
    out[ok] = num[ok] / den[ok]
    return out


def _require_uniform(t: np.ndarray) -> float:
    if len(t) < 3:
        raise ValueError("power needs at least 3 samples")
    steps = np.diff(t)
    h = float(steps.mean())
    if not np.allclose(steps, h, rtol=1e-9, atol=0):
        raise ValueError("power needs a uniform time grid")
    return h


def finite_difference_power(t: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Second-order central differences, one-sided second-order at the ends."""
    h = _require_uniform(np.asarray(t, dtype=float))
    return np.gradient(np.asarray(values, dtype=float), h, edge_order=2)


@dataclass(frozen=True)
class TrajectoryMetrics:
    """Metric samples aligned with a trajectory's time grid (nan = undefined)."""

    t: np.ndarray
    Jt: np.ndarray
    E_b: np.ndarray
    E_b_passive: np.ndarray
    ergotropy: np.ndarray
    E_a: np.ndarray
    radicand: np.ndarray
    power: np.ndarray
    eta_util: np.ndarray
    eta_conv: np.ndarray

    def at(self, k: int) -> BatteryMetrics:
        def opt(x: float) -> Optional[float]:
            return None if math.isnan(x) else float(x)

        return BatteryMetrics(
            float(self.E_b[k]),
            float(self.E_b_passive[k]),
            float(self.ergotropy[k]),
            float(self.E_a[k]),
            opt(self.power[k]),
            opt(self.eta_util[k]),
            opt(self.eta_conv[k]),
        )


def trajectory_metrics(traj: Trajectory, omega: Optional[float] = None) -> TrajectoryMetrics:
    omega = traj.params.omega if omega is None else omega
    n_b = _check_real(traj.column("n_b"), "b^dag b")
    n_a = _check_real(traj.column("n_a"), "a^dag a")
    D = radicand(n_b, traj.column("mean_b"), traj.column("bb"))
    E_b = omega * n_b
    passive = _passive_from_radicand(D, omega)
    erg = E_b - passive
    E_a = omega * n_a
    power = (
        finite_difference_power(traj.t_grid, erg)
        if len(traj) >= 3
        else np.full(len(traj), np.nan)
    )
    return TrajectoryMetrics(
        t=traj.t_grid,
        Jt=traj.Jt,
        E_b=E_b,
        E_b_passive=passive,
        ergotropy=erg,
        E_a=E_a,
        radicand=D,
        power=power,
        eta_util=_safe_divide(erg, E_b),
        eta_conv=_safe_divide(erg, E_a),
    )


def ergotropy_power(traj: Trajectory, omega: Optional[float] = None) -> np.ndarray:
    """d(ergotropy)/dt sampled on the trajectory grid; positive while charging."""
    if len(traj) < 3:
        raise ValueError("power needs at least 3 samples")
    return trajectory_metrics(traj, omega).power


# ---------------------------------------------------------------------------
# single-photon baseline


class UnsupportedConfiguration(ValueError):
    pass


@dataclass(frozen=True)
class SinglePhotonBaseline:
    E_b1: ArrayLike
    E_a1: ArrayLike
    # nan (or None for scalars) where E_a1 = 0
    eta_b1: ArrayLike
    mean_a: ArrayLike = 0j
    mean_b: ArrayLike = 0j

    @property
    def ergotropy_b1(self) -> ArrayLike:
        """Coherent battery state: all of its energy is extractable."""
        return self.E_b1


def _baseline_system(params: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """Complex affine system d(alpha, beta)/dt = M (alpha, beta) + f."""
    if not params.nonreciprocal:
        raise UnsupportedConfiguration("single-photon baseline needs the nonreciprocal coupling")
    if params.delta != 0:
        raise UnsupportedConfiguration("single-photon baseline needs delta = 0")
    rates = derive_rates(params)
    g = params.gamma
    K = rates.coupling_J + 0.5j * rates.mu * g
    Kp = rates.coupling_J.conjugate() + 0.5j * rates.mu.conjugate() * g
    M = np.array(
        [[-rates.lambda_total / 2, -1j * K], [-1j * Kp, -rates.delta_total / 2]], dtype=complex
    )
    f = np.array([-1j * params.epsilon * cmath.exp(1j * params.theta), 0j])
    return M, f


def _baseline_record(alpha, beta, omega: float) -> SinglePhotonBaseline:
    E_a1 = omega * np.abs(alpha) ** 2
    E_b1 = omega * np.abs(beta) ** 2
    if np.ndim(E_a1) == 0:
        E_a1, E_b1 = float(E_a1), float(E_b1)
        eta = E_b1 / E_a1 if E_a1 > 0 else None
        return SinglePhotonBaseline(E_b1, E_a1, eta, complex(alpha), complex(beta))
    return SinglePhotonBaseline(E_b1, E_a1, _safe_divide(E_b1, E_a1), alpha, beta)


def baseline_amplitudes(params: ModelParams, t) -> tuple[np.ndarray, np.ndarray]:
    """(<a>, <b>) of the baseline at time(s) t, exactly, via an augmented exponential."""
    M, f = _baseline_system(params)
    aug = np.zeros((3, 3), dtype=complex)
    aug[:2, :2] = M
    aug[:2, 2] = f
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.array([expm(aug * tk)[:2, 2] for tk in t_arr])
    alpha, beta = out[:, 0], out[:, 1]
    if np.ndim(t) == 0:
        return alpha[0], beta[0]
    return alpha, beta


def single_photon_baseline(params: ModelParams, t) -> SinglePhotonBaseline:
    """Baseline charger/battery energies at time(s) t (from vacuum)."""
    alpha, beta = baseline_amplitudes(params, t)
    return _baseline_record(alpha, beta, params.omega)


def baseline_steady(params: ModelParams) -> SinglePhotonBaseline:
    """Closed-form t -> infinity limit (linear solve M y = -f)."""
    M, f = _baseline_system(params)
    y = np.linalg.solve(M, -f)
    return _baseline_record(y[0], y[1], params.omega)


def baseline_integrate(params: ModelParams, t_final: float, dt: float) -> SinglePhotonBaseline:
    """Same baseline by fixed-step RK4 on the time grid; an independent route."""
    M, f = _baseline_system(params)
    # real embedding so the shared propagator helper applies unchanged
    A = np.block([[M.real, -M.imag], [M.imag, M.real]])
    c = np.concatenate([f.real, f.imag])
    P, q = rk4_propagator(A, c, dt)
    t = time_grid(t_final, dt)
    ys = np.zeros((len(t), 4))
    for k in range(1, len(t)):
        ys[k] = P @ ys[k - 1] + q
    return _baseline_record(ys[:, 0] + 1j * ys[:, 2], ys[:, 1] + 1j * ys[:, 3], params.omega)


@dataclass(frozen=True)
class ComparisonRatios:
    t: np.ndarray
    Jt: np.ndarray
    E_b: np.ndarray
    ergotropy: np.ndarray
    E_b1: np.ndarray
    eta_E: np.ndarray
    eta_erg: np.ndarray
    chi: np.ndarray


def compare_to_baseline(E_b, erg, E_a, base: SinglePhotonBaseline):
    E_b1 = np.asarray(base.E_b1, dtype=float)
    E_a1 = np.asarray(base.E_a1, dtype=float)
    eta_conv = _safe_divide(np.atleast_1d(erg), np.atleast_1d(E_a))
    eta_b1 = _safe_divide(np.atleast_1d(E_b1), np.atleast_1d(E_a1))
    return (
        _safe_divide(np.atleast_1d(E_b), np.atleast_1d(E_b1)),
        _safe_divide(np.atleast_1d(erg), np.atleast_1d(E_b1)),
        _safe_divide(eta_conv, eta_b1),
    )


def comparison_ratios(
    params: ModelParams, t_final: float, dt: Optional[float] = None
) -> ComparisonRatios:
    """Two-photon battery against the single-photon baseline along a trajectory.

    Entries are nan where a denominator vanishes (always at t = 0).
    """
    traj = integrate(params, t_final, dt)
    if traj.diverged:
        raise UnphysicalMoments("two-photon trajectory diverged; drive above threshold")
    tm = trajectory_metrics(traj)
    base = single_photon_baseline(params, traj.t_grid)
    eta_E, eta_erg, chi = compare_to_baseline(tm.E_b, tm.ergotropy, tm.E_a, base)
    return ComparisonRatios(
        t=traj.t_grid,
        Jt=traj.Jt,
        E_b=tm.E_b,
        ergotropy=tm.ergotropy,
        E_b1=np.asarray(base.E_b1),
        eta_E=eta_E,
        eta_erg=eta_erg,
        chi=chi,
    )


@dataclass(frozen=True)
class SteadyComparison:
    E_b: float
    ergotropy: float
    E_a: float
    E_b1: float
    E_a1: float
    eta_E: float
    eta_erg: float
    chi: float


def steady_comparison(params: ModelParams) -> SteadyComparison:
    state = steady_state_numeric(params)
    m = BatteryMetrics.from_state(state, params.omega)
    base = baseline_steady(params)
    eta_E, eta_erg, chi = (float(v[0]) for v in compare_to_baseline(m.E_b, m.ergotropy, m.E_a, base))
    return SteadyComparison(
        m.E_b, m.ergotropy, m.E_a, base.E_b1, base.E_a1, eta_E, eta_erg, chi
    )

