"""Closed first- and second-order moment equations and their integration.

The eight tracked moments are stored as complex numbers in the fixed order
``MOMENT_NAMES``. Conjugate moments (<a^dag a^dag>, <b^dag a>, ...) are never
stored; use ``np.conj`` on the corresponding entry.

The right-hand side is affine over the reals (it mixes a moment with its
conjugate through Re/Im), so for integration and steady-state solving the
state is embedded as a 16-vector [Re m, Im m].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from functools import cached_property
from typing import Iterator, Optional

import numpy as np
from scipy.integrate import solve_ivp

from .model import DerivedRates, ModelParams, derive_rates, stability_threshold, time_unit

MOMENT_NAMES = ("mean_a", "mean_b", "n_a", "aa", "adag_b", "ab", "n_b", "bb")
FIRST_ORDER = (0, 1)
SECOND_ORDER = (2, 3, 4, 5, 6, 7)
DIVERGENCE_THRESHOLD = 1e12
DEFAULT_DT_JT = 1e-3


class NoSteadyState(ValueError):
    """Drive above threshold: the moments grow without bound."""


class SingularSystem(ValueError):
    """The steady-state linear system has no unique solution."""


@dataclass(frozen=True)
class MomentState:
    mean_a: complex = 0j
    mean_b: complex = 0j
    n_a: complex = 0j
    aa: complex = 0j
    adag_b: complex = 0j
    ab: complex = 0j
    n_b: complex = 0j
    bb: complex = 0j

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in MOMENT_NAMES], dtype=complex)

    @classmethod
    def from_array(cls, values) -> "MomentState":
        values = np.asarray(values, dtype=complex)
        return cls(*(complex(v) for v in values))

    def __iter__(self) -> Iterator[complex]:
        return (getattr(self, f.name) for f in fields(self))

    @property
    def adag_adag(self) -> complex:
        return self.aa.conjugate()

    @property
    def bdag_bdag(self) -> complex:
        return self.bb.conjugate()

    @property
    def bdag_a(self) -> complex:
        return self.adag_b.conjugate()


VACUUM = MomentState()


@dataclass(frozen=True)
class _Coefficients:
    lam: float
    dlt: float
    delta: float
    # K multiplies <b> in d<a>/dt, Kp multiplies <a> in d<b>/dt (up to -i)
    K: complex
    Kp: complex
    drive: complex

    @classmethod
    def build(cls, params: ModelParams, rates: DerivedRates) -> "_Coefficients":
        J = rates.coupling_J
        mu = rates.mu
        g = params.gamma
        return cls(
            lam=rates.lambda_total,
            dlt=rates.delta_total,
            delta=params.delta,
            K=J + 0.5j * mu * g,
            Kp=J.conjugate() + 0.5j * mu.conjugate() * g,
            drive=params.epsilon * complex(math.cos(params.theta), math.sin(params.theta)),
        )


def _rhs(m: np.ndarray, c: _Coefficients) -> np.ndarray:
    """d/dt of the moment array ``m`` (last axis = MOMENT_NAMES)."""
    a, b, na, aa, adb, ab, nb, bb = np.moveaxis(m, -1, 0)
    lam, dlt, dl, K, Kp, e = c.lam, c.dlt, c.delta, c.K, c.Kp, c.drive
    ec = np.conj(e)
    out = np.empty(np.shape(m), dtype=complex)
    out[..., 0] = -(lam / 2 + 1j * dl) * a - 1j * K * b - 2j * e * np.conj(a)
    out[..., 1] = -(dlt / 2 + 1j * dl) * b - 1j * Kp * a
    out[..., 2] = -lam * na - 2 * np.imag(2 * ec * aa) - 2 * np.real(1j * K * adb)
    out[..., 3] = -(lam + 2j * dl) * aa - 4j * e * na - 2j * e - 2j * K * ab
    out[..., 4] = (
        -(lam + dlt) / 2 * adb + 1j * np.conj(K) * nb - 1j * Kp * na + 2j * ec * ab
    )
    out[..., 5] = (
        (-2j * dl - (lam + dlt) / 2) * ab - 2j * e * adb - 1j * Kp * aa - 1j * K * bb
    )
    out[..., 6] = -dlt * nb + 2 * np.real(1j * np.conj(Kp) * adb)
    out[..., 7] = -(2j * dl + dlt) * bb - 2j * Kp * ab
    return out


def moment_rhs(
    state: MomentState, params: ModelParams, rates: Optional[DerivedRates] = None
) -> MomentState:
    """Time derivative of every tracked moment at ``state``."""
    rates = rates or derive_rates(params)
    coeffs = _Coefficients.build(params, rates)
    return MomentState.from_array(_rhs(state.to_array(), coeffs))


def to_real(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    return np.concatenate([m.real, m.imag], axis=-1)


def from_real(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    n = y.shape[-1] // 2
    return y[..., :n] + 1j * y[..., n:]


def linear_system(
    params: ModelParams, rates: Optional[DerivedRates] = None
) -> tuple[np.ndarray, np.ndarray]:
    """Real 16x16 matrix A and offset c such that dy/dt = A y + c.

    Built by probing the right-hand side; exact because it is real-affine.
    """
    rates = rates or derive_rates(params)
    coeffs = _Coefficients.build(params, rates)
    n = 2 * len(MOMENT_NAMES)
    c = to_real(_rhs(np.zeros(len(MOMENT_NAMES), dtype=complex), coeffs))
    probes = from_real(np.eye(n))
    A = (to_real(_rhs(probes, coeffs)) - c).T
    return A, c


def _second_order_block(A: np.ndarray, c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    k = len(MOMENT_NAMES)
    idx = np.array(SECOND_ORDER + tuple(i + k for i in SECOND_ORDER))
    return A[np.ix_(idx, idx)], c[idx]


@dataclass(frozen=True)
class Trajectory:
    t_grid: np.ndarray
    moments: np.ndarray  # complex, shape (len(t_grid), 8)
    params: ModelParams
    j_abs: float
    diverged: bool = False

    def __post_init__(self):
        if len(self.t_grid) != len(self.moments):
            raise ValueError("t_grid and moments must have the same length")
        if len(self.t_grid) > 1 and not np.all(np.diff(self.t_grid) > 0):
            raise ValueError("t_grid must be strictly increasing")

    def __len__(self) -> int:
        return len(self.t_grid)

    @property
    def Jt(self) -> np.ndarray:
        return self.t_grid * self.j_abs

    def column(self, name: str) -> np.ndarray:
        return self.moments[:, MOMENT_NAMES.index(name)]

    @cached_property
    def states(self) -> list[MomentState]:
        return [MomentState.from_array(row) for row in self.moments]

    @property
    def final(self) -> MomentState:
        return MomentState.from_array(self.moments[-1])


def time_grid(t_final: float, dt: float) -> np.ndarray:
    if not dt > 0 or not t_final > 0:
        raise ValueError("t_final and dt must be positive")
    steps = int(math.ceil(t_final / dt - 1e-9))
    return dt * np.arange(steps + 1)


def rk4_propagator(A: np.ndarray, c: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """One classical RK4 step for dy/dt = A y + c, written as y -> P y + q.

    For an autonomous affine system the four stages collapse to the truncated
    Taylor series below; this is the same update, not an approximation of it.
    """
    n = A.shape[0]
    hA = h * A
    hA2 = hA @ hA
    hA3 = hA2 @ hA
    hA4 = hA3 @ hA
    P = np.eye(n) + hA + hA2 / 2 + hA3 / 6 + hA4 / 24
    q = h * (np.eye(n) + hA / 2 + hA2 / 6 + hA3 / 24) @ c
    return P, q


def rk4_step(f, y: np.ndarray, h: float) -> np.ndarray:
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate(
    params: ModelParams,
    t_final: float,
    dt: Optional[float] = None,
    *,
    method: str = "rk4",
    rtol: float = 1e-9,
    atol: float = 1e-14,
    initial: Optional[MomentState] = None,
    divergence_threshold: float = DIVERGENCE_THRESHOLD,
) -> Trajectory:
    """Integrate the moment equations from vacuum (or ``initial``).

    ``method="rk4"`` is fixed-step classical Runge-Kutta with step ``dt``;
    ``method="adaptive"`` uses an embedded 4(5) pair and only samples on the
    same grid. ``dt`` defaults to 1e-3 / |J|. If any moment exceeds
    ``divergence_threshold`` (or becomes non-finite) the trajectory stops at
    the last good sample and ``diverged`` is set.
    """
    rates = derive_rates(params)
    j_abs = time_unit(rates)
    if dt is None:
        dt = DEFAULT_DT_JT / j_abs
    t = time_grid(t_final, dt)
    A, c = linear_system(params, rates)
    y0 = to_real((initial or VACUUM).to_array())

    if method == "rk4":
        P, q = rk4_propagator(A, c, dt)
        ys = np.empty((len(t), y0.size))
        ys[0] = y = y0
        n_ok = len(t)
        diverged = False
        for k in range(1, len(t)):
            y = P @ y + q
            if not np.max(np.abs(y)) < divergence_threshold:
                n_ok, diverged = k, True
                break
            ys[k] = y
    elif method == "adaptive":

        def blowup(_t, y):
            return divergence_threshold - np.max(np.abs(y))

        blowup.terminal = True
        sol = solve_ivp(
            lambda _t, y: A @ y + c,
            (0.0, t[-1]),
            y0,
            method="RK45",
            t_eval=t,
            rtol=rtol,
            atol=atol,
            events=blowup,
        )
        ys = sol.y.T
        n_ok = ys.shape[0]
        diverged = sol.status == 1 or n_ok < len(t)
    else:
        raise ValueError(f"unknown method {method!r}")

    return Trajectory(
        t_grid=t[:n_ok],
        moments=from_real(ys[:n_ok]),
        params=params,
        j_abs=j_abs,
        diverged=diverged,
    )


def steady_state_numeric(params: ModelParams) -> MomentState:
    """Fixed point of the moment equations reached from vacuum.

    First moments obey a homogeneous system and stay at zero; the six second
    moments solve the 12x12 real affine system A m + c = 0.
    """
    rates = derive_rates(params)
    threshold = stability_threshold(rates)
    if not params.epsilon < threshold:
        raise NoSteadyState(
            f"no stable steady state: epsilon={params.epsilon} >= Lambda/4={threshold}"
        )
    A, c = _second_order_block(*linear_system(params, rates))
    if np.linalg.matrix_rank(A) < A.shape[0]:
        raise SingularSystem("steady-state system is singular (degenerate parameters)")
    m = np.linalg.solve(A, -c)
    scale = np.max(np.abs(c))
    # one round of refinement tightens the residual for ill-conditioned points
    m = m + np.linalg.solve(A, -(A @ m + c))
    residual = np.max(np.abs(A @ m + c))
    if residual > 1e-12 * scale:
        raise SingularSystem(f"steady-state residual {residual:.3e} too large")
    if np.max(np.linalg.eigvals(A).real) >= 0:
        raise NoSteadyState("steady state exists but is not attracting")
    k = len(SECOND_ORDER)
    out = np.zeros(len(MOMENT_NAMES), dtype=complex)
    out[list(SECOND_ORDER)] = m[:k] + 1j * m[k:]
    return MomentState.from_array(out)
