"""Physical parameters of the driven charger-battery pair.

All rates are measured in units of the common mode frequency ``omega``.
The two asymmetry knobs are applied here and nowhere else: ``x_scale``
rescales the shared-reservoir couplings (p_a -> p_a sqrt(x), p_b -> p_b / sqrt(x))
and ``xi`` fixes the battery's local damping through kappa_b = kappa_a / xi**2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Optional

# relative slack for the |p_b p_a*| = 1 check and the kappa_b / xi consistency check
NORM_TOL = 1e-12


class InvalidParameters(ValueError):
    """Raised when a ModelParams instance violates its invariants."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class ModelParams:
    omega: float = 1.0
    delta: float = 0.0
    epsilon: float = 0.05
    theta: float = 0.0
    coupling_J: complex = 0j
    kappa_a: float = 0.06
    # None means "derive from xi" (or equal to kappa_a when xi is also None)
    kappa_b: Optional[float] = None
    gamma: float = 0.5
    p_a: complex = 1 + 0j
    p_b: complex = 1 + 0j
    x_scale: float = 1.0
    xi: Optional[float] = None
    # when set, coupling_J is ignored and replaced by -i mu Gamma / 2
    nonreciprocal: bool = True

    def replace(self, **changes) -> "ModelParams":
        if "kappa" in changes:
            kappa = changes.pop("kappa")
            changes.setdefault("kappa_a", kappa)
            changes.setdefault("kappa_b", kappa)
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class DerivedRates:
    gamma_a: float
    gamma_b: float
    kappa_a: float
    kappa_b: float
    lambda_total: float
    delta_total: float
    mu: complex
    coupling_J: complex
    j_nonreciprocal: complex
    # sqrt(kappa_a / kappa_b); None when kappa_b vanishes
    xi: Optional[float]
    p_a_scaled: complex
    p_b_scaled: complex

    @property
    def j_abs(self) -> float:
        return abs(self.coupling_J)


def validate(params: ModelParams) -> ValidationReport:
    """Collect every violated invariant of ``params`` (empty report means valid)."""
    v: list[str] = []
    for name in ("omega", "delta", "epsilon", "theta", "kappa_a", "gamma", "x_scale"):
        value = getattr(params, name)
        if not math.isfinite(value):
            v.append(f"{name} must be finite")
    if params.omega <= 0:
        v.append("omega must be positive")
    if params.epsilon < 0:
        v.append("epsilon must be nonnegative")
    if params.gamma < 0:
        v.append("gamma must be nonnegative")
    if params.kappa_a < 0:
        v.append("kappa_a must be nonnegative")
    if params.kappa_b is not None and not params.kappa_b >= 0:
        v.append("kappa_b must be nonnegative")
    if not params.x_scale > 0:
        v.append("x_scale must be positive")
    if params.xi is not None and not params.xi > 0:
        v.append("xi must be positive")
    if params.p_a == 0 or params.p_b == 0:
        v.append("p_a and p_b must be nonzero")
    norm = abs(params.p_b * params.p_a.conjugate())
    if not abs(norm - 1.0) <= NORM_TOL:
        v.append(f"normalization |p_b p_a*| != 1 (got {norm:.12g})")
    if (
        params.kappa_b is not None
        and params.xi is not None
        and params.xi > 0
        and params.kappa_b >= 0
    ):
        implied = params.kappa_a / params.xi**2
        if abs(params.kappa_b - implied) > NORM_TOL * max(1.0, abs(implied)):
            v.append(
                f"kappa_b={params.kappa_b} inconsistent with xi={params.xi} "
                f"(kappa_a/xi^2 = {implied})"
            )
    return ValidationReport(v)


def effective_kappa_b(params: ModelParams) -> float:
    if params.kappa_b is not None:
        return float(params.kappa_b)
    if params.xi is not None:
        return params.kappa_a / params.xi**2
    return float(params.kappa_a)


def derive_rates(params: ModelParams) -> DerivedRates:
    """Total decay rates, mu and the effective coherent coupling.

    Raises InvalidParameters if ``validate`` reports anything.
    """
    report = validate(params)
    if not report.ok:
        raise InvalidParameters(report.violations)

    sx = math.sqrt(params.x_scale)
    p_a = complex(params.p_a) * sx
    p_b = complex(params.p_b) / sx
    gamma_a = params.gamma * abs(p_a) ** 2
    gamma_b = params.gamma * abs(p_b) ** 2
    kappa_b = effective_kappa_b(params)
    mu = -p_b * p_a.conjugate()
    j_nr = -1j * mu * params.gamma / 2
    coupling = j_nr if params.nonreciprocal else complex(params.coupling_J)
    xi = math.sqrt(params.kappa_a / kappa_b) if kappa_b > 0 else params.xi
    return DerivedRates(
        gamma_a=gamma_a,
        gamma_b=gamma_b,
        kappa_a=float(params.kappa_a),
        kappa_b=kappa_b,
        lambda_total=gamma_a + params.kappa_a,
        delta_total=gamma_b + kappa_b,
        mu=mu,
        coupling_J=coupling,
        j_nonreciprocal=j_nr,
        xi=xi,
        p_a_scaled=p_a,
        p_b_scaled=p_b,
    )


def resolved(params: ModelParams) -> ModelParams:
    """Return ``params`` with kappa_b and coupling_J written out explicitly.

    The x-scaling is *not* folded into p_a, p_b, so feeding the result back
    through ``derive_rates`` gives identical rates.
    """
    rates = derive_rates(params)
    return params.replace(kappa_b=rates.kappa_b, coupling_J=rates.coupling_J)


def stability_threshold(rates: DerivedRates) -> float:
    """Largest drive amplitude for which a steady state exists (Lambda / 4)."""
    return rates.lambda_total / 4.0


def is_stable(params: ModelParams, rates: Optional[DerivedRates] = None) -> bool:
    rates = rates or derive_rates(params)
    return params.epsilon < stability_threshold(rates)


def time_unit(rates: DerivedRates) -> float:
    """|J|, the rate used to express times as Jt. Falls back to 1 when J = 0."""
    j = rates.j_abs
    return j if j > 0 else 1.0
