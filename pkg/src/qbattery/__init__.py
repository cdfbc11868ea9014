"""Simulator for a two-photon driven, nonreciprocally coupled charger-battery pair."""

from .dynamics import MomentState, Trajectory, integrate, moment_rhs, steady_state_numeric
from .metrics import BatteryMetrics, SinglePhotonBaseline
from .model import DerivedRates, ModelParams, derive_rates, stability_threshold, validate

__all__ = [
    "BatteryMetrics",
    "DerivedRates",
    "ModelParams",
    "MomentState",
    "SinglePhotonBaseline",
    "Trajectory",
    "derive_rates",
    "integrate",
    "moment_rhs",
    "stability_threshold",
    "steady_state_numeric",
    "validate",
]
