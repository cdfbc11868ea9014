"""Command-line front end.

Exit codes: 0 success, 2 invalid configuration or parameters, 3 drive above
the stability threshold or divergence, 4 oracle check failed.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np

from . import analytic, metrics, oracle
from .config import (
    MODEL_KEYS,
    ConfigError,
    format_value,
    params_from_mapping,
    read_config,
)
from .dynamics import (
    MOMENT_NAMES,
    NoSteadyState,
    SingularSystem,
    integrate,
    steady_state_numeric,
)
from .export import (
    json_safe,
    line_plot_svg,
    trajectory_table,
    write_csv,
)
from .model import InvalidParameters, ModelParams, derive_rates, stability_threshold, time_unit

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_UNSTABLE = 3
EXIT_ORACLE = 4

METRIC_COLUMNS = ("E_b", "E_b_passive", "ergotropy", "power", "eta_util", "eta_conv")
BASELINE_COLUMNS = ("E_b1", "eta_E", "eta_erg", "chi")
TIME_KEYS = {"t_final_Jt", "dt_Jt"}


class CliError(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        super().__init__(message)


# ---------------------------------------------------------------------------
# configuration plumbing

_OVERRIDES = {
    "omega": "omega",
    "delta": "delta",
    "epsilon": "epsilon",
    "theta": "theta",
    "coupling-J": "coupling_J",
    "kappa": "kappa",
    "kappa-a": "kappa_a",
    "kappa-b": "kappa_b",
    "gamma": "gamma",
    "p-a": "p_a",
    "p-b": "p_b",
    "x-scale": "x_scale",
    "xi": "xi",
    "nonreciprocal": "nonreciprocal",
}


def _load(args: argparse.Namespace, allowed_extra: set[str]) -> tuple[ModelParams, dict[str, str]]:
    mapping = read_config(args.config) if args.config else {}
    unknown = sorted(k for k in mapping if k not in MODEL_KEYS and k not in allowed_extra)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    params = params_from_mapping(mapping)
    overrides = {
        key: getattr(args, flag.replace("-", "_"))
        for flag, key in _OVERRIDES.items()
        if getattr(args, flag.replace("-", "_"), None) is not None
    }
    if overrides:
        params = params_from_mapping(overrides, base=params)
    derive_rates(params)
    extra = {k: v for k, v in mapping.items() if k not in MODEL_KEYS}
    return params, extra


def _float_setting(args, extra: dict[str, str], name: str, default: float) -> float:
    flag = getattr(args, name, None)
    if flag is not None:
        value = flag
    elif name in extra:
        try:
            value = float(extra[name])
        except ValueError as exc:
            raise ConfigError(f"bad value for {name}: {extra[name]!r}") from exc
    else:
        value = default
    if not (math.isfinite(value) and value > 0):
        raise ConfigError(f"{name} must be positive")
    return value


def _require_stable(params: ModelParams) -> None:
    rates = derive_rates(params)
    threshold = stability_threshold(rates)
    if not params.epsilon < threshold:
        raise CliError(
            EXIT_UNSTABLE,
            f"epsilon={params.epsilon:g} is not below the stability threshold "
            f"Lambda/4={threshold:g} (Lambda={rates.lambda_total:g}); moments grow without bound",
        )


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="")
    else:
        sys.stdout.write(text)


def _dump_json(obj: Any) -> str:
    return json.dumps(json_safe(obj), indent=2, allow_nan=False) + "\n"


def _table_output(header: Sequence[str], rows: np.ndarray | list, fmt: str) -> str:
    if fmt == "json":
        cols = {h: [r[i] for r in rows] for i, h in enumerate(header)}
        return _dump_json(cols)
    return write_csv(header, rows)


def _params_record(params: ModelParams) -> dict[str, str]:
    return {k: format_value(v) for k, v in params.as_dict().items()}


def _jobs(args) -> int:
    return args.jobs if args.jobs else min(4, os.cpu_count() or 1)


# ---------------------------------------------------------------------------
# simulate


def _time_grid_settings(args, extra, params) -> tuple[float, float, float]:
    j = time_unit(derive_rates(params))
    t_final_jt = _float_setting(args, extra, "t_final_Jt", 20.0)
    dt_jt = _float_setting(args, extra, "dt_Jt", 1e-3)
    return j, t_final_jt / j, dt_jt / j


def cmd_simulate(args) -> int:
    params, extra = _load(args, TIME_KEYS)
    _require_stable(params)
    j, t_final, dt = _time_grid_settings(args, extra, params)
    traj = integrate(params, t_final, dt)
    if traj.diverged:
        raise CliError(EXIT_UNSTABLE, "divergence detected; check epsilon against Lambda/4")
    tm = metrics.trajectory_metrics(traj)
    header, data = trajectory_table(traj)
    cols = [tm.E_b, tm.E_b_passive, tm.ergotropy, tm.power, tm.eta_util, tm.eta_conv]
    header = header + list(METRIC_COLUMNS)
    if args.baseline:
        base = metrics.single_photon_baseline(params, traj.t_grid)
        eta_E, eta_erg, chi = metrics.compare_to_baseline(tm.E_b, tm.ergotropy, tm.E_a, base)
        cols += [np.asarray(base.E_b1), eta_E, eta_erg, chi]
        header += list(BASELINE_COLUMNS)
    table = np.column_stack([data, *cols])
    _emit(_table_output(header, table, args.format), args.out)
    if args.svg:
        names = [c.strip() for c in args.plot.split(",") if c.strip()]
        missing = [n for n in names if n not in header]
        if missing:
            raise ConfigError(f"cannot plot unknown columns {missing}")
        series = {n: table[:, header.index(n)] for n in names}
        Path(args.svg).write_text(
            line_plot_svg(traj.Jt, series, title="battery charging", ylabel="/ omega"),
            encoding="utf-8",
        )
    return EXIT_OK


# ---------------------------------------------------------------------------
# steady


def steady_record(params: ModelParams) -> dict:
    rates = derive_rates(params)
    state = steady_state_numeric(params)
    m = metrics.BatteryMetrics.from_state(state, params.omega)
    return {
        "params": _params_record(params),
        "lambda_total": rates.lambda_total,
        "delta_total": rates.delta_total,
        "stability_threshold": stability_threshold(rates),
        "moments": {n: getattr(state, n) for n in MOMENT_NAMES},
        "metrics": {
            "E_b": m.E_b,
            "E_b_passive": m.E_b_passive,
            "ergotropy": m.ergotropy,
            "E_a": m.E_a,
            "eta_util": m.eta_util,
            "eta_conv": m.eta_conv,
        },
        "diagnostics": [d.as_dict() for d in analytic.steady_diagnostics(params)],
    }


def cmd_steady(args) -> int:
    params, _ = _load(args, set())
    _require_stable(params)
    rec = steady_record(params)
    if args.format == "csv":
        flat = dict(rec["metrics"])
        for n, v in rec["moments"].items():
            flat[f"re_{n}"] = v.real
            flat[f"im_{n}"] = v.imag
        _emit(write_csv(list(flat), [list(flat.values())]), args.out)
    else:
        _emit(_dump_json(rec), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep


TRAJECTORY_OUTPUTS = (
    "n_a", "n_b", "abs_aa", "abs_bb", "E_b", "E_b_passive", "ergotropy", "power",
    "E_a", "eta_util", "eta_conv", "E_b1", "eta_E", "eta_erg", "chi",
)
STEADY_OUTPUTS = tuple(o for o in TRAJECTORY_OUTPUTS if o != "power")
SWEEP_KEYS = {"sweep", "values", "mode", "outputs"} | TIME_KEYS


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple[float, ...]
    base: ModelParams
    mode: str = "trajectory"
    outputs: tuple[str, ...] = ("E_b", "ergotropy")
    t_final_Jt: float = 20.0
    dt_Jt: float = 1e-3
    points: tuple[ModelParams, ...] = field(default=(), repr=False)

    @classmethod
    def from_mapping(cls, base: ModelParams, extra: dict[str, str], **flags) -> "SweepSpec":
        name = extra.get("sweep", "").strip()
        if not name:
            raise ConfigError("sweep spec needs 'sweep = <parameter>'")
        if name not in MODEL_KEYS:
            raise ConfigError(f"cannot sweep unknown parameter {name!r}")
        raw = [v.strip() for v in extra.get("values", "").split(",") if v.strip()]
        if not raw:
            raise ConfigError("sweep spec has an empty value list")
        try:
            values = sorted(float(v) for v in raw)
        except ValueError as exc:
            raise ConfigError(f"bad sweep values {raw}") from exc
        if len(set(values)) != len(values):
            raise ConfigError("duplicate sweep values")
        mode = extra.get("mode", "trajectory").strip()
        if mode not in ("trajectory", "steady"):
            raise ConfigError(f"mode must be trajectory or steady, got {mode!r}")
        allowed = TRAJECTORY_OUTPUTS if mode == "trajectory" else STEADY_OUTPUTS
        outputs = tuple(
            o.strip() for o in extra.get("outputs", "E_b, ergotropy").split(",") if o.strip()
        )
        bad = [o for o in outputs if o not in allowed]
        if bad or not outputs:
            raise ConfigError(f"unsupported outputs {bad} for mode {mode}")
        points = []
        for v in values:
            try:
                p = params_from_mapping({name: v}, base=base)
                derive_rates(p)
            except (InvalidParameters, ConfigError) as exc:
                raise ConfigError(f"invalid grid point {name}={v}: {exc}") from exc
            if mode == "steady" and not p.epsilon < stability_threshold(derive_rates(p)):
                raise ConfigError(f"grid point {name}={v} is above the stability threshold Lambda/4")
            points.append(p)
        return cls(
            name, tuple(values), base, mode, outputs,
            flags.get("t_final_Jt", 20.0), flags.get("dt_Jt", 1e-3), tuple(points),
        )


def _needs_baseline(outputs: Sequence[str]) -> bool:
    return any(o in BASELINE_COLUMNS for o in outputs)


def _trajectory_outputs(p: ModelParams, spec: SweepSpec) -> tuple[np.ndarray, np.ndarray, dict]:
    j = time_unit(derive_rates(p))
    traj = integrate(p, spec.t_final_Jt / j, spec.dt_Jt / j)
    if traj.diverged:
        raise CliError(EXIT_UNSTABLE, f"divergence at epsilon={p.epsilon:g}; check Lambda/4")
    tm = metrics.trajectory_metrics(traj)
    out = {
        "n_a": traj.column("n_a").real,
        "n_b": traj.column("n_b").real,
        "abs_aa": np.abs(traj.column("aa")),
        "abs_bb": np.abs(traj.column("bb")),
        "E_b": tm.E_b,
        "E_b_passive": tm.E_b_passive,
        "ergotropy": tm.ergotropy,
        "power": tm.power,
        "E_a": tm.E_a,
        "eta_util": tm.eta_util,
        "eta_conv": tm.eta_conv,
    }
    if _needs_baseline(spec.outputs):
        base = metrics.single_photon_baseline(p, traj.t_grid)
        eta_E, eta_erg, chi = metrics.compare_to_baseline(tm.E_b, tm.ergotropy, tm.E_a, base)
        out.update(E_b1=np.asarray(base.E_b1), eta_E=eta_E, eta_erg=eta_erg, chi=chi)
    return traj.t_grid, traj.Jt, out


def _steady_outputs(p: ModelParams, spec: SweepSpec) -> tuple[np.ndarray, np.ndarray, dict]:
    state = steady_state_numeric(p)
    m = metrics.BatteryMetrics.from_state(state, p.omega)
    out = {
        "n_a": state.n_a.real,
        "n_b": state.n_b.real,
        "abs_aa": abs(state.aa),
        "abs_bb": abs(state.bb),
        "E_b": m.E_b,
        "E_b_passive": m.E_b_passive,
        "ergotropy": m.ergotropy,
        "E_a": m.E_a,
        "eta_util": m.eta_util,
        "eta_conv": m.eta_conv,
    }
    if _needs_baseline(spec.outputs):
        c = metrics.steady_comparison(p)
        out.update(E_b1=c.E_b1, eta_E=c.eta_E, eta_erg=c.eta_erg, chi=c.chi)
    inf = np.array([math.inf])
    return inf, inf, {k: np.array([np.nan if v is None else v]) for k, v in out.items()}


def run_sweep(spec: SweepSpec, jobs: int = 1) -> tuple[list[str], list[list]]:
    worker: Callable = _trajectory_outputs if spec.mode == "trajectory" else _steady_outputs
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        results = list(pool.map(lambda p: worker(p, spec), spec.points))
    header = ["parameter", "value", "t", "Jt", *spec.outputs]
    rows: list[list] = []
    for v, (t, jt, out) in zip(spec.values, results):
        cols = [out[o] for o in spec.outputs]
        for k in range(len(t)):
            rows.append([spec.parameter, v, t[k], jt[k], *(c[k] for c in cols)])
    return header, rows


def cmd_sweep(args) -> int:
    params, extra = _load(args, SWEEP_KEYS)
    t_final_jt = _float_setting(args, extra, "t_final_Jt", 20.0)
    dt_jt = _float_setting(args, extra, "dt_Jt", 1e-3)
    spec = SweepSpec.from_mapping(params, extra, t_final_Jt=t_final_jt, dt_Jt=dt_jt)
    header, rows = run_sweep(spec, _jobs(args))
    _emit(_table_output(header, rows, args.format), args.out)
    if args.svg:
        first = spec.outputs[0]
        if spec.mode == "trajectory":
            series = {
                f"{spec.parameter}={v:g}": np.array([r[4] for r in rows if r[1] == v], dtype=float)
                for v in spec.values
            }
            x = np.array([r[3] for r in rows if r[1] == spec.values[0]])
            svg = line_plot_svg(x, series, title=first, ylabel=first)
        else:
            x = np.array(spec.values)
            series = {first: np.array([r[4] for r in rows], dtype=float)}
            svg = line_plot_svg(x, series, title=first, xlabel=spec.parameter, ylabel=first)
        Path(args.svg).write_text(svg, encoding="utf-8")
    return EXIT_OK


# ---------------------------------------------------------------------------
# single-photon comparison


def cmd_compare_single_photon(args) -> int:
    params, extra = _load(args, TIME_KEYS)
    _require_stable(params)
    if args.steady:
        c = metrics.steady_comparison(params)
        header = ["E_b", "ergotropy", "E_a", "E_b1", "E_a1", "eta_E", "eta_erg", "chi"]
        row = [c.E_b, c.ergotropy, c.E_a, c.E_b1, c.E_a1, c.eta_E, c.eta_erg, c.chi]
        _emit(_table_output(header, [row], args.format), args.out)
        return EXIT_OK
    j, t_final, dt = _time_grid_settings(args, extra, params)
    cr = metrics.comparison_ratios(params, t_final, dt)
    header = ["t", "Jt", "E_b", "E_b1", "eta_E", "eta_erg", "chi"]
    table = np.column_stack([cr.t, cr.Jt, cr.E_b, cr.E_b1, cr.eta_E, cr.eta_erg, cr.chi])
    _emit(_table_output(header, table, args.format), args.out)
    if args.svg:
        Path(args.svg).write_text(
            line_plot_svg(
                cr.Jt,
                {"eta_E": cr.eta_E, "eta_erg": cr.eta_erg, "chi": cr.chi},
                title="two-photon vs single-photon",
            ),
            encoding="utf-8",
        )
    return EXIT_OK


# ---------------------------------------------------------------------------
# asymmetry grid


def parse_grid(text: str) -> np.ndarray:
    try:
        lo, hi, n = text.split(":")
        lo_f, hi_f, n_i = float(lo), float(hi), int(n)
    except ValueError as exc:
        raise ConfigError(f"grid must be a:b:n, got {text!r}") from exc
    if n_i < 1 or not (math.isfinite(lo_f) and math.isfinite(hi_f)) or hi_f < lo_f:
        raise ConfigError(f"bad grid {text!r}")
    if n_i == 1 and lo_f != hi_f:
        raise ConfigError(f"a one-point grid needs a == b, got {text!r}")
    return np.linspace(lo_f, hi_f, n_i)


@dataclass(frozen=True)
class GridPoint:
    x: float
    xi: float
    stable: bool
    E_b: float = math.nan
    ergotropy: float = math.nan


def evaluate_asymmetry_grid(
    base: ModelParams, xs: np.ndarray, xis: np.ndarray, jobs: int = 1
) -> list[GridPoint]:
    """Steady E_b and ergotropy (numeric oracle) at every (x, xi), row-major in x."""

    def one(pair: tuple[float, float]) -> GridPoint:
        x, xi = pair
        p = base.replace(x_scale=float(x), xi=float(xi), kappa_b=None)
        try:
            state = steady_state_numeric(p)
        except NoSteadyState:
            return GridPoint(float(x), float(xi), False)
        return GridPoint(
            float(x),
            float(xi),
            True,
            metrics.battery_energy(state, p.omega),
            metrics.ergotropy(state, p.omega),
        )

    pairs = [(x, xi) for x in xs for xi in xis]
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        return list(pool.map(one, pairs))


def cmd_optimize_asymmetry(args) -> int:
    params, extra = _load(args, {"x_grid", "xi_grid", "rank_by"})
    xs = parse_grid(args.x_grid or extra.get("x_grid", "0.5:3:26"))
    xis = parse_grid(args.xi_grid or extra.get("xi_grid", "0.5:3:26"))
    rank_by = args.rank_by or extra.get("rank_by", "ergotropy").strip()
    if rank_by not in ("ergotropy", "E_b"):
        raise ConfigError("rank_by must be ergotropy or E_b")
    grid = evaluate_asymmetry_grid(params, xs, xis, _jobs(args))
    stable = [g for g in grid if g.stable]
    skipped = [g for g in grid if not g.stable]
    for g in skipped:
        print(
            f"warning: skipping unstable grid point x={g.x:g}, xi={g.xi:g} "
            f"(epsilon >= (x Gamma + kappa_a)/4)",
            file=sys.stderr,
        )
    ranked = sorted(stable, key=lambda g: (-getattr(g, rank_by), g.x, g.xi))
    if args.landscape:
        Path(args.landscape).write_text(
            write_csv(
                ["x", "xi", "stable", "E_b", "ergotropy"],
                [[g.x, g.xi, g.stable, g.E_b, g.ergotropy] for g in grid],
            ),
            encoding="utf-8",
        )
    if args.format == "csv":
        text = write_csv(
            ["rank", "x", "xi", "E_b", "ergotropy"],
            [[k + 1, g.x, g.xi, g.E_b, g.ergotropy] for k, g in enumerate(ranked)],
        )
    else:
        text = _dump_json(
            {
                "params": _params_record(params),
                "rank_by": rank_by,
                "evaluated": len(stable),
                "skipped_unstable": len(skipped),
                "best": None if not ranked else ranked[0].__dict__,
                "ranked": [dict(rank=k + 1, **g.__dict__) for k, g in enumerate(ranked)],
            }
        )
    _emit(text, args.out)
    if args.svg:
        series = {
            f"xi={xi:g}": np.array([getattr(g, rank_by) for g in grid if g.xi == xi])
            for xi in xis
        }
        Path(args.svg).write_text(
            line_plot_svg(xs, series, title=f"steady {rank_by}", xlabel="x", ylabel=rank_by),
            encoding="utf-8",
        )
    return EXIT_OK


# ---------------------------------------------------------------------------
# oracle check


def _pointwise(reference: np.ndarray, other: np.ndarray, rtol: float, atol: float) -> tuple[float, float]:
    """(worst |diff| / max(rtol |ref|, atol), worst |diff|); ratio <= 1 passes."""
    diff = np.abs(np.asarray(other) - np.asarray(reference))
    scale = np.maximum(rtol * np.abs(reference), atol)
    return float(np.max(diff / scale)), float(np.max(diff))


def _ergotropy_error_scale(n_b: np.ndarray, bb: np.ndarray, omega: float) -> np.ndarray:
    """First-order ergotropy change when n_b and |bb| each move by their own size.

    Multiplied by rtol this is the ergotropy tolerance implied by the moment
    tolerance; the passive-energy term can amplify moment errors several-fold.
    """
    n, m = np.asarray(n_b, dtype=float), np.abs(bb)
    root = np.sqrt(np.maximum((1 + 2 * n) ** 2 - 4 * m**2, 1.0))
    return omega * (np.abs(1 - (1 + 2 * n) / root) * n + 2 * m**2 / root)


def oracle_check(
    params: ModelParams,
    *,
    t_final_Jt: float = 20.0,
    dt_Jt: float = oracle.DEFAULT_DT_JT,
    autocutoff: bool = True,
    n_cut: int = 16,
    rtol: float = 1e-5,
    atol: float = 1e-8,
    analytic_rtol: float = 1e-6,
) -> dict:
    """Compare the Fock-space oracle, the moment equations and the closed forms.

    Both integrators use the same RK4 step so differences isolate the
    physics (truncation, closure) rather than time discretization.
    """
    rates = derive_rates(params)
    j = time_unit(rates)
    t_final, dt = t_final_Jt / j, dt_Jt / j
    report: dict[str, Any] = {
        "params": _params_record(params),
        "t_final_Jt": t_final_Jt,
        "dt_Jt": dt_Jt,
        "rtol": rtol,
        "atol": atol,
        "checks": [],
    }
    checks = report["checks"]
    try:
        if autocutoff:
            study = oracle.auto_cutoff(params, t_final, dt, rtol=rtol)
            otraj = study.trajectory
            report["cutoff"] = {
                "chosen": study.chosen,
                "converged": study.converged,
                "tried": list(study.cutoffs),
                "changes": list(study.changes),
                "error_estimate": study.error_estimate,
            }
        else:
            gen = oracle.build_generator(params, n_cut)
            otraj = oracle.evolve(oracle.DensityMatrix.vacuum(n_cut), gen, t_final, dt)
            report["cutoff"] = {"chosen": n_cut, "converged": None}
    except oracle.CutoffTooSmall as exc:
        report["passed"] = False
        report["diagnosis"] = "cutoff-too-small"
        report["worst"] = {"check": "cutoff", "message": str(exc)}
        return report
    report["trace_drift"] = otraj.trace_drift
    report["edge_population"] = otraj.edge_population

    traj = integrate(params, t_final, dt)
    for k, name in enumerate(MOMENT_NAMES):
        ratio, diff = _pointwise(traj.moments[:, k], otraj.moments[:, k], rtol, atol)
        checks.append({"check": f"oracle_vs_dynamics:{name}", "ratio": ratio, "max_abs": diff})
    tm = metrics.trajectory_metrics(traj)
    o_n_b = otraj.column("n_b").real
    o_D = metrics.radicand(o_n_b, otraj.column("mean_b"), otraj.column("bb"))
    o_erg = params.omega * o_n_b - params.omega * (np.sqrt(np.maximum(o_D, 1.0)) - 1) / 2
    ratio, diff = _pointwise(tm.E_b, params.omega * o_n_b, rtol, atol)
    checks.append({"check": "oracle_vs_dynamics:E_b", "ratio": ratio, "max_abs": diff})
    erg_scale = _ergotropy_error_scale(tm.E_b / params.omega, traj.column("bb"), params.omega)
    erg_diff = np.abs(o_erg - tm.ergotropy)
    checks.append(
        {
            "check": "oracle_vs_dynamics:ergotropy",
            "ratio": float(np.max(erg_diff / np.maximum(rtol * erg_scale, atol))),
            "max_abs": float(np.max(erg_diff)),
        }
    )

    dom = analytic.AnalyticDomain.from_params(params)
    if dom.delta_zero and dom.nonreciprocal:
        try:
            am = analytic.analytic_moments(traj.t_grid, dom)
        except analytic.DegenerateParameters as exc:
            report["analytic_skipped"] = str(exc)
        else:
            for name, ref, got in (
                ("n_a", am.n_a, traj.column("n_a").real),
                ("n_b", am.n_b, traj.column("n_b").real),
                ("abs_bb", np.abs(am.bb), np.abs(traj.column("bb"))),
            ):
                # sup-norm relative error: the closed forms vanish like t^2..t^4 at t = 0
                scale = float(np.max(np.abs(ref)))
                diff = float(np.max(np.abs(got - ref)))
                ratio = diff / (analytic_rtol * scale) if scale > 0 else (0.0 if diff == 0 else math.inf)
                checks.append({"check": f"dynamics_vs_analytic:{name}", "ratio": ratio, "max_abs": diff})

    if params.epsilon < stability_threshold(rates):
        gen = oracle.build_generator(params, otraj.n_cut)
        rho = oracle.steady_state_oracle(gen, otraj.final, dt)
        o_state = oracle.extract_moments(rho).to_array()
        try:
            ref_state = analytic.steady_correlators(dom).to_array()
            ref_name = "steady_oracle_vs_correlators"
        except (analytic.NotApplicable, analytic.DegenerateParameters):
            ref_state = steady_state_numeric(params).to_array()
            ref_name = "steady_oracle_vs_numeric"
        for k, name in enumerate(MOMENT_NAMES):
            ratio, diff = _pointwise(ref_state[k:k + 1], o_state[k:k + 1], rtol, atol)
            checks.append({"check": f"{ref_name}:{name}", "ratio": ratio, "max_abs": diff})

    worst = max(checks, key=lambda c: c["ratio"])
    report["worst"] = worst
    report["passed"] = all(c["ratio"] <= 1.0 for c in checks)
    report["max_moment_relative_deviation"] = max(
        c["ratio"] * rtol
        for c in checks
        if c["check"] in {f"oracle_vs_dynamics:{n}" for n in MOMENT_NAMES}
    )
    return report


def cmd_oracle_check(args) -> int:
    params, extra = _load(args, TIME_KEYS | {"n_cut", "rtol", "atol"})
    _require_stable(params)
    report = oracle_check(
        params,
        t_final_Jt=_float_setting(args, extra, "t_final_Jt", 20.0),
        dt_Jt=_float_setting(args, extra, "dt_Jt", oracle.DEFAULT_DT_JT),
        autocutoff=not args.no_autocutoff,
        n_cut=args.n_cut or int(extra.get("n_cut", 16)),
        rtol=_float_setting(args, extra, "rtol", 1e-5),
        atol=_float_setting(args, extra, "atol", 1e-8),
    )
    _emit(_dump_json(report), args.out)
    if not report["passed"]:
        w = report["worst"]
        detail = w.get("message") or f"ratio {w['ratio']:.3g} to tolerance"
        raise CliError(EXIT_ORACLE, f"oracle check failed; worst offender {w['check']}: {detail}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# adjudication report


def cmd_adjudicate(args) -> int:
    params, _ = _load(args, set())
    _require_stable(params)
    _emit(_dump_json(analytic.adjudication_report(params)), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_common(p: argparse.ArgumentParser, *, time_flags: bool = False, fmt: str = "csv") -> None:
    p.add_argument("--config", metavar="PATH", help="key = value parameter file")
    p.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=fmt)
    g = p.add_argument_group("parameter overrides")
    for flag in _OVERRIDES:
        g.add_argument(f"--{flag}", dest=flag.replace("-", "_"), metavar="V")
    if time_flags:
        p.add_argument("--t-final-Jt", dest="t_final_Jt", type=float, metavar="F")
        p.add_argument("--dt-Jt", dest="dt_Jt", type=float, metavar="F")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qbattery", description="Two-photon driven nonreciprocal quantum battery simulator"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate from vacuum and write a trajectory")
    _add_common(p, time_flags=True)
    p.add_argument("--svg", metavar="PATH")
    p.add_argument("--plot", default="E_b,ergotropy", help="comma-separated columns for --svg")
    p.add_argument("--baseline", action="store_true", help="append single-photon comparison columns")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("steady", help="steady-state moments, metrics and formula diagnostics")
    _add_common(p, fmt="json")
    p.set_defaults(func=cmd_steady)

    p = sub.add_parser("sweep", help="long-format CSV over one swept parameter")
    _add_common(p, time_flags=True)
    p.add_argument("--svg", metavar="PATH")
    p.add_argument("--jobs", type=int, default=0)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare-single-photon", help="ratios against the single-photon baseline")
    _add_common(p, time_flags=True)
    p.add_argument("--svg", metavar="PATH")
    p.add_argument("--steady", action="store_true", help="report the t -> infinity ratios only")
    p.set_defaults(func=cmd_compare_single_photon)

    p = sub.add_parser("optimize-asymmetry", help="rank steady performance on an (x, xi) grid")
    _add_common(p, fmt="json")
    p.add_argument("--x-grid", metavar="a:b:n")
    p.add_argument("--xi-grid", metavar="a:b:n")
    p.add_argument("--rank-by", choices=("ergotropy", "E_b"))
    p.add_argument("--landscape", metavar="PATH", help="write the full grid as CSV")
    p.add_argument("--svg", metavar="PATH")
    p.add_argument("--jobs", type=int, default=0)
    p.set_defaults(func=cmd_optimize_asymmetry)

    p = sub.add_parser("oracle-check", help="validate against the Fock-space Lindblad oracle")
    _add_common(p, time_flags=True, fmt="json")
    p.add_argument("--no-autocutoff", action="store_true")
    p.add_argument("--n-cut", type=int, metavar="N")
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("adjudicate", help="report which printed steady formulas match the oracle")
    _add_common(p, fmt="json")
    p.set_defaults(func=cmd_adjudicate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ConfigError, InvalidParameters) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NoSteadyState, SingularSystem) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE


if __name__ == "__main__":
    sys.exit(main())
