"""CSV and SVG writers shared by the command-line tools.

CSV: UTF-8, comma separated, ``\\n`` line endings, mandatory header, floats
written with 17 significant digits so they parse back bit-for-bit. Undefined
values (None or nan) are written as empty fields.
"""

from __future__ import annotations

import csv
import io
import math
from html import escape
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .dynamics import MOMENT_NAMES, Trajectory
from .model import ModelParams, derive_rates, time_unit

MOMENT_COLUMNS = tuple(f"{part}_{n}" for n in MOMENT_NAMES for part in ("re", "im"))


def format_number(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    x = float(value)
    if math.isnan(x):
        return ""
    # + 0.0 folds -0.0 into 0.0 so zero rows print identically
    return format(x + 0.0, ".17g")


def write_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_number(v) for v in row])
    return buf.getvalue()


def read_csv(text: str) -> dict[str, list[str]]:
    """Column name -> raw string values, in file order."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    cols: dict[str, list[str]] = {h: [] for h in header}
    for row in reader:
        if len(row) != len(header):
            raise ValueError(f"ragged CSV row: {row!r}")
        for h, v in zip(header, row):
            cols[h].append(v)
    return cols


def numeric_column(values: Sequence[str]) -> np.ndarray:
    return np.array([float(v) if v != "" else math.nan for v in values])


def trajectory_table(traj: Trajectory) -> tuple[list[str], np.ndarray]:
    """Header and 2-D float array: t, Jt, then Re/Im of every moment."""
    m = traj.moments
    parts = np.empty((len(traj), 2 * m.shape[1]))
    parts[:, 0::2] = m.real
    parts[:, 1::2] = m.imag
    data = np.column_stack([traj.t_grid, traj.Jt, parts])
    return ["t", "Jt", *MOMENT_COLUMNS], data


def trajectory_from_csv(text: str, params: ModelParams) -> Trajectory:
    """Inverse of the moment columns written by ``trajectory_table``."""
    cols = read_csv(text)
    t = numeric_column(cols["t"])
    moments = np.empty((len(t), len(MOMENT_NAMES)), dtype=complex)
    for k, name in enumerate(MOMENT_NAMES):
        moments[:, k] = numeric_column(cols[f"re_{name}"]) + 1j * numeric_column(cols[f"im_{name}"])
    return Trajectory(t, moments, params, time_unit(derive_rates(params)))


# ---------------------------------------------------------------------------
# SVG

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 2.5, 5, 10) if s * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-12 * step:
        out.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return out


def line_plot_svg(
    x: np.ndarray,
    series: Mapping[str, np.ndarray],
    *,
    title: str = "",
    xlabel: str = "Jt",
    ylabel: str = "",
    width: int = 640,
    height: int = 400,
) -> str:
    """Self-contained SVG line chart (inline styles, no external assets)."""
    left, right, top, bottom = 70, 150, 40, 50
    pw, ph = width - left - right, height - top - bottom
    x = np.asarray(x, dtype=float)
    finite = [np.asarray(y, dtype=float)[np.isfinite(y)] for y in series.values()]
    ys = np.concatenate(finite) if finite else np.array([0.0])
    ymin, ymax = (float(ys.min()), float(ys.max())) if ys.size else (0.0, 1.0)
    if ymax == ymin:
        ymin, ymax = ymin - 0.5, ymax + 0.5
    xmin, xmax = float(np.min(x)), float(np.max(x))
    if xmax == xmin:
        xmax = xmin + 1.0

    def sx(v: float) -> float:
        return left + (v - xmin) / (xmax - xmin) * pw

    def sy(v: float) -> float:
        return top + (ymax - v) / (ymax - ymin) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" style="background:#ffffff;font-family:sans-serif">',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" '
        'style="fill:none;stroke:#333333;stroke-width:1"/>',
    ]
    for v in _ticks(xmin, xmax):
        px = sx(v)
        out.append(
            f'<line x1="{px:.2f}" y1="{top + ph}" x2="{px:.2f}" y2="{top + ph + 5}" '
            'style="stroke:#333333"/>'
        )
        out.append(
            f'<text x="{px:.2f}" y="{top + ph + 18}" style="font-size:11px;text-anchor:middle">'
            f"{v:g}</text>"
        )
    for v in _ticks(ymin, ymax):
        py = sy(v)
        out.append(
            f'<line x1="{left - 5}" y1="{py:.2f}" x2="{left}" y2="{py:.2f}" style="stroke:#333333"/>'
        )
        out.append(
            f'<text x="{left - 8}" y="{py + 4:.2f}" style="font-size:11px;text-anchor:end">'
            f"{v:.4g}</text>"
        )
    for k, (name, y) in enumerate(series.items()):
        y = np.asarray(y, dtype=float)
        ok = np.isfinite(y)
        # thin very long series; the plot is a preview, the CSV holds the data
        stride = max(1, int(ok.sum() // 2000))
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x[ok][::stride], y[ok][::stride]))
        color = _PALETTE[k % len(_PALETTE)]
        out.append(
            f'<polyline points="{pts}" style="fill:none;stroke:{color};stroke-width:1.5"/>'
        )
        ly = top + 14 + 16 * k
        out.append(
            f'<line x1="{left + pw + 10}" y1="{ly}" x2="{left + pw + 30}" y2="{ly}" '
            f'style="stroke:{color};stroke-width:2"/>'
        )
        out.append(
            f'<text x="{left + pw + 35}" y="{ly + 4}" style="font-size:11px">{escape(name)}</text>'
        )
    out.append(
        f'<text x="{left + pw / 2:.1f}" y="{height - 10}" style="font-size:12px;text-anchor:middle">'
        f"{escape(xlabel)}</text>"
    )
    out.append(
        f'<text x="15" y="{top + ph / 2:.1f}" transform="rotate(-90 15 {top + ph / 2:.1f})" '
        f'style="font-size:12px;text-anchor:middle">{escape(ylabel)}</text>'
    )
    if title:
        out.append(
            f'<text x="{width / 2:.1f}" y="22" style="font-size:14px;text-anchor:middle">'
            f"{escape(title)}</text>"
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def json_safe(obj: Any) -> Any:
    """Recursively replace nan/inf by None and numpy scalars by Python ones."""
    if isinstance(obj, Mapping):
        return {str(k): json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [json_safe(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj) + 0.0
        return x if math.isfinite(x) else None
    if isinstance(obj, complex):
        return {"re": json_safe(obj.real), "im": json_safe(obj.imag)}
    return obj

