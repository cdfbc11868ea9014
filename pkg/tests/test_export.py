import math

import numpy as np

from qbattery.dynamics import integrate
from qbattery.export import (
    format_number,
    json_safe,
    line_plot_svg,
    numeric_column,
    read_csv,
    trajectory_from_csv,
    trajectory_table,
    write_csv,
)

from conftest import J_ABS


def test_format_number():
    assert format_number(None) == ""
    assert format_number(math.nan) == ""
    assert format_number(-0.0) == "0"
    assert format_number(True) == "true"
    assert format_number(3) == "3"
    x = 0.1 + 0.2
    assert float(format_number(x)) == x


def test_csv_layout():
    text = write_csv(["a", "b"], [[1.5, None], ["s", 2]])
    assert text == "a,b\n1.5,\ns,2\n"
    cols = read_csv(text)
    assert cols == {"a": ["1.5", "s"], "b": ["", "2"]}


def test_trajectory_round_trip_is_lossless(fig2):
    traj = integrate(fig2.replace(theta=0.3), 2 / J_ABS, 1e-2 / J_ABS)
    header, data = trajectory_table(traj)
    back = trajectory_from_csv(write_csv(header, data), traj.params)
    np.testing.assert_array_equal(back.t_grid, traj.t_grid)
    np.testing.assert_array_equal(back.moments, traj.moments)


def test_numeric_column_blanks_are_nan():
    col = numeric_column(["1", "", "2.5"])
    assert col[0] == 1 and math.isnan(col[1]) and col[2] == 2.5


def test_json_safe():
    out = json_safe({"a": math.nan, "b": np.float64(-0.0), "c": 1 + 2j, "d": np.arange(2)})
    assert out == {"a": None, "b": 0.0, "c": {"re": 1.0, "im": 2.0}, "d": [0, 1]}


def test_svg_is_self_contained():
    svg = line_plot_svg(np.linspace(0, 1, 5), {"E_b": np.arange(5.0)}, title="t & e")
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    assert "href" not in svg and "<script" not in svg
    assert "t &amp; e" in svg
