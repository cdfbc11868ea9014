import json
from pathlib import Path

import numpy as np
import pytest

from qbattery.cli import main, parse_grid
from qbattery.config import ConfigError
from qbattery.export import numeric_column, read_csv

RECIPES = sorted((Path(__file__).parent.parent / "recipes").glob("*.cfg"))


def run(tmp_path, *argv, name="out.csv"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    return code, (out.read_text() if out.exists() else None)


def test_simulate_row_count(tmp_path):
    code, text = run(tmp_path, "simulate", "--t-final-Jt", "20")
    assert code == 0
    cols = read_csv(text)
    assert len(cols["t"]) == 20001
    assert text.count("\n") == 20002
    for name in ("E_b", "E_b_passive", "ergotropy", "power", "eta_util", "eta_conv"):
        assert name in cols
    assert cols["eta_util"][0] == ""


def test_simulate_undriven_is_zero(tmp_path):
    code, text = run(tmp_path, "simulate", "--epsilon", "0", "--t-final-Jt", "1")
    assert code == 0
    cols = read_csv(text)
    for name in ("E_b", "E_b_passive", "ergotropy", "power"):
        assert np.all(numeric_column(cols[name]) == 0)


def test_simulate_above_threshold(tmp_path, capsys):
    code, _ = run(tmp_path, "simulate", "--epsilon", "0.15", "--kappa", "0.06", "--gamma", "0.5")
    assert code == 3
    assert "Lambda/4" in capsys.readouterr().err


def test_simulate_invalid_config(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("gamma = -1\n")
    assert run(tmp_path, "simulate", "--config", str(cfg))[0] == 2
    cfg.write_text("no_such_key = 1\n")
    assert run(tmp_path, "simulate", "--config", str(cfg))[0] == 2


def test_simulate_svg_and_baseline(tmp_path):
    svg = tmp_path / "plot.svg"
    code, text = run(
        tmp_path, "simulate", "--t-final-Jt", "2", "--dt-Jt", "0.01", "--baseline", "--svg", str(svg)
    )
    assert code == 0
    assert svg.read_text().startswith("<svg")
    assert {"E_b1", "eta_E", "eta_erg", "chi"} <= set(read_csv(text))


def test_output_is_deterministic(tmp_path):
    args = ("simulate", "--t-final-Jt", "5", "--dt-Jt", "0.01", "--theta", "0.3")
    _, first = run(tmp_path, *args, name="a.csv")
    _, second = run(tmp_path, *args, name="b.csv")
    assert first == second


def test_steady_json(tmp_path):
    code, text = run(tmp_path, "steady", "--format", "json", name="s.json")
    assert code == 0
    rec = json.loads(text)
    assert round(rec["metrics"]["E_b"], 4) == 0.1806
    ids = {d["formula_id"]: d for d in rec["diagnostics"]}
    assert not ids["sym_steady_ergotropy_v1"]["matches"]
    for d in rec["diagnostics"]:
        assert {"formula_id", "printed_value", "oracle_value", "abs_diff"} <= set(d)


def test_steady_undriven(tmp_path):
    code, text = run(tmp_path, "steady", "--format", "json", "--epsilon", "0", name="s.json")
    assert code == 0
    rec = json.loads(text)
    assert all(v == {"re": 0.0, "im": 0.0} for v in rec["moments"].values())
    assert rec["metrics"]["E_b"] == 0 and rec["metrics"]["ergotropy"] == 0


def test_steady_above_threshold(tmp_path):
    assert run(tmp_path, "steady", "--epsilon", "0.2")[0] == 3


def _sweep_config(tmp_path, body: str) -> str:
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text(body)
    return str(cfg)


def test_steady_sweeps_monotone(tmp_path):
    cfg = _sweep_config(
        tmp_path, "sweep = kappa\nvalues = 0.10, 0.02, 0.06\nmode = steady\noutputs = E_b, ergotropy\n"
    )
    code, text = run(tmp_path, "sweep", "--config", cfg)
    assert code == 0
    cols = read_csv(text)
    assert cols["value"] == ["0.02", "0.059999999999999998", "0.10000000000000001"]
    assert np.all(np.diff(numeric_column(cols["E_b"])) < 0)
    cfg = _sweep_config(
        tmp_path, "kappa = 0.06\nsweep = epsilon\nvalues = 0.03, 0.06, 0.09, 0.12\nmode = steady\n"
    )
    _, text = run(tmp_path, "sweep", "--config", cfg)
    assert np.all(np.diff(numeric_column(read_csv(text)["E_b"])) > 0)


def test_trajectory_sweep_row_order(tmp_path):
    cfg = _sweep_config(
        tmp_path, "sweep = epsilon\nvalues = 0.06, 0.03\nt_final_Jt = 1\ndt_Jt = 0.01\noutputs = n_b\n"
    )
    code, text = run(tmp_path, "sweep", "--config", cfg, "--jobs", "2")
    assert code == 0
    cols = read_csv(text)
    assert list(cols) == ["parameter", "value", "t", "Jt", "n_b"]
    value = numeric_column(cols["value"])
    jt = numeric_column(cols["Jt"])
    assert len(value) == 202
    assert np.all(np.diff(value) >= 0)
    assert np.all(np.diff(jt[:101]) > 0)


def test_sweep_rejects_bad_specs(tmp_path):
    for body in (
        "sweep = kappa\nvalues =\n",
        "sweep = nothing\nvalues = 1\n",
        "sweep = gamma\nvalues = 0.5, -1\n",
        "sweep = epsilon\nvalues = 0.05, 0.2\nmode = steady\n",
    ):
        assert run(tmp_path, "sweep", "--config", _sweep_config(tmp_path, body))[0] == 2


def test_compare_single_photon(tmp_path):
    code, text = run(tmp_path, "compare-single-photon", "--t-final-Jt", "2", "--dt-Jt", "0.01")
    assert code == 0
    cols = read_csv(text)
    assert list(cols) == ["t", "Jt", "E_b", "E_b1", "eta_E", "eta_erg", "chi"]
    assert cols["chi"][0] == "" and cols["chi"][1] != ""


def test_compare_single_photon_undriven(tmp_path):
    _, text = run(tmp_path, "compare-single-photon", "--epsilon", "0", "--t-final-Jt", "1")
    cols = read_csv(text)
    for name in ("eta_E", "eta_erg", "chi"):
        assert set(cols[name]) == {""}


def test_compare_late_ratio_grows_with_drive(tmp_path):
    late = []
    for eps in ("0.03", "0.12"):
        _, text = run(tmp_path, "compare-single-photon", "--epsilon", eps, "--dt-Jt", "0.01")
        late.append(numeric_column(read_csv(text)["eta_E"])[-1])
    assert late[1] > late[0]


def test_optimize_asymmetry(tmp_path):
    land = tmp_path / "land.csv"
    code, text = run(
        tmp_path, "optimize-asymmetry", "--kappa-a", "0.02", "--x-grid", "0.5:3:6",
        "--xi-grid", "0.5:3:6", "--format", "json", "--landscape", str(land), name="r.json",
    )
    assert code == 0
    rep = json.loads(text)
    assert rep["best"]["x"] == 0.5
    assert rep["evaluated"] == 36 and rep["skipped_unstable"] == 0
    cols = read_csv(land.read_text())
    erg = numeric_column(cols["ergotropy"]).reshape(6, 6)
    assert np.all(np.diff(erg, axis=1) >= 0)


def test_optimize_single_point(tmp_path):
    code, text = run(
        tmp_path, "optimize-asymmetry", "--kappa-a", "0.02", "--x-grid", "1:1:1", "--xi-grid", "1:1:1",
        "--format", "csv",
    )
    assert code == 0
    assert read_csv(text)["rank"] == ["1"]


def test_optimize_skips_unstable(tmp_path, capsys):
    code, text = run(
        tmp_path, "optimize-asymmetry", "--kappa-a", "0.02", "--epsilon", "0.05",
        "--x-grid", "0.1:0.5:2", "--xi-grid", "1:1:1", "--format", "json", name="r.json",
    )
    assert code == 0
    assert json.loads(text)["skipped_unstable"] == 1
    assert "skipping unstable" in capsys.readouterr().err


def test_parse_grid():
    np.testing.assert_allclose(parse_grid("0.5:3:6"), [0.5, 1, 1.5, 2, 2.5, 3])
    for bad in ("1:2", "2:1:3", "1:2:0", "1:2:1"):
        with pytest.raises(ConfigError):
            parse_grid(bad)


def test_oracle_check_undriven_passes(tmp_path):
    code, text = run(
        tmp_path, "oracle-check", "--epsilon", "0", "--t-final-Jt", "2", name="o.json"
    )
    assert code == 0
    assert json.loads(text)["passed"]


def test_oracle_check_tiny_cutoff_fails(tmp_path, capsys):
    code, text = run(
        tmp_path, "oracle-check", "--no-autocutoff", "--n-cut", "2", "--t-final-Jt", "2",
        name="o.json",
    )
    assert code == 4
    rep = json.loads(text)
    assert rep["diagnosis"] == "cutoff-too-small" and not rep["passed"]
    assert "cutoff" in capsys.readouterr().err


def test_adjudicate_report(tmp_path):
    code, text = run(tmp_path, "adjudicate", name="a.json")
    assert code == 0
    rep = json.loads(text)
    assert "neither printing matches" in rep["symmetric_point"]["verdict"]
    assert not rep["asymmetric"]["ergotropy_equals_energy_anywhere"]


@pytest.mark.parametrize("recipe", RECIPES, ids=[r.stem for r in RECIPES])
def test_recipes_run(tmp_path, recipe):
    command = "optimize-asymmetry" if recipe.stem.startswith("fig6") else "sweep"
    code, text = run(tmp_path, command, "--config", str(recipe))
    assert code == 0
    assert text.count("\n") > 1
