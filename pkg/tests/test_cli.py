import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from thinfilm.cli import EXIT_CONFIG, EXIT_INVARIANT, EXIT_OK, EXIT_SOLVER, main
from thinfilm.config import SCHEMA, ConfigError, RunConfig, parse_text

SHORT_EVOLVE = ["--set", "solver.t_end=2", "--set", "grid.n=64", "--set", "grid.length=8pi"]


def _run(mode, tmp_path, *extra, name="out"):
    out = tmp_path / name
    code = main([mode, "--output", str(out), *extra])
    return code, out


def _meta(out):
    return json.loads((out / "metadata.json").read_text())


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# -- config ------------------------------------------------------------------

def test_parse_text_types_and_comments():
    vals = parse_text("# comment\nparams.r = 2.5  # inline\ngrid.length = 16pi\nsweep.values = 1, 2,3\n"
                      "emit_plots = yes\nbvp.continuation = none\n")
    assert vals == {"params.r": 2.5, "grid.length": 16 * np.pi, "sweep.values": (1.0, 2.0, 3.0),
                    "emit_plots": True, "bvp.continuation": None}


@pytest.mark.parametrize("text,line,key", [
    ("params.r = 1\nparams.q = 2\n", 2, "params.q"),
    ("\n\nparams.r = fast\n", 3, "params.r"),
    ("params.r = 1\nparams.r = 2\n", 2, "params.r"),
    ("params.r = inf\n", 1, "params.r"),
    ("solver.scheme = rk4\n", 1, "solver.scheme"),
])
def test_parse_errors_name_line_and_field(text, line, key):
    with pytest.raises(ConfigError) as info:
        parse_text(text)
    assert info.value.line == line and info.value.key == key
    assert f"line {line}" in str(info.value) and key in str(info.value)


def test_missing_equals_is_reported():
    with pytest.raises(ConfigError, match="line 1"):
        parse_text("params.r 1\n")


def test_semantic_validation_names_field():
    with pytest.raises(ConfigError, match="params"):
        RunConfig({"params.C": -1.0}).params()
    with pytest.raises(ConfigError, match="seed"):
        RunConfig({"seed": -3})


def test_config_round_trips_through_text_and_mapping():
    cfg = RunConfig({"mode": "sweep", "params.r": 3.0, "sweep.values": (0.5, 1.0), "grid.length": 16 * np.pi,
                     "bvp.continuation": (1.0, 2.0)})
    assert RunConfig.from_text(cfg.to_text()).values == cfg.values
    mapping = json.loads(json.dumps(cfg.to_mapping()))
    assert RunConfig.from_mapping(mapping).values == cfg.values
    assert set(cfg.values) == set(SCHEMA)


def test_sweep_value_generation():
    cfg = RunConfig({"sweep.start": 0.1, "sweep.stop": 10.0, "sweep.count": 3})
    assert cfg.sweep_values() == [0.1, pytest.approx(1.0), 10.0]
    cfg = RunConfig({"sweep.start": 1.0, "sweep.stop": 3.0, "sweep.count": 3, "sweep.spacing": "linear"})
    assert cfg.sweep_values() == [1.0, 2.0, 3.0]


# -- modes -------------------------------------------------------------------

def test_evolve_mode(tmp_path):
    code, out = _run("evolve", tmp_path, *SHORT_EVOLVE, "--seed", "3", "--emit-plots")
    assert code == EXIT_OK
    meta = _meta(out)
    assert meta["status"] == "ok" and meta["exit_code"] == 0 and not meta["partial"]
    assert meta["config"]["seed"] == 3
    assert set(meta["versions"]) >= {"thinfilm", "numpy", "scipy", "python"}
    assert meta["wall_time_s"] > 0
    d = meta["diagnostics"]
    assert d["volume_drift"] <= 1e-8 and d["mass_drift"] <= 1e-8
    assert d["bound"]["holds"]
    rows = _rows(out / "trajectory.csv")
    assert rows[0] == ["t", "F", "F1", "F2", "D_film", "D_diff", "h_min", "volume", "mass"]
    assert float(rows[-1][0]) == 2.0
    for name in ("final_state.csv", "h_final.svg", "c_final.svg", "energy.svg", "h_min.svg"):
        assert (out / name).exists() and name in meta["files"]
    assert (out / "energy.svg").read_text().startswith("<svg")


def test_csv_format(tmp_path):
    _, out = _run("evolve", tmp_path, *SHORT_EVOLVE)
    raw = (out / "final_state.csv").read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")
    rows = _rows(out / "final_state.csv")
    # 17 significant digits round-trip exactly
    x = [float(r[0]) for r in rows[1:]]
    assert x[1] == 8 * np.pi / 64


def test_plots_are_off_by_default(tmp_path):
    _, out = _run("evolve", tmp_path, *SHORT_EVOLVE)
    assert not list(out.glob("*.svg"))


def test_outputs_are_byte_identical_across_runs(tmp_path):
    _, a = _run("evolve", tmp_path, *SHORT_EVOLVE, "--seed", "11", name="a")
    _, b = _run("evolve", tmp_path, *SHORT_EVOLVE, "--seed", "11", name="b")
    _, c = _run("evolve", tmp_path, *SHORT_EVOLVE, "--seed", "12", name="c")
    for name in ("trajectory.csv", "final_state.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
        assert (a / name).read_bytes() != (c / name).read_bytes()


def test_metadata_reruns_the_experiment(tmp_path):
    _, a = _run("evolve", tmp_path, *SHORT_EVOLVE, "--seed", "5", name="a")
    cfg = RunConfig.from_mapping(_meta(a)["config"])
    cfg_text = tmp_path / "rerun.cfg"
    cfg_text.write_text(cfg.to_text())
    code = main(["evolve", "--config", str(cfg_text), "--output", str(tmp_path / "b")])
    assert code == EXIT_OK
    assert (a / "trajectory.csv").read_bytes() == (tmp_path / "b" / "trajectory.csv").read_bytes()
    assert _meta(tmp_path / "b")["config"] == {**_meta(a)["config"], "output_dir": str(tmp_path / "b")}


def test_bvp_mode(tmp_path):
    code, out = _run("bvp", tmp_path, "--set", "params.C=1", "--set", "params.r=10")
    assert code == EXIT_OK
    assert _rows(out / "h_profile.csv")[0] == ["x", "value"]
    assert _rows(out / "c_profile.csv")[0] == ["x", "value"]
    assert _rows(out / "forces.csv")[0] == ["x", "F_cap", "F_vdw"]
    assert _meta(out)["diagnostics"]["h_min"] == pytest.approx(0.52072, abs=1e-5)


def test_single_point_sweep_matches_bvp(tmp_path):
    common = ["--set", "params.C=1", "--set", "params.r=10"]
    _, b = _run("bvp", tmp_path, *common, name="b")
    code, s = _run("sweep", tmp_path, *common, "--set", "sweep.parameter=r", "--set", "sweep.values=10",
                   name="s")
    assert code == EXIT_OK
    rows = _rows(s / "sweep.csv")
    assert rows[0] == ["r", "h_min", "residual", "iterations", "ok"]
    assert float(rows[1][1]) == _meta(b)["diagnostics"]["h_min"]


@pytest.mark.parametrize("param,values,trend", [("r", "0.1,1,5,10,20,30,40,50", "decreasing"),
                                                 ("A", "0.1,0.2,0.5,1,2,4,7,10", "increasing")])
def test_sweep_mode_trends(tmp_path, param, values, trend):
    code, out = _run("sweep", tmp_path, "--set", "params.C=1", "--set", f"sweep.parameter={param}",
                     "--set", f"sweep.values={values}")
    assert code == EXIT_OK
    meta = _meta(out)
    assert meta["diagnostics"]["monotonicity"] == trend
    assert meta["diagnostics"]["points"] == 8 and meta["diagnostics"]["failed"] == 0


def test_sweep_workers_give_same_table(tmp_path):
    common = ["--set", "params.C=1", "--set", "sweep.values=1,5,10"]
    _, a = _run("sweep", tmp_path, *common, "--set", "sweep.workers=2", name="a")
    _, b = _run("sweep", tmp_path, *common, "--set", "sweep.workers=2", name="b")
    _, c = _run("sweep", tmp_path, *common, name="c")
    assert (a / "sweep.csv").read_bytes() == (b / "sweep.csv").read_bytes()
    ha = [float(r[1]) for r in _rows(a / "sweep.csv")[1:]]
    hc = [float(r[1]) for r in _rows(c / "sweep.csv")[1:]]
    assert np.allclose(ha, hc, rtol=0, atol=1e-12)


def test_bound_mode(tmp_path):
    code, out = _run("bound", tmp_path)
    assert code == EXIT_OK
    rows = _rows(out / "M_curve.csv")
    assert rows[0] == ["A_abs", "M", "log_M"]
    M = np.array([float(r[1]) for r in rows[1:]])
    assert np.all(M > 0)
    d = _meta(out)["diagnostics"]
    assert d["interior_max"] and d["unimodal"] and d["positive"]


def test_galerkin_mode(tmp_path):
    code, out = _run("galerkin", tmp_path, "--set", "grid.length=2pi", "--set", "grid.n=64",
                     "--set", "init.kind=cosine", "--set", "init.amplitude=0.1", "--set", "solver.t_end=0.05",
                     "--set", "solver.record_every=0.01", "--set", "solver.dt_init=1e-5")
    assert code == EXIT_OK
    d = _meta(out)["diagnostics"]
    assert d["eta0_spread"] <= 1e-10
    assert d["grid_comparison"]["max_abs_dh"] <= 1e-3 and d["grid_comparison"]["max_abs_dc"] <= 1e-3
    assert _rows(out / "galerkin_trajectory.csv")[0] == ["t", "F_eps", "h_min", "eta0"]


def test_inequalities_mode(tmp_path):
    code, out = _run("check-inequalities", tmp_path, "--set", "inequalities.trials=200")
    assert code == EXIT_OK
    summary = json.loads((out / "summary.json").read_text())
    assert summary["trials"] == 200 and summary["min_slack"] >= -1e-10 and summary["all_reliable"]


# -- exit codes --------------------------------------------------------------

def test_config_errors_exit_2(tmp_path, capsys):
    assert main(["evolve", "--set", "params.q=1", "--output", str(tmp_path / "x")]) == EXIT_CONFIG
    assert "params.q" in capsys.readouterr().err
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("params.r = 1\ngrid.n = many\n")
    assert main(["evolve", "--config", str(cfg), "--output", str(tmp_path / "y")]) == EXIT_CONFIG
    assert "line 2" in capsys.readouterr().err
    assert main(["evolve", "--config", str(tmp_path / "missing.cfg")]) == EXIT_CONFIG
    # semantic errors surface while running and are recorded in metadata
    code, out = _run("evolve", tmp_path, "--set", "grid.n=7", name="z")
    assert code == EXIT_CONFIG
    assert _meta(out)["status"] == "config_error" and "grid" in _meta(out)["message"]


def test_solver_failure_exits_3_and_keeps_partial_output(tmp_path):
    code, out = _run("evolve", tmp_path, *SHORT_EVOLVE, "--set", "init.amplitude=0.5",
                     "--set", "solver.dt_init=0.05", "--set", "solver.dt_min=0.05", "--set", "solver.max_change=1e-9")
    assert code == EXIT_SOLVER
    meta = _meta(out)
    assert meta["partial"] and meta["status"] == "solver_failure"
    assert (out / "trajectory.csv").exists()


def test_invariant_violation_exits_4(tmp_path):
    code, out = _run("bvp", tmp_path, "--set", "params.C=1", "--set", "params.r=50", "--set", "bvp.half_width=10",
                     "--set", "bvp.n_points=601")
    assert code == EXIT_INVARIANT
    assert "end slopes" in _meta(out)["message"]


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "thinfilm", "bound", "--output", str(tmp_path / "m"),
                          "--set", "bound.A_count=5"], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert (tmp_path / "m" / "M_curve.csv").exists()
    res = subprocess.run([sys.executable, "-m", "thinfilm", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "check-inequalities" in res.stdout
