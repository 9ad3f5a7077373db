import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from finstab import (ConfigError, build_scenario, check_scenario, load_scenario,
                     run_scenario, scenario_from_json)
from finstab.scenario import hybrid_initial_state, parse_initial_state, resolve_seed
from finstab.frontends import transport_heat_model
from finstab import FrontendSpec


def heat_doc(**overrides):
    doc = {
        "name": "heat-small",
        "frontend": {"kind": "Heat1D", "n_modes": 4},
        "controller": {"variant": "BilinearPhi", "mu": 0.25},
        "initial_state": "mode2+0.5*mode3",
        "integration": {"t_max": 0.5, "sample_dt": 0.005},
        "seed": 0,
    }
    doc.update(overrides)
    return doc


def write_config(tmp_path, doc, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


def run_cli(*args, env=None):
    import os

    full_env = dict(os.environ)
    if env:
        full_env.update(env)
    cmd = [sys.executable, "-m", "finstab.cli", *args]
    return subprocess.run(cmd, capture_output=True, text=True, env=full_env)


# ---------------------------------------------------------------------------
# Config parsing


def test_rejects_unknown_keys_and_missing_routes():
    with pytest.raises(ConfigError):
        scenario_from_json(heat_doc(extra=1))
    with pytest.raises(ConfigError):
        scenario_from_json({"controller": {"variant": "ZeroControl"}})
    doc = heat_doc()
    doc["matrices"] = {"dim": 1, "generator": [[-1.0]], "control_op": "identity"}
    with pytest.raises(ConfigError):
        scenario_from_json(doc)
    with pytest.raises(ConfigError):
        scenario_from_json({"frontend": {"kind": "Heat1D"}, "controller": "BilinearPhi"})
    with pytest.raises(ConfigError):
        scenario_from_json(heat_doc(seed="not-a-number"))
    with pytest.raises(ConfigError):
        scenario_from_json([1, 2, 3])


def test_load_scenario_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_scenario(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_scenario(bad)


def test_seed_env_override(monkeypatch):
    config = scenario_from_json(heat_doc(seed=7))
    monkeypatch.delenv("FINSTAB_SEED", raising=False)
    assert resolve_seed(config) == 7
    monkeypatch.setenv("FINSTAB_SEED", "99")
    assert resolve_seed(config) == 99
    monkeypatch.setenv("FINSTAB_SEED", "pi")
    with pytest.raises(ConfigError):
        resolve_seed(config)


def test_unknown_integration_key_is_rejected():
    with pytest.raises(ConfigError):
        build_scenario(scenario_from_json(heat_doc(integration={"tmax": 1.0})))


# ---------------------------------------------------------------------------
# Initial states


def test_parse_combo_states():
    built = build_scenario(scenario_from_json(heat_doc()))
    model, dec = built.model, built.dec
    vec = parse_initial_state("mode2+0.5*mode3", model, dec, seed=0)
    assert np.array_equal(vec, [0.0, 1.0, 0.5, 0.0])
    vec = parse_initial_state("2*mode1-mode4", model, dec, seed=0)
    assert np.array_equal(vec, [2.0, 0.0, 0.0, -1.0])
    assert np.array_equal(parse_initial_state("zero", model, dec, 0), np.zeros(4))
    assert np.array_equal(parse_initial_state([1, 2, 3, 4], model, dec, 0),
                          [1.0, 2.0, 3.0, 4.0])
    with pytest.raises(ConfigError):
        parse_initial_state("mode9", model, dec, 0)
    with pytest.raises(ConfigError):
        parse_initial_state("mode2+!", model, dec, 0)
    with pytest.raises(ConfigError):
        parse_initial_state([1.0, 2.0], model, dec, 0)


def test_wperp_random_is_seeded_and_normalized():
    built = build_scenario(scenario_from_json(heat_doc()))
    model, dec = built.model, built.dec
    a = parse_initial_state("wperp-random(42)", model, dec, seed=0)
    b = parse_initial_state("wperp-random(42)", model, dec, seed=5)
    c = parse_initial_state("wperp-random(43)", model, dec, seed=0)
    assert np.array_equal(a, b)      # explicit seed wins over the config seed
    assert not np.array_equal(a, c)
    assert a[0] == 0.0               # no component along the unobservable mode
    assert np.linalg.norm(a) == pytest.approx(1.0, rel=1e-12)
    # without parentheses the scenario seed is used
    d = parse_initial_state("wperp-random", model, dec, seed=5)
    e = parse_initial_state("wperp-random", model, dec, seed=6)
    assert not np.array_equal(d, e)


def test_hybrid_presets():
    model = transport_heat_model(FrontendSpec(kind="TransportHeat2D", n_modes=4,
                                              grid_n=16, omega_h=0.25))
    bump = hybrid_initial_state("hybrid-bump", model)
    assert bump.c[0, 0] == 1.0 and bump.c[1, 1] == 1.0
    assert np.all(bump.psi[:model.n_omega, :model.n_omega] == 0.0)
    assert np.any(bump.psi != 0.0)
    flat = hybrid_initial_state("phi00", model)
    assert flat.c[0, 0] == 1.0 and np.all(flat.psi == 0.0)
    custom = hybrid_initial_state({"phi_modes": [[2, 3, -1.5]], "psi": "zero"}, model)
    assert custom.c[2, 3] == -1.5
    with pytest.raises(ConfigError):
        hybrid_initial_state("no-such-preset", model)
    with pytest.raises(ConfigError):
        hybrid_initial_state({"phi_modes": [[9, 0, 1.0]]}, model)
    with pytest.raises(ConfigError):
        hybrid_initial_state({"psi": [[1.0, 2.0]]}, model)


# ---------------------------------------------------------------------------
# Running scenarios in process


def test_heat_run_writes_consistent_artifacts(tmp_path):
    config = scenario_from_json(heat_doc())
    code, summary = run_scenario(config, tmp_path / "out")
    assert code == 0
    assert summary["status"] == "ok"
    assert all(r["passed"] for r in summary["checks"])
    assert sorted(summary["artifacts"]) == ["plot.svg", "summary.json", "trajectory.csv"]
    csv_bytes = (tmp_path / "out" / "trajectory.csv").read_bytes()
    assert b"\r" not in csv_bytes  # LF endings only
    lines = csv_bytes.decode().splitlines()
    assert lines[0] == "t,y_1,y_2,y_3,y_4,u,V"
    for token in lines[1].split(",") + lines[-1].split(","):
        assert repr(float(token)) == token  # shortest round-trip formatting
    doc = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert doc["exit_code"] == 0
    assert doc["decomposition"]["delta"] == "NotNilpotent"
    svg = (tmp_path / "out" / "plot.svg").read_text()
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")


def test_runs_are_deterministic(tmp_path):
    config = scenario_from_json(heat_doc())
    run_scenario(config, tmp_path / "a")
    run_scenario(config, tmp_path / "b")
    for name in ("trajectory.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_plot_can_be_disabled(tmp_path):
    config = scenario_from_json(heat_doc(plot=False))
    code, summary = run_scenario(config, tmp_path / "out")
    assert code == 0
    assert "plot.svg" not in summary["artifacts"]
    assert not (tmp_path / "out" / "plot.svg").exists()


def test_matrix_route_run(tmp_path):
    doc = {
        "name": "matrix-pair",
        "matrices": {"dim": 2, "generator": {"diagonal": [-1.0, -2.0]},
                     "control_op": "identity"},
        "controller": {"variant": "BilinearPhi", "mu": 0.25},
        "initial_state": [1.0, 1.0],
        "integration": {"t_max": 3.0, "sample_dt": 0.01},
    }
    code, summary = run_scenario(scenario_from_json(doc), tmp_path / "out")
    assert code == 0
    assert summary["settling_time"] is not None
    assert summary["settling_time"] <= summary["settling_bound"] + 0.01 + 1e-9


def test_invalid_control_operator_short_circuits(tmp_path):
    doc = {
        "name": "bad-operator",
        "matrices": {"dim": 2, "generator": {"diagonal": [-1.0, -2.0]},
                     "control_op": [[0.0, 1.0], [0.0, 0.0]]},
        "controller": {"variant": "BilinearPhi", "mu": 0.25},
        "initial_state": [1.0, 1.0],
        "integration": {"t_max": 1.0},
    }
    code, summary = run_scenario(scenario_from_json(doc), tmp_path / "out")
    assert code == 1
    assert summary["status"] == "invalid"
    assert not (tmp_path / "out" / "trajectory.csv").exists()


def test_stalled_run_exits_3(tmp_path):
    doc = {
        "name": "stall",
        "matrices": {"dim": 1, "generator": [[-200.0]], "control_op": "identity"},
        "controller": {"variant": "ZeroControl"},
        "initial_state": [1.0],
        "integration": {"t_max": 5.0, "rtol": 1e-12, "atol": 1e-15,
                        "dt_min": 0.5, "dt_init": 0.5, "dt_max": 0.5,
                        "sample_dt": 0.5},
    }
    code, summary = run_scenario(scenario_from_json(doc), tmp_path / "out")
    assert code == 3
    assert summary["status"] == "stalled"


def test_check_scenario_heat_passes_and_wave_reports_h2():
    code, summary = check_scenario(scenario_from_json(heat_doc()))
    assert code == 0
    assert {r["name"] for r in summary["checks"]} >= {"H1", "H2", "gamma_certificate"}
    wave_doc = heat_doc(frontend={"kind": "Wave1D", "n_modes": 4, "q": 2},
                        initial_state="wperp-random(1)")
    code, summary = check_scenario(scenario_from_json(wave_doc))
    # the built-in wave compensation under-compensates, and the check says so
    assert code == 1
    h2 = [r for r in summary["checks"] if r["name"] == "H2"][0]
    assert not h2["passed"]


def test_seed_override_changes_the_drawn_state(monkeypatch):
    doc = heat_doc(initial_state="wperp-random")
    monkeypatch.setenv("FINSTAB_SEED", "11")
    y_a = build_scenario(scenario_from_json(doc)).y0
    monkeypatch.setenv("FINSTAB_SEED", "12")
    y_b = build_scenario(scenario_from_json(doc)).y0
    assert not np.array_equal(y_a, y_b)


# ---------------------------------------------------------------------------
# The installed command line


def test_cli_run_and_check(tmp_path):
    path = write_config(tmp_path, heat_doc())
    out = tmp_path / "out"
    cp = run_cli("run", "--config", str(path), "--out", str(out))
    assert cp.returncode == 0, cp.stderr
    assert "[pass]" in cp.stdout and "status=ok" in cp.stdout
    assert (out / "trajectory.csv").exists()
    cp = run_cli("check", "--config", str(path))
    assert cp.returncode == 0, cp.stderr
    assert "all checks passed" in cp.stdout


def test_cli_config_errors(tmp_path):
    path = write_config(tmp_path, heat_doc(bogus=1))
    cp = run_cli("run", "--config", str(path), "--out", str(tmp_path / "out"))
    assert cp.returncode == 2
    assert "config error" in cp.stderr
    cp = run_cli("check", "--config", str(tmp_path / "nowhere.json"))
    assert cp.returncode == 2


def test_cli_stall_exit_code(tmp_path):
    doc = {
        "name": "stall",
        "matrices": {"dim": 1, "generator": [[-200.0]], "control_op": "identity"},
        "controller": {"variant": "ZeroControl"},
        "initial_state": [1.0],
        "integration": {"t_max": 5.0, "rtol": 1e-12, "atol": 1e-15,
                        "dt_min": 0.5, "dt_init": 0.5, "dt_max": 0.5,
                        "sample_dt": 0.5},
    }
    path = write_config(tmp_path, doc)
    cp = run_cli("run", "--config", str(path), "--out", str(tmp_path / "out"))
    assert cp.returncode == 3
    assert "status=stalled" in cp.stdout


def test_cli_suite_list_and_bad_filter():
    cp = run_cli("suite", "--list")
    assert cp.returncode == 0, cp.stderr
    names = cp.stdout.split()
    assert len(names) == 9
    assert names[0] == "c1-heat-settling" and names[-1] == "c9-stability-sweep"
    cp = run_cli("suite", "--filter", "zz-no-such-*")
    assert cp.returncode == 2
    assert "no criteria match" in cp.stderr


def test_cli_hybrid_run_writes_grids(tmp_path):
    doc = {
        "name": "hybrid-small",
        "frontend": {"kind": "TransportHeat2D", "n_modes": 4, "grid_n": 32,
                     "omega_h": 0.25},
        "controller": {"variant": "BilinearPhi", "mu": 0.25},
        "initial_state": "hybrid-bump",
        "integration": {"t_max": 3.0},
    }
    path = write_config(tmp_path, doc)
    out = tmp_path / "out"
    cp = run_cli("run", "--config", str(path), "--out", str(out))
    assert cp.returncode == 0, cp.stdout + cp.stderr
    assert (out / "psi_initial.csv").exists() and (out / "psi_final.csv").exists()
    final = np.loadtxt(out / "psi_final.csv", delimiter=",")
    assert final.shape == (32, 32)
    assert np.all(final == 0.0)  # the transport component has exited


def test_cli_seed_env_changes_the_run(tmp_path):
    doc = heat_doc(initial_state="wperp-random",
                   controller={"variant": "ZeroControl"},
                   integration={"t_max": 0.1, "sample_dt": 0.01})
    path = write_config(tmp_path, doc)
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert run_cli("run", "--config", str(path), "--out", str(a),
                   env={"FINSTAB_SEED": "5"}).returncode == 0
    assert run_cli("run", "--config", str(path), "--out", str(b),
                   env={"FINSTAB_SEED": "5"}).returncode == 0
    assert run_cli("run", "--config", str(path), "--out", str(c),
                   env={"FINSTAB_SEED": "6"}).returncode == 0
    csv = lambda d: (d / "trajectory.csv").read_bytes()
    assert csv(a) == csv(b)
    assert csv(a) != csv(c)
