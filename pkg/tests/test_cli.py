import json
from pathlib import Path

import numpy as np
import pytest

from lpvh2.cli import (
    EXIT_CONFIG,
    EXIT_INFEASIBLE,
    EXIT_OK,
    EXIT_SINGULAR,
    EXIT_VERIFY,
    main,
)
from lpvh2.synthesis import riccati_h2_oracle
from lpvh2.plantfile import load_plant

PLANTS = Path(__file__).resolve().parents[1] / "plants"
SCALAR = PLANTS / "scalar_demo.json"
DINT = PLANTS / "double_integrator.json"
ROTOR = PLANTS / "rotorcraft_box.json"
UNSTAB = PLANTS / "unstabilizable.json"


def run(*argv) -> int:
    return main([str(a) for a in argv])


# ------------------------------------------------------------------ synth


def test_synth_scalar_demo(tmp_path, capsys):
    code = run("synth", "--plant", SCALAR, "--out", tmp_path)
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert "gamma" in out

    report = json.loads((tmp_path / "result.json").read_text())
    assert report["status"] == "optimal"
    vertex = load_plant(SCALAR).vertex_systems[0]
    _, gamma_opt = riccati_h2_oracle(vertex)
    assert report["gamma"] < 1.05 * gamma_opt
    assert report["gamma_squared"] == pytest.approx(report["gamma"] ** 2, rel=1e-12)
    assert report["vertices"][0]["h2_below_gamma"] is True

    K = np.loadtxt(tmp_path / "K.csv", delimiter=",", ndmin=2)
    assert K.shape == (1, 1)
    assert K[0, 0] < -1.0


def test_synth_rotorcraft(tmp_path):
    code = run("synth", "--plant", ROTOR, "--out", tmp_path)
    assert code == EXIT_OK
    report = json.loads((tmp_path / "result.json").read_text())
    assert report["status"] == "optimal"
    assert len(report["vertices"]) == 4
    assert all(v["h2_below_gamma"] for v in report["vertices"])
    assert all(v["max_eig_lyapunov"] < 0 for v in report["vertices"])
    K = np.loadtxt(tmp_path / "K.csv", delimiter=",", ndmin=2)
    assert K.shape == (3, 5)


def test_synth_unstabilizable_exits_2(tmp_path, capsys):
    code = run("synth", "--plant", UNSTAB, "--out", tmp_path)
    assert code == EXIT_INFEASIBLE
    report = json.loads((tmp_path / "result.json").read_text())
    assert report["status"] == "infeasible"


def test_synth_malformed_plant_exits_1(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "name": oops\n}\n')
    code = run("synth", "--plant", bad, "--out", tmp_path / "out")
    assert code == EXIT_CONFIG
    err = capsys.readouterr().err
    assert f"{bad}:2:" in err


def test_synth_missing_plant_exits_1(tmp_path, capsys):
    code = run("synth", "--plant", tmp_path / "nope.json", "--out", tmp_path)
    assert code == EXIT_CONFIG


def test_synth_bad_epsilon_exits_1(tmp_path):
    assert run("synth", "--plant", SCALAR, "--out", tmp_path, "--epsilon", "-1e-6") == EXIT_CONFIG
    assert run("synth", "--plant", SCALAR, "--out", tmp_path, "--max-iter", "0") == EXIT_CONFIG


def test_synth_deterministic_outputs(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("synth", "--plant", DINT, "--out", a) == EXIT_OK
    assert run("synth", "--plant", DINT, "--out", b) == EXIT_OK
    assert (a / "result.json").read_bytes() == (b / "result.json").read_bytes()
    assert (a / "K.csv").read_bytes() == (b / "K.csv").read_bytes()
    # manifests agree on everything except the creation timestamp
    ma = json.loads((a / "manifest.json").read_text())
    mb = json.loads((b / "manifest.json").read_text())
    ma["parameters"].pop("out"), mb["parameters"].pop("out")
    assert ma["parameters"] == mb["parameters"]
    assert "created_utc" in ma["metadata"]


# ----------------------------------------------------------------- verify


def test_verify_round_trip(tmp_path):
    synth_out = tmp_path / "synth"
    assert run("synth", "--plant", ROTOR, "--out", synth_out) == EXIT_OK
    code = run(
        "verify",
        "--plant",
        ROTOR,
        "--gain",
        synth_out / "K.csv",
        "--out",
        tmp_path / "verify",
    )
    assert code == EXIT_OK
    report = json.loads((tmp_path / "verify" / "verification.json").read_text())
    assert report["passed"] is True
    assert report["quadratic_stability"] is True
    assert report["all_vertices_stable"] is True
    assert len(report["vertices"]) == 4


def test_verify_with_gamma_bound(tmp_path):
    synth_out = tmp_path / "synth"
    assert run("synth", "--plant", SCALAR, "--out", synth_out) == EXIT_OK
    gamma = json.loads((synth_out / "result.json").read_text())["gamma"]
    code = run(
        "verify", "--plant", SCALAR, "--gain", synth_out / "K.csv",
        "--gamma", gamma * 1.001, "--out", tmp_path / "v",
    )
    assert code == EXIT_OK
    # a bound below the achieved norm must fail
    code = run(
        "verify", "--plant", SCALAR, "--gain", synth_out / "K.csv",
        "--gamma", gamma * 0.5, "--out", tmp_path / "v2",
    )
    assert code == EXIT_VERIFY


def test_verify_zero_gain_fails(tmp_path):
    gain = tmp_path / "K.csv"
    gain.write_text("0\n")
    code = run("verify", "--plant", SCALAR, "--gain", gain, "--out", tmp_path / "v")
    assert code == EXIT_VERIFY
    report = json.loads((tmp_path / "v" / "verification.json").read_text())
    assert report["passed"] is False
    assert report["all_vertices_stable"] is False


def test_verify_requires_gain(tmp_path, capsys):
    assert run("verify", "--plant", SCALAR, "--out", tmp_path) == EXIT_CONFIG
    assert "--gain" in capsys.readouterr().err


def test_verify_rejects_wrong_gain_shape(tmp_path, capsys):
    gain = tmp_path / "K.csv"
    gain.write_text("1,2\n")
    assert run("verify", "--plant", SCALAR, "--gain", gain, "--out", tmp_path / "v") == EXIT_CONFIG
    assert "1x1" in capsys.readouterr().err


def test_verify_rejects_ragged_gain(tmp_path):
    gain = tmp_path / "K.csv"
    gain.write_text("1,2\n3\n")
    assert run("verify", "--plant", DINT, "--gain", gain, "--out", tmp_path / "v") == EXIT_CONFIG


# --------------------------------------------------------------- simulate


def test_simulate_writes_trajectories(tmp_path):
    code = run(
        "simulate", "--out", tmp_path, "--dt", "1e-3", "--horizon", "0.5",
        "--x0", "0.1,-0.05,0,0,0,0",
    )
    assert code == EXIT_OK
    traj = (tmp_path / "trajectory.csv").read_text().splitlines()
    assert traj[0] == "t,phi,theta,psi,p,q,r"
    assert len(traj) == 502  # header + 501 samples
    x_il = (tmp_path / "x_il.csv").read_text().splitlines()
    assert x_il[0] == "t,phi,theta,dphi,dtheta,dpsi"
    first = [float(v) for v in traj[1].split(",")]
    assert first[1] == pytest.approx(0.1)
    assert first[2] == pytest.approx(-0.05)


def test_simulate_rejects_bad_args(tmp_path):
    assert run("simulate", "--out", tmp_path, "--dt", "0") == EXIT_CONFIG
    assert run("simulate", "--out", tmp_path, "--horizon", "-1") == EXIT_CONFIG
    assert run("simulate", "--out", tmp_path, "--gains", "1,2,3") == EXIT_CONFIG
    assert run("simulate", "--out", tmp_path, "--gains", "1,2,3,4,-5") == EXIT_CONFIG
    assert run("simulate", "--out", tmp_path, "--x0", "a,b,c,d,e,f") == EXIT_CONFIG
    assert run("simulate", "--out", tmp_path, "--cmd", "0,0") == EXIT_CONFIG


# ----------------------------------------------------------- demo-innerloop


def test_demo_innerloop_zero_command_stays_at_origin(tmp_path, capsys):
    code = run(
        "demo-innerloop", "--out", tmp_path, "--cmd", "0,0,0",
        "--x0", "0,0,0,0,0,0", "--dt", "1e-3", "--horizon", "0.2",
    )
    assert code == EXIT_OK
    rows = np.loadtxt(tmp_path / "nonlinear.csv", delimiter=",", skiprows=1)
    assert np.abs(rows[:, 1:]).max() == 0.0
    comparison = json.loads((tmp_path / "comparison.json").read_text())
    assert comparison["max_deviation"] == 0.0


def test_demo_innerloop_tracks_linear_model(tmp_path):
    code = run(
        "demo-innerloop", "--out", tmp_path, "--cmd", "0.2,-0.1,0.3",
        "--x0", "0.05,0.02,0,0,0,0", "--dt", "1e-3", "--horizon", "1.0",
    )
    assert code == EXIT_OK
    comparison = json.loads((tmp_path / "comparison.json").read_text())
    assert comparison["max_deviation"] < 1e-6
    for key in ("phi", "theta", "dphi", "dtheta", "dpsi"):
        assert comparison["per_channel_max_deviation"][key] <= comparison["max_deviation"]


def test_demo_innerloop_out_of_band_pitch_exits_5(tmp_path, capsys):
    code = run("demo-innerloop", "--out", tmp_path, "--cmd", "0,1.6,0")
    assert code == EXIT_SINGULAR
    assert "pitch" in capsys.readouterr().err


# ------------------------------------------------------------------ parser


def test_unknown_command_exits_1(capsys):
    assert run("frobnicate") == EXIT_CONFIG


def test_missing_required_plant_exits_1(tmp_path, capsys):
    assert run("synth", "--out", tmp_path) == EXIT_CONFIG
