import csv
import json
from pathlib import Path

import numpy as np
import pytest

from soundersim import calib, waveform
from soundersim.cli import main

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"
SINGLE = str(SCENARIOS / "single_path.yaml")


def test_metrics_prints_table(capsys):
    rc = main(["metrics", "--scenario", str(SCENARIOS / "scenario1.yaml")])
    assert rc == 0
    out = capsys.readouterr().out
    assert "399.9" in out  # bandwidth MHz
    assert "557.1" in out  # coherence window microseconds
    assert "128" in out  # antenna combinations


def test_metrics_writes_json(tmp_path, capsys):
    rc = main(["metrics", "--scenario", SINGLE, "--out", str(tmp_path)])
    assert rc == 0
    data = json.loads((tmp_path / "metrics.json").read_text())
    assert data["channels_unique"] == 8


def test_malformed_scenario_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("config: {L: 64}\n")
    assert main(["metrics", "--scenario", str(bad)]) == 2
    assert "error:" in capsys.readouterr().err
    assert main(["metrics", "--scenario", str(tmp_path / "missing.yaml")]) == 2
    capsys.readouterr()


def test_simulate_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--scenario", SINGLE, "--out", str(a)]) == 0
    assert main(["simulate", "--scenario", SINGLE, "--out", str(b)]) == 0
    assert (a / "tensor.c8").read_bytes() == (b / "tensor.c8").read_bytes()
    c = tmp_path / "c"
    assert main(["simulate", "--scenario", SINGLE, "--out", str(c), "--seed", "99"]) == 0
    assert (a / "tensor.c8").read_bytes() != (c / "tensor.c8").read_bytes()


def _read_paths(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def simulated(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    assert main(["simulate", "--scenario", SINGLE, "--out", str(out)]) == 0
    return out


def test_estimate_round_trip(simulated, tmp_path):
    out = tmp_path / "est"
    rc = main([
        "estimate", "--scenario", SINGLE,
        "--tensor", str(simulated / "tensor.c8"),
        "--out", str(out), "--max-paths", "2",
    ])
    assert rc == 0
    rows = _read_paths(out / "paths.csv")
    assert len(rows) >= 1
    top = rows[0]
    assert float(top["tau_s"]) == pytest.approx(40e-9, abs=1e-9)
    assert float(top["aoa_az_deg"]) == pytest.approx(160.0, abs=2.0)
    assert float(top["gain_db"]) == pytest.approx(-2.0, abs=0.3)
    trace = json.loads((out / "residual.json").read_text())["residual_power_trace"]
    assert trace[-1] < trace[0]


def test_estimate_subspace_filter(simulated, tmp_path):
    out = tmp_path / "est"
    rc = main([
        "estimate", "--scenario", SINGLE,
        "--tensor", str(simulated / "tensor.c8"),
        "--out", str(out), "--max-paths", "2",
        "--subspace", "aoa_az=-30:30",
    ])
    assert rc == 0
    # the true path sits at 160 degrees, outside the window
    assert _read_paths(out / "paths.csv") == []


def test_estimate_bad_subspace(simulated, tmp_path, capsys):
    rc = main([
        "estimate", "--scenario", SINGLE,
        "--tensor", str(simulated / "tensor.c8"),
        "--out", str(tmp_path), "--subspace", "nonsense",
    ])
    assert rc == 2
    capsys.readouterr()


def _capture_npz(path, tones, pairs, seed=0):
    rng = np.random.default_rng(seed)
    tx = rng.standard_normal((2, tones.F)) + 1j * rng.standard_normal((2, tones.F))
    rx = rng.standard_normal((2, tones.F)) + 1j * rng.standard_normal((2, tones.F))
    arrays = {}
    for p_t, p_r in pairs:
        y = np.zeros(tones.L, dtype=complex)
        y[tones.occupied] = tones.x[tones.occupied] * tx[p_t] * rx[p_r]
        arrays[f"{p_t}_{p_r}"] = y
    np.savez(path, **arrays)


def test_calibrate_completes_set(tmp_path):
    tones = waveform.build_tones(256, 101, 1)
    caps = tmp_path / "caps.npz"
    _capture_npz(caps, tones, calib.seed_pairs(2))
    out = tmp_path / "cal"
    rc = main(["calibrate", "--scenario", SINGLE, "--captures", str(caps), "--out", str(out)])
    assert rc == 0
    info = json.loads((out / "calibration.json").read_text())
    assert info["pairs"] == 2
    assert info["completion_residual"] < 1e-12
    back = calib.B2bSet.load(out / "b2b.c16")
    assert back.pairs() == {(0, 1), (1, 0)}


def test_calibrate_missing_seed_exits_2(tmp_path, capsys):
    tones = waveform.build_tones(256, 101, 1)
    caps = tmp_path / "caps.npz"
    _capture_npz(caps, tones, [(0, 1)])  # reverse direction missing
    rc = main(["calibrate", "--scenario", SINGLE, "--captures", str(caps), "--out", str(tmp_path / "cal")])
    assert rc == 2
    assert "error:" in capsys.readouterr().err
