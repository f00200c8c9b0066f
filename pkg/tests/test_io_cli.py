import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from topoflock import io
from topoflock.certificate import certify
from topoflock.cli import main
from topoflock.contraction import optimize_bound
from topoflock.model import Configuration, reference_configuration
from topoflock.simulator import monitor_report, simulate

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_subnormal=False)


@st.composite
def configurations(draw):
    m = draw(st.integers(1, 3))
    n = draw(st.integers(m + 2, m + 5))
    d = draw(st.integers(1, 3))
    x = draw(arrays(float, (n, d), elements=finite))
    v = draw(arrays(float, (n, d), elements=finite))
    return Configuration(x, v, m)


@settings(max_examples=100)
@given(configurations())
def test_config_round_trip(config):
    assert io.parse_config(io.serialize_config(config)) == config


def test_reference_document():
    c = io.read_config(CONFIGS / "four_agents.json")
    assert c.n == 4 and c.m == 1
    assert np.allclose(c.velocities[:, 0], 1.0)


def _doc(**changes):
    doc = {"schema": 1, "dimension": 2, "m": 1, "agents": [{"x": [i, 0], "v": [0, 0]} for i in range(3)]}
    doc.update(changes)
    return json.dumps(doc)


@pytest.mark.parametrize(
    "text, field",
    [
        (json.dumps({"dimension": 2, "agents": []}), "m"),
        (_doc(dimension="two"), "dimension"),
        (_doc(agents=[{"x": [0, 0], "v": [0, 0]}] * 2), "agents"),
        (_doc(agents=[{"x": [0, 0]}] * 3), "agents[0].v"),
        (_doc(agents=[{"x": [0, 0, 0], "v": [0, 0]}] * 3), "agents[0].x"),
        (_doc(schema=7), "schema"),
    ],
)
def test_config_errors_name_field(text, field):
    with pytest.raises(io.ConfigError) as err:
        io.parse_config(text)
    assert err.value.field == field


def test_malformed_json_reports_line():
    with pytest.raises(io.ConfigError) as err:
        io.parse_config('{\n "m": 1,\n oops\n}')
    assert err.value.line == 3


def test_certificate_round_trip(reference_threshold):
    cert = certify(reference_configuration(reference_threshold), 0.25, 1)
    text = io.serialize_certificate(cert)
    back = io.parse_certificate(text)
    assert back.threshold == cert.threshold
    assert back.verdict == cert.verdict
    assert back.hierarchy.layers == cert.hierarchy.layers
    assert back.hierarchy.graph == cert.hierarchy.graph
    assert back.schedule.dwell_times == cert.schedule.dwell_times
    assert io.serialize_certificate(back) == text


def test_trajectory_and_diagnostics_files(tmp_path):
    c = reference_configuration(0.02)
    cert = certify(c, 0.05, 1)
    traj = simulate(c, 1e-2, 0.5, cert)
    io.write_trajectory(traj, tmp_path / "t.csv")
    times, pos, vel = io.read_trajectory(tmp_path / "t.csv")
    assert np.array_equal(times, traj.times)
    assert np.array_equal(pos, traj.positions)
    assert np.array_equal(vel, traj.velocities)
    io.write_diagnostics(traj, tmp_path / "d.csv")
    diag = io.read_diagnostics(tmp_path / "d.csv")
    assert [float(v) for v in diag["delta_N"]] == list(traj.delta)
    assert set(diag["tree_preserved"]) == {"1"}
    report = json.loads(io.serialize_monitor(monitor_report(traj, cert)))
    assert report["tree_preserved"] is True
    assert report["tree_preserved_until"] is None


def test_sweep_round_trip(tmp_path):
    x = np.random.default_rng(5).uniform(-3, 3, size=(7, 2))
    rows = optimize_bound(x, 2).candidates
    io.write_sweep(rows, tmp_path / "s.csv")
    assert io.read_sweep(tmp_path / "s.csv") == rows


def test_cli_certify_override(tmp_path, capsys):
    out = tmp_path / "cert.json"
    code = main(["certify", str(CONFIGS / "four_agents.json"), "--rho", "0.25", "--root", "2", "-o", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["threshold"] == pytest.approx(0.0351, abs=5e-4)
    assert doc["root"] == 2
    assert doc["verdict"] == "certified"


def test_cli_certify_default(tmp_path):
    out = tmp_path / "cert.json"
    assert main(["certify", str(CONFIGS / "four_agents.json"), "-o", str(out)]) == 1
    doc = json.loads(out.read_text())
    assert doc["threshold"] == pytest.approx(0.01403, abs=1e-5)
    assert any("documented robustness" in w for w in doc["warnings"])


def test_cli_simulate_sweep_robustness(tmp_path):
    cfg = str(CONFIGS / "four_agents.json")
    cert = tmp_path / "cert.json"
    main(["certify", cfg, "--rho", "0.25", "--root", "2", "-o", str(cert)])
    prefix = tmp_path / "run"
    assert main(["simulate", cfg, "--t-end", "1", "--certificate", str(cert), "-o", str(prefix)]) == 0
    for suffix in ("trajectory.csv", "diagnostics.csv", "monitor.json"):
        assert (tmp_path / f"run.{suffix}").exists()
    assert main(["sweep", cfg, "-o", str(tmp_path / "sweep.csv")]) == 0
    assert len(io.read_sweep(tmp_path / "sweep.csv")) == 2
    assert main(["robustness", cfg, "-o", str(tmp_path / "rob.json")]) == 0
    rob = json.loads((tmp_path / "rob.json").read_text())
    assert rob["graph_robustness"] == pytest.approx(0.1)


def test_cli_input_errors(tmp_path):
    empty = tmp_path / "empty.json"
    empty.write_text(json.dumps({"dimension": 2, "m": 1, "agents": []}))
    assert main(["simulate", str(empty), "-o", str(tmp_path / "x")]) == 2
    assert main(["certify", str(tmp_path / "missing.json"), "-o", str(tmp_path / "c")]) == 2
    with pytest.raises(SystemExit) as err:
        main(["certify", "--bogus"])
    assert err.value.code == 2


def test_cli_output_deterministic(tmp_path):
    cfg = str(CONFIGS / "four_agents_13x.json")
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["certify", cfg, "-o", str(a)])
    main(["certify", cfg, "-o", str(b)])
    assert a.read_text() == b.read_text()
