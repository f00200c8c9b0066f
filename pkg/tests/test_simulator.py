import math

import numpy as np
import pytest

from conftest import random_positions
from topoflock.certificate import certify
from topoflock.errors import DomainError
from topoflock.hierarchy import build_hierarchy, check_hypothesis1
from topoflock.model import Configuration, State, reference_configuration, velocity_diameter
from topoflock.simulator import (
    diameter_inequality_probe,
    integration_tolerance,
    layer_contraction_probe,
    monitor_report,
    simulate,
)
from topoflock.topology import knn_graph, perturbed_core_graph


def test_constant_velocity_run():
    x = np.random.default_rng(3).uniform(-3, 3, size=(5, 2))
    c = Configuration(x, np.tile([0.4, -0.2], (5, 1)), 2)
    cert = certify(c)
    traj = simulate(c, 1e-2, 2.0, cert)
    assert np.all(traj.delta == 0)
    assert np.allclose(traj.positions[-1], x + 2.0 * np.array([0.4, -0.2]))
    report = monitor_report(traj, cert)
    assert report.envelope_violations == []
    assert report.alignment_reached


def test_time_grid_and_alignment():
    c = reference_configuration(0.02)
    traj = simulate(c, 1e-2, 1.0)
    assert len(traj) == 101
    assert np.all(np.diff(traj.times) > 0)
    assert len(traj.delta) == len(traj.displacement) == len(traj)


def test_bad_arguments():
    c = reference_configuration(0.02)
    with pytest.raises(DomainError):
        simulate(c, 0.0, 1.0)
    with pytest.raises(DomainError):
        simulate(c, 0.1, 0.01)
    other = certify(reference_configuration(0.03))
    with pytest.raises(DomainError):
        simulate(c, 1e-2, 1.0, other)


def test_mismatched_monitor():
    traj = simulate(reference_configuration(0.02), 1e-2, 1.0)
    with pytest.raises(DomainError):
        monitor_report(traj, certify(reference_configuration(0.03)))


def test_non_finite_aborts():
    c = reference_configuration(1e308)
    traj = simulate(c, 1.0, 20.0)
    assert traj.aborted
    assert np.isfinite(traj.velocities).all()


def test_deterministic():
    c = reference_configuration(0.3)
    a, b = simulate(c, 1e-2, 3.0), simulate(c, 1e-2, 3.0)
    assert np.array_equal(a.positions, b.positions)
    assert np.array_equal(a.velocities, b.velocities)


def test_rk4_order():
    # well separated agents: the interaction graph never switches
    x = np.array([[0.0, 0.0], [1.0, 0.0], [10.0, 0.0], [30.0, 0.0]])
    v = np.array([[0.0, 0.0], [0.1, 0.0], [0.0, 0.1], [0.05, -0.05]])
    c = Configuration(x, v, 1)
    runs = [simulate(c, dt, 2.0) for dt in (0.1, 0.05, 0.025)]
    assert all(r.edge_changes.sum() == 0 for r in runs)
    e1 = np.abs(runs[0].velocities[-1] - runs[1].velocities[-1]).max()
    e2 = np.abs(runs[1].velocities[-1] - runs[2].velocities[-1]).max()
    assert e1 / e2 == pytest.approx(16, rel=0.1)


def test_certified_reference_run(reference_runs):
    _, cert, traj, report = reference_runs[1]
    assert cert.certified
    assert report.tree_preserved
    assert report.envelope_checks > 20
    assert report.envelope_violations == []
    assert report.displacement_below_rho
    assert report.alignment_reached
    assert report.disconnection_time is None
    assert report.monotonicity_violations == 0


def test_divergent_reference_run(reference_runs):
    _, cert, traj, report = reference_runs[13]
    assert not cert.certified
    assert report.disconnection_time is not None
    k = int(round(report.disconnection_time / traj.dt))
    assert traj.graph(k).in_neighbors(2) == [3]
    assert not report.alignment_reached


def test_sufficiency_only_run(reference_runs):
    _, cert, _, report = reference_runs[10]
    assert not cert.certified
    assert report.alignment_reached


def test_diameter_monotone(reference_runs):
    for _, _, traj, report in reference_runs.values():
        assert np.all(np.diff(traj.delta) <= report.tolerance)


def _random_probe_cases(rng, count):
    while count:
        x, m = random_positions(rng)
        g = knn_graph(x, m)
        rho = rng.uniform(0, 0.5)
        core = perturbed_core_graph(x, m, rho)
        roots = core.spanning_roots()
        if not roots:
            continue
        h = build_hierarchy(core, int(rng.choice(roots)))
        v = rng.normal(size=x.shape)
        yield State(0.0, x, v), g, h
        count -= 1


def test_consensus_probe_is_zero():
    x = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0], [3.0, 1.0]])
    g = knn_graph(x, 1)
    h = build_hierarchy(g, g.spanning_roots()[0])
    probe = diameter_inequality_probe(State(0, x, np.ones((4, 2))), g, h)
    assert probe.ok
    assert all(lhs == 0 and rhs == 0 for _, lhs, rhs in probe.layers)


def test_diameter_inequality_probe(rng):
    for state, g, h in _random_probe_cases(rng, 200):
        assert check_hypothesis1(g, h)
        probe = diameter_inequality_probe(state, g, h)
        assert probe.ok, probe.layers


def test_probe_skips_without_hypothesis():
    x = np.array([[0.0, 2.7], [0.0, 2.5], [0.0, 1.5], [0.0, 0.0]])
    h = build_hierarchy(knn_graph(x, 1), 1)
    moved = x.copy()
    moved[2, 1] = 0.5  # agent 3 now follows agent 4
    probe = diameter_inequality_probe(State(0, moved, np.eye(4, 2)), knn_graph(moved, 1), h)
    assert probe.skipped
    assert not probe.ok


def test_layer_contraction_probe(rng):
    checked = 0
    for state, g, h in _random_probe_cases(rng, 200):
        if not h.contracting:
            continue
        eps = integration_tolerance(1e-3, velocity_diameter(state.velocities))
        for k in range(h.depth):
            tau = float(rng.uniform(0.05, 1.5))
            observed, bound = layer_contraction_probe(state, g, h, k, tau)
            assert observed <= bound + eps
            checked += 1
    assert checked > 100


def test_envelope_tolerance_is_linear_in_dt():
    assert integration_tolerance(1e-3, 2.0) == pytest.approx(2e-2)
    assert math.isclose(integration_tolerance(2e-3, 2.0), 2 * integration_tolerance(1e-3, 2.0))
