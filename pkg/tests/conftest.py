from __future__ import annotations

import math

import numpy as np
import pytest

from topoflock.model import reference_configuration

# the reference scenario's threshold at rho = 0.25, root 2 (0-based 1)
REFERENCE_RHO = 0.25
REFERENCE_ROOT = 1


def random_positions(rng, n_max=8, m_max=3, d=2):
    n = int(rng.integers(3, n_max + 1))
    m = int(rng.integers(1, min(m_max, n - 2) + 1))
    return rng.uniform(-5, 5, size=(n, d)), m


# ---- independent oracles -------------------------------------------------


def knn_oracle(x, m):
    """Sort every other agent by (distance, index) and keep the first m."""
    n = len(x)
    adj = np.zeros((n, n), dtype=bool)
    for i in range(n):
        others = sorted((math.dist(x[i], x[j]), j) for j in range(n) if j != i)
        for _, j in others[:m]:
            adj[i, j] = True
    return adj


def reach_oracle(adj, root):
    """Set-based graph search, edge j -> i when adj[i][j]."""
    seen = {root}
    frontier = [root]
    while frontier:
        j = frontier.pop()
        for i in range(len(adj)):
            if adj[i][j] and i not in seen:
                seen.add(i)
                frontier.append(i)
    return seen


def has_tree_oracle(adj):
    return any(len(reach_oracle(adj, r)) == len(adj) for r in range(len(adj)))


def simple_paths(adj, source, target):
    """All simple paths source -> ... -> target following j -> i edges."""
    n = len(adj)
    out = []

    def walk(path):
        j = path[-1]
        if j == target:
            out.append(list(path))
            return
        for i in range(n):
            if adj[i][j] and i not in path:
                path.append(i)
                walk(path)
                path.pop()

    walk([source])
    return out


def widest_oracle(weights, root, target):
    """Max over all simple paths of the min edge weight (weights[i, j] for j -> i)."""
    adj = np.isfinite(weights)
    best = -math.inf
    for path in simple_paths(adj, root, target):
        best = max(best, min(weights[b, a] for a, b in zip(path, path[1:])))
    return best


def edge_robustness_oracle(x, m, j, i):
    """Half the gap between i's (m+1)-th closest other agent and j."""
    others = sorted((math.dist(x[i], x[k]), k) for k in range(len(x)) if k != i)
    return 0.5 * (others[m][0] - math.dist(x[i], x[j]))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def reference_threshold():
    from topoflock.certificate import certify

    cert = certify(reference_configuration(1.0), REFERENCE_RHO, REFERENCE_ROOT)
    return cert.threshold


@pytest.fixture(scope="session")
def reference_runs(reference_threshold):
    """Certificates and 50 s trajectories at 1x, 10x and 13x the threshold."""
    from topoflock.certificate import certify
    from topoflock.simulator import monitor_report, simulate

    runs = {}
    for factor in (1, 10, 13):
        config = reference_configuration(factor * reference_threshold)
        cert = certify(config, REFERENCE_RHO, REFERENCE_ROOT)
        traj = simulate(config, 1e-3, 50.0, cert)
        runs[factor] = (config, cert, traj, monitor_report(traj, cert))
    return runs


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
