"""How much relative-position disturbance the initial interaction graph tolerates.

Edge robustness is half the slack between an agent's distance to its
``(m+1)``-th closest agent and its distance to the influencing neighbor. Path
robustness is the weakest edge on the path, the robustness from a root to a
node is the best (widest) path, and a root's robustness is its worst target.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .topology import (
    InteractionGraph,
    distance_matrix,
    knn_graph,
    neighbor_ranking,
    perturbed_core_graph,
)

UNREACHABLE = -math.inf


def edge_robustness_matrix(positions, m: int) -> np.ndarray:
    """``s[i, j]`` for every nominal edge ``j -> i``; ``-inf`` where there is no edge."""
    x = np.asarray(positions, dtype=float)
    graph = knn_graph(x, m)
    dist = distance_matrix(x)
    rank = neighbor_ranking(x)
    n = x.shape[0]
    far = dist[np.arange(n), rank[:, m]]  # distance to p(i), the (m+1)-th closest
    s = 0.5 * (far[:, None] - dist)
    return np.where(graph.adjacency, s, -np.inf)


def edge_robustness(positions, m: int, source: int, target: int) -> float:
    """Robustness ``s(source, target)`` of the nominal edge ``source -> target``."""
    s = edge_robustness_matrix(positions, m)
    n = s.shape[0]
    if not (0 <= source < n and 0 <= target < n):
        raise DomainError(f"agent index out of range 0..{n - 1}")
    if not np.isfinite(s[target, source]):
        raise DomainError(f"{source} -> {target} is not an edge of the interaction graph")
    return float(s[target, source])


def widest_paths(weights: np.ndarray, root: int) -> tuple[np.ndarray, dict[int, int]]:
    """Max-min path values from ``root`` over ``weights[i, j]`` (edge ``j -> i``).

    Best-first search keyed on the current bottleneck. Returns per-node values
    (``inf`` at the root, ``-inf`` when unreachable) and the parent map of a
    witness tree realizing them.
    """
    n = weights.shape[0]
    best = np.full(n, -np.inf)
    best[root] = np.inf
    parent: dict[int, int] = {}
    done = np.zeros(n, dtype=bool)
    heap = [(-np.inf, root)]
    while heap:
        neg, j = heapq.heappop(heap)
        if done[j]:
            continue
        done[j] = True
        width = -neg
        for i in np.flatnonzero(np.isfinite(weights[:, j])):
            if done[i]:
                continue
            w = min(width, weights[i, j])
            if w > best[i]:
                best[i] = w
                parent[int(i)] = int(j)
                heapq.heappush(heap, (-w, int(i)))
    return best, parent


def root_robustness(positions, m: int, root: int) -> tuple[float, dict[int, int]]:
    """Robustness of ``root`` and the bottleneck tree (``child -> parent``).

    The value is ``-inf`` when some agent cannot be reached from ``root``.
    """
    per_target, tree = root_robustness_detail(positions, m, root)
    others = np.delete(per_target, root)
    return float(others.min()), tree


def root_robustness_detail(positions, m: int, root: int) -> tuple[np.ndarray, dict[int, int]]:
    s = edge_robustness_matrix(positions, m)
    n = s.shape[0]
    if not 0 <= root < n:
        raise DomainError(f"root {root} out of range 0..{n - 1}")
    return widest_paths(s, root)


@dataclass
class RobustnessReport:
    """Robustness of the initial graph, the best root and the core subgraph.

    ``graph_robustness`` is ``-inf`` and ``core_subgraph`` is None when no
    agent reaches every other one in the initial graph.
    """

    edge_robustness: dict[tuple[int, int], float]
    root_robustness: dict[int, float]
    graph_robustness: float
    best_root: int | None
    co_optimal_roots: list[int]
    core_subgraph: InteractionGraph | None
    bottleneck_trees: dict[int, dict[int, int]] = field(default_factory=dict)

    @property
    def has_spanning_tree(self) -> bool:
        return self.best_root is not None


def graph_robustness(positions, m: int) -> RobustnessReport:
    x = np.asarray(positions, dtype=float)
    s = edge_robustness_matrix(x, m)
    n = x.shape[0]
    edges = {
        (int(j), int(i)): float(s[i, j]) for i, j in zip(*np.nonzero(np.isfinite(s)))
    }
    per_root: dict[int, float] = {}
    trees: dict[int, dict[int, int]] = {}
    for r in range(n):
        values, tree = widest_paths(s, r)
        per_root[r] = float(np.delete(values, r).min())
        trees[r] = tree
    best = max(per_root.values())
    if best == UNREACHABLE:
        return RobustnessReport(edges, per_root, UNREACHABLE, None, [], None, trees)
    optimal = [r for r in range(n) if per_root[r] == best]
    return RobustnessReport(
        edge_robustness=edges,
        root_robustness=per_root,
        graph_robustness=best,
        best_root=optimal[0],
        co_optimal_roots=optimal,
        core_subgraph=perturbed_core_graph(x, m, best),
        bottleneck_trees=trees,
    )
