"""Topological (m-nearest-neighbor) interaction graphs and their robust core."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

NOMINAL = "nominal"
CORE = "core"


@dataclass(frozen=True, eq=False)
class InteractionGraph:
    """Directed influence graph stored as a boolean in-adjacency matrix.

    ``adjacency[i, j]`` is True when agent ``j`` influences agent ``i``.
    ``kind`` is ``"nominal"`` for the m-nearest-neighbor graph itself and
    ``"core"`` for a perturbation-robust subgraph of it.
    """

    adjacency: np.ndarray
    m: int
    kind: str = NOMINAL

    def __post_init__(self):
        adj = np.array(self.adjacency, dtype=bool)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise DomainError(f"adjacency must be square, got shape {adj.shape}")
        if adj.diagonal().any():
            raise DomainError("self-loops are not allowed")
        if self.kind not in (NOMINAL, CORE):
            raise DomainError(f"unknown graph kind {self.kind!r}")
        rows = adj.sum(axis=1)
        if self.kind == NOMINAL and not np.all(rows == self.m):
            raise DomainError("nominal graph must have in-degree exactly m at every node")
        if self.kind == CORE and np.any(rows > self.m):
            raise DomainError("core graph in-degree cannot exceed m")
        adj.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    def edges(self) -> list[tuple[int, int]]:
        """Edges as ``(source j, target i)`` pairs in row-major order of ``(i, j)``."""
        return [(int(j), int(i)) for i, j in zip(*np.nonzero(self.adjacency))]

    def has_edge(self, source: int, target: int) -> bool:
        return bool(self.adjacency[target, source])

    def in_neighbors(self, i: int) -> list[int]:
        return [int(j) for j in np.flatnonzero(self.adjacency[i])]

    def reachable_from(self, root: int) -> np.ndarray:
        return reachable(self.adjacency, root)

    def spanning_roots(self) -> list[int]:
        """Roots from which every node can be reached along influence edges."""
        return [r for r in range(self.n) if reachable(self.adjacency, r).all()]

    def has_spanning_tree(self) -> bool:
        return any(reachable(self.adjacency, r).all() for r in range(self.n))

    def __eq__(self, other):
        if not isinstance(other, InteractionGraph):
            return NotImplemented
        return self.m == other.m and np.array_equal(self.adjacency, other.adjacency)

    __hash__ = None


def reachable(adjacency: np.ndarray, root: int) -> np.ndarray:
    """Boolean mask of nodes reachable from ``root`` following ``j -> i`` edges."""
    n = adjacency.shape[0]
    if not 0 <= root < n:
        raise DomainError(f"root {root} out of range 0..{n - 1}")
    out = np.asarray(adjacency).T  # out[j] lists the nodes j influences
    seen = np.zeros(n, dtype=bool)
    seen[root] = True
    queue = deque([root])
    while queue:
        j = queue.popleft()
        for i in np.flatnonzero(out[j] & ~seen):
            seen[i] = True
            queue.append(int(i))
    return seen


def distance_matrix(positions) -> np.ndarray:
    x = np.asarray(positions, dtype=float)
    diff = x[:, None, :] - x[None, :, :]
    return np.sqrt((diff * diff).sum(axis=-1))


def neighbor_ranking(positions) -> np.ndarray:
    """Row ``i`` lists the other agents sorted by (distance to ``i``, index)."""
    dist = distance_matrix(positions)
    np.fill_diagonal(dist, np.inf)
    return np.argsort(dist, axis=1, kind="stable")[:, :-1]


def _check_count(n: int, m: int, spare: int = 2):
    if m < 1 or n < m + spare:
        raise DomainError(f"need m >= 1 and n >= m + {spare} agents (n={n}, m={m})")


def knn_graph(positions, m: int) -> InteractionGraph:
    """Each agent is influenced by its ``m`` closest other agents.

    Equidistant candidates are ranked by ascending index, so the result is
    exactly m-regular in in-degree even for degenerate inputs.
    """
    x = np.asarray(positions, dtype=float)
    # m others suffice for the nominal graph; robustness needs one more
    _check_count(x.shape[0], m, spare=1)
    order = neighbor_ranking(x)
    adj = np.zeros((x.shape[0], x.shape[0]), dtype=bool)
    np.put_along_axis(adj, order[:, :m], True, axis=1)
    return InteractionGraph(adj, m, NOMINAL)


def perturbed_core_graph(positions, m: int, rho: float) -> InteractionGraph:
    """Subgraph kept under any pairwise relative-position disturbance up to ``rho``.

    Edge ``j -> i`` survives when fewer than ``m`` agents ``k`` (``k`` not in
    ``{i, j}``) satisfy ``||x_i - x_j|| > ||x_i - x_k|| - 2 rho``. The test is
    evaluated as ``d_ik - d_ij < 2 rho`` so that ``rho`` equal to an edge
    robustness (half such a difference) keeps the edge exactly.
    """
    if not rho >= 0:
        raise DomainError(f"rho must be non-negative, got {rho}")
    x = np.asarray(positions, dtype=float)
    n = x.shape[0]
    _check_count(n, m)
    if rho == 0:
        return InteractionGraph(knn_graph(x, m).adjacency, m, CORE)
    dist = distance_matrix(x)
    # gap[i, j, k] = d_ik - d_ij
    gap = dist[:, None, :] - dist[:, :, None]
    closer = gap < 2.0 * rho
    eye = np.eye(n, dtype=bool)
    closer &= ~eye[:, None, :]  # k != i
    closer &= ~eye[None, :, :]  # k != j
    adj = closer.sum(axis=2) < m
    np.fill_diagonal(adj, False)
    return InteractionGraph(adj, m, CORE)


def is_subgraph(sub: InteractionGraph, sup: InteractionGraph) -> bool:
    """True when every edge of ``sub`` is also an edge of ``sup``."""
    if sub.n != sup.n:
        raise DomainError(f"graphs have different sizes ({sub.n} vs {sup.n})")
    return not np.any(sub.adjacency & ~sup.adjacency)
