"""Layered structure induced by a rooted spanning tree, and its preservation check."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError
from .topology import InteractionGraph


class NoSpanningTree(DomainError):
    """Some agent is not reachable from the requested root."""


@dataclass(frozen=True, eq=False)
class Hierarchy:
    """Breadth-first influence layers from ``root`` in ``graph``.

    ``layers[k]`` holds the agents at influence distance ``k`` from the root;
    ``alphas[k - 1]`` is the minimum number of edges any agent of
    ``U_{k+1}`` receives from ``U_k`` (``k = 1..depth-1``).
    """

    root: int
    layers: tuple[tuple[int, ...], ...]
    alphas: tuple[int, ...]
    graph: InteractionGraph

    @property
    def depth(self) -> int:
        return len(self.layers) - 1

    def nested(self, k: int) -> frozenset[int]:
        """``U_k``: union of layers ``0..k``."""
        return frozenset(i for layer in self.layers[: k + 1] for i in layer)

    @property
    def nested_sets(self) -> list[frozenset[int]]:
        return [self.nested(k) for k in range(self.depth + 1)]

    @property
    def contracting(self) -> bool:
        """Every flow bound is at least one, so each layer pulls on the next."""
        return all(a >= 1 for a in self.alphas)


def build_hierarchy(graph: InteractionGraph, root: int) -> Hierarchy:
    n = graph.n
    if not 0 <= root < n:
        raise DomainError(f"root {root} out of range 0..{n - 1}")
    adj = graph.adjacency
    layers = [(root,)]
    seen = np.zeros(n, dtype=bool)
    seen[root] = True
    while not seen.all():
        frontier = list(layers[-1])
        # out-neighbors of the current layer not yet placed
        nxt = np.flatnonzero(adj[:, frontier].any(axis=1) & ~seen)
        if nxt.size == 0:
            missing = [int(i) for i in np.flatnonzero(~seen)]
            raise NoSpanningTree(f"agents {missing} are not reachable from root {root}")
        seen[nxt] = True
        layers.append(tuple(int(i) for i in nxt))

    alphas = []
    for k in range(1, len(layers) - 1):
        inner = _members(layers[: k + 1])
        outer = _members(layers[: k + 2])
        alphas.append(int(adj[np.ix_(outer, inner)].sum(axis=1).min()))
    return Hierarchy(root, tuple(layers), tuple(alphas), graph)


def _members(layers) -> list[int]:
    return sorted(i for layer in layers for i in layer)


class HypothesisCheck(NamedTuple):
    holds: bool
    layer: int | None = None
    agent: int | None = None

    def __bool__(self):
        return self.holds


def check_hypothesis1(graph: InteractionGraph, hierarchy: Hierarchy) -> HypothesisCheck:
    """Does ``graph`` still carry the hierarchy's flow bounds?

    Layer 0: every agent of ``U_1`` other than the root is influenced by the
    root. Layer ``k >= 1``: every agent of ``U_{k+1}`` receives at least
    ``alpha_k`` edges from ``U_k`` and at most ``m - alpha_k`` from outside it.
    The first violation in (layer, agent) order is reported.
    """
    n = graph.n
    if hierarchy.graph.n != n:
        raise DomainError(f"hierarchy covers {hierarchy.graph.n} agents, graph has {n}")
    adj = graph.adjacency
    r = hierarchy.root
    for i in sorted(hierarchy.nested(1) - {r}):
        if not adj[i, r]:
            return HypothesisCheck(False, 0, i)
    m = hierarchy.graph.m
    for k in range(1, hierarchy.depth):
        alpha = hierarchy.alphas[k - 1]
        inside = np.zeros(n, dtype=bool)
        inside[list(hierarchy.nested(k))] = True
        for i in sorted(hierarchy.nested(k + 1)):
            if adj[i, inside].sum() < alpha or adj[i, ~inside].sum() > m - alpha:
                return HypothesisCheck(False, k, i)
    return HypothesisCheck(True)


def hypothesis1_mask(adjacency: np.ndarray, hierarchy: Hierarchy) -> np.ndarray:
    """Vectorized clause check over a stack of ``(samples, n, n)`` adjacencies."""
    adj = np.asarray(adjacency, dtype=bool)
    n = adj.shape[-1]
    r = hierarchy.root
    ok = np.ones(adj.shape[0], dtype=bool)
    first = sorted(hierarchy.nested(1) - {r})
    if first:
        ok &= adj[:, first, r].all(axis=1)
    m = hierarchy.graph.m
    for k in range(1, hierarchy.depth):
        alpha = hierarchy.alphas[k - 1]
        inside = np.zeros(n, dtype=bool)
        inside[list(hierarchy.nested(k))] = True
        rows = sorted(hierarchy.nested(k + 1))
        sub = adj[:, rows, :]
        ok &= (sub[:, :, inside].sum(axis=2) >= alpha).all(axis=1)
        ok &= (sub[:, :, ~inside].sum(axis=2) <= m - alpha).all(axis=1)
    return ok
