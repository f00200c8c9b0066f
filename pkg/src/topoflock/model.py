"""Agent configurations, the velocity-coupling vector field and the velocity diameter."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError


def _as_block(values, name: str, dimension: int | None = None) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 2:
        raise DomainError(f"{name} must be a sequence of vectors, got shape {arr.shape}")
    if dimension is not None and arr.shape[1] != dimension:
        raise DomainError(f"{name} vectors must have {dimension} components, got {arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite components")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Configuration:
    """Initial positions and velocities of ``n`` agents in ``R^d``.

    ``positions`` and ``velocities`` are read-only ``(n, d)`` arrays (row-major
    agent blocks). Agents are indexed from 0 in the Python API.
    """

    positions: np.ndarray
    velocities: np.ndarray
    m: int

    def __post_init__(self):
        pos = _as_block(self.positions, "positions")
        vel = _as_block(self.velocities, "velocities", pos.shape[1])
        if vel.shape[0] != pos.shape[0]:
            raise DomainError(
                f"{pos.shape[0]} positions but {vel.shape[0]} velocities"
            )
        if isinstance(self.m, bool) or int(self.m) != self.m or self.m < 1:
            raise DomainError(f"neighbor count m must be a positive integer, got {self.m!r}")
        if pos.shape[1] < 1:
            raise DomainError("dimension must be positive")
        if pos.shape[0] < self.m + 2:
            raise DomainError(
                f"need n >= m + 2 agents (n={pos.shape[0]}, m={self.m})"
            )
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "velocities", vel)
        object.__setattr__(self, "m", int(self.m))

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def dimension(self) -> int:
        return self.positions.shape[1]

    def with_velocities(self, velocities) -> Configuration:
        return Configuration(self.positions, velocities, self.m)

    def __eq__(self, other):
        if not isinstance(other, Configuration):
            return NotImplemented
        return (
            self.m == other.m
            and np.array_equal(self.positions, other.positions)
            and np.array_equal(self.velocities, other.velocities)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class State:
    """Positions and velocities at time ``t``."""

    t: float
    positions: np.ndarray
    velocities: np.ndarray

    def __post_init__(self):
        pos = _as_block(self.positions, "positions")
        vel = _as_block(self.velocities, "velocities", pos.shape[1])
        if vel.shape != pos.shape:
            raise DomainError(f"shape mismatch {pos.shape} vs {vel.shape}")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "velocities", vel)
        object.__setattr__(self, "t", float(self.t))

    @classmethod
    def initial(cls, config: Configuration) -> State:
        return cls(0.0, config.positions, config.velocities)


def velocity_diameter(velocities, subset: Iterable[int] | None = None) -> float:
    """Largest pairwise distance ``max ||v_i - v_j||`` over agents in ``subset``.

    ``subset=None`` means all agents. Exhaustive O(n^2) scan.
    """
    vel = np.asarray(velocities, dtype=float)
    if vel.ndim != 2:
        raise DomainError(f"velocities must be an (n, d) array, got shape {vel.shape}")
    if subset is None:
        idx = np.arange(vel.shape[0])
    else:
        idx = np.fromiter(sorted(set(subset)), dtype=int)
    if idx.size == 0:
        raise DomainError("velocity diameter of an empty set is undefined")
    if idx.min() < 0 or idx.max() >= vel.shape[0]:
        raise DomainError(f"agent index out of range 0..{vel.shape[0] - 1}")
    sel = vel[idx]
    diff = sel[:, None, :] - sel[None, :, :]
    return float(np.sqrt((diff * diff).sum(axis=-1)).max())


def dynamics_rhs(state: State, graph) -> tuple[np.ndarray, np.ndarray]:
    """Right-hand side ``(dx, dv)`` of the second-order topological model.

    ``dx_i = v_i`` and ``dv_i = sum_j a_ij (v_j - v_i)`` with ``a`` the graph's
    in-adjacency (row ``i`` lists who influences ``i``).
    """
    adj = np.asarray(graph.adjacency, dtype=float)
    n = state.positions.shape[0]
    if adj.shape != (n, n):
        raise DomainError(f"graph has {adj.shape[0]} nodes, state has {n} agents")
    v = state.velocities
    dv = adj @ v - adj.sum(axis=1)[:, None] * v
    return v.copy(), dv


def scenario_velocities(
    directions: Sequence[Sequence[float]], scale: float, drift: Sequence[float]
) -> np.ndarray:
    """Velocities ``scale * w_i + drift`` used to tune the initial diameter."""
    w = np.asarray(directions, dtype=float)
    return scale * w + np.asarray(drift, dtype=float)[None, :]


# Four collinear agents used throughout the numerical illustration.
REFERENCE_POSITIONS = ((0.0, 2.7), (0.0, 2.5), (0.0, 1.5), (0.0, 0.0))
REFERENCE_DIRECTIONS = ((0.0, 1.0), (0.0, 1.0), (0.0, -1.0), (0.0, 1.0))


def reference_configuration(diameter: float, drift: float = 1.0) -> Configuration:
    """The four-agent, ``m = 1`` scenario with initial velocity diameter ``diameter``.

    The direction vectors have diameter 2, so the scale is ``diameter / 2``.
    """
    vel = scenario_velocities(REFERENCE_DIRECTIONS, diameter / 2.0, (drift, 0.0))
    return Configuration(REFERENCE_POSITIONS, vel, 1)


def config_digest(config: Configuration) -> str:
    """SHA-256 over the exact bit patterns of ``m``, positions and velocities."""
    h = hashlib.sha256()
    h.update(np.int64(config.m).tobytes())
    h.update(np.int64(config.dimension).tobytes())
    h.update(np.ascontiguousarray(config.positions, dtype="<f8").tobytes())
    h.update(np.ascontiguousarray(config.velocities, dtype="<f8").tobytes())
    return h.hexdigest()


def is_reference_scenario(config: Configuration) -> bool:
    """Positions and ``m`` match the four-agent scenario (velocities may differ)."""
    return config.m == 1 and np.array_equal(config.positions, np.array(REFERENCE_POSITIONS))
