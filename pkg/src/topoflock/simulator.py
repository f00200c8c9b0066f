"""Fixed-step integration of the switched flocking system and certificate monitors.

The interaction graph is recomputed from positions at the start of every step
and frozen through the four RK4 stages, so neighbor switches are localized to
within one step.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .certificate import Certificate
from .contraction import layer_gain
from .errors import DomainError
from .hierarchy import Hierarchy, check_hypothesis1, hypothesis1_mask
from .model import Configuration, State, config_digest, velocity_diameter
from .topology import InteractionGraph, reachable

log = logging.getLogger(__name__)

DEFAULT_DT = 1e-3
DEFAULT_T_END = 50.0
ALIGNMENT_FACTOR = 1e-3


def integration_tolerance(dt: float, initial_diameter: float) -> float:
    """Slack for monitor inequalities: first-order in the step size."""
    return 10.0 * dt * initial_diameter


def _neighbors(x: np.ndarray, m: int) -> np.ndarray:
    diff = x[:, None, :] - x[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=-1))
    np.fill_diagonal(dist, np.inf)
    return np.argsort(dist, axis=1, kind="stable")[:, :m]


def _rk4(x: np.ndarray, v: np.ndarray, acc, dt: float):
    k1x, k1v = v, acc(v)
    v2 = v + 0.5 * dt * k1v
    k2x, k2v = v2, acc(v2)
    v3 = v + 0.5 * dt * k2v
    k3x, k3v = v3, acc(v3)
    v4 = v + dt * k3v
    k4x, k4v = v4, acc(v4)
    x_new = x + dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
    v_new = v + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
    return x_new, v_new


def _diameters(vel: np.ndarray) -> np.ndarray:
    """Velocity diameter of every sample in a ``(samples, n, d)`` stack."""
    with np.errstate(over="ignore"):  # huge but finite states report an infinite diameter
        diff = vel[:, :, None, :] - vel[:, None, :, :]
        return np.sqrt((diff * diff).sum(axis=-1)).max(axis=(1, 2))


@dataclass(eq=False)
class Trajectory:
    """Sampled states and per-sample diagnostics of one simulation run.

    ``adjacency[k]`` is the interaction graph computed from ``positions[k]``.
    ``containment`` and ``hypothesis1`` are filled only when a certificate
    was supplied.
    """

    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    adjacency: np.ndarray
    m: int
    dt: float
    digest: str
    delta: np.ndarray
    edge_changes: np.ndarray
    spanning: np.ndarray
    displacement: np.ndarray
    containment: np.ndarray | None = None
    hypothesis1: np.ndarray | None = None
    aborted: bool = False

    def __len__(self):
        return len(self.times)

    def state(self, k: int) -> State:
        return State(self.times[k], self.positions[k], self.velocities[k])

    def graph(self, k: int) -> InteractionGraph:
        return InteractionGraph(self.adjacency[k], self.m)

    @property
    def terminal_mean_velocity(self) -> np.ndarray:
        """Empirical mean velocity at the last sample (not a conserved quantity)."""
        return self.velocities[-1].mean(axis=0)

    def attach_monitors(self, certificate: Certificate):
        if certificate.hierarchy is None:
            return
        preserved = certificate.hierarchy.graph.adjacency
        self.containment = ~np.any(preserved[None] & ~self.adjacency, axis=(1, 2))
        self.hypothesis1 = hypothesis1_mask(self.adjacency, certificate.hierarchy)


def simulate(
    config: Configuration,
    dt: float = DEFAULT_DT,
    t_end: float = DEFAULT_T_END,
    certificate: Certificate | None = None,
) -> Trajectory:
    """Integrate the switched system from ``config`` up to ``t_end``."""
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    if not t_end >= dt:
        raise DomainError(f"t_end must be at least dt (t_end={t_end}, dt={dt})")
    if certificate is not None and certificate.digest != config_digest(config):
        raise DomainError("certificate was issued for a different configuration")
    steps = int(round(t_end / dt))
    n, d, m = config.n, config.dimension, config.m
    pos = np.empty((steps + 1, n, d))
    vel = np.empty((steps + 1, n, d))
    nbs = np.empty((steps + 1, n, m), dtype=np.intp)
    x = np.array(config.positions)
    v = np.array(config.velocities)
    pos[0], vel[0] = x, v
    last = steps
    aborted = False
    for k in range(steps):
        nb = _neighbors(x, m)
        nbs[k] = nb
        with np.errstate(over="ignore", invalid="ignore"):
            x, v = _rk4(x, v, lambda u: u[nb].sum(axis=1) - m * u, dt)
        if not (np.isfinite(x).all() and np.isfinite(v).all()):
            log.warning("non-finite state at step %d; trajectory truncated", k + 1)
            last, aborted = k, True
            break
        pos[k + 1], vel[k + 1] = x, v
    else:
        nbs[steps] = _neighbors(x, m)

    count = last + 1
    pos, vel, nbs = pos[:count], vel[:count], nbs[:count]
    adjacency = np.zeros((count, n, n), dtype=bool)
    np.put_along_axis(adjacency, nbs, True, axis=2)

    changes = np.zeros(count, dtype=np.int64)
    changes[1:] = (adjacency[1:] ^ adjacency[:-1]).sum(axis=(1, 2))
    spanning = np.empty(count, dtype=bool)
    cached = None
    for k in range(count):
        if k == 0 or changes[k]:
            cached = any(reachable(adjacency[k], r).all() for r in range(n))
        spanning[k] = cached

    rel = pos - pos[0][None]
    traj = Trajectory(
        times=np.arange(count) * dt,
        positions=pos,
        velocities=vel,
        adjacency=adjacency,
        m=m,
        dt=dt,
        digest=config_digest(config),
        delta=_diameters(vel),
        edge_changes=changes,
        spanning=spanning,
        displacement=_diameters(rel),
        aborted=aborted,
    )
    if certificate is not None:
        traj.attach_monitors(certificate)
    return traj


@dataclass
class MonitorReport:
    """Checks of a trajectory against the guarantees stated by a certificate.

    ``tree_preserved_until`` is ``inf`` when the certificate's core graph stays
    inside the interaction graph at every sample; otherwise it is the last
    sample time before the first loss.
    """

    tree_preserved_until: float
    disconnection_time: float | None
    envelope_checks: int
    envelope_violations: list[tuple[int, float, float]]
    displacement_max: float
    displacement_below_rho: bool
    alignment_reached: bool
    terminal_diameter: float
    monotonicity_violations: int
    tolerance: float
    hypothesis1_until: float
    notes: list[str] = field(default_factory=list)

    @property
    def tree_preserved(self) -> bool:
        return math.isinf(self.tree_preserved_until)


def _first_false(mask: np.ndarray) -> int | None:
    bad = np.flatnonzero(~mask)
    return int(bad[0]) if bad.size else None


def monitor_report(trajectory: Trajectory, certificate: Certificate) -> MonitorReport:
    if trajectory.digest != certificate.digest:
        raise DomainError("trajectory and certificate come from different configurations")
    traj = trajectory
    delta0 = float(traj.delta[0])
    eps = integration_tolerance(traj.dt, delta0)
    notes = []

    disc = _first_false(traj.spanning)
    disconnection_time = None if disc is None else float(traj.times[disc])
    steps_up = int(np.sum(np.diff(traj.delta) > eps))
    terminal = float(traj.delta[-1])
    aligned = terminal < ALIGNMENT_FACTOR * delta0 if delta0 > 0 else True
    disp_max = float(traj.displacement.max())

    if certificate.hierarchy is None or certificate.schedule is None:
        notes.append("certificate has no hierarchy; graph and envelope monitors skipped")
        return MonitorReport(
            tree_preserved_until=math.nan, disconnection_time=disconnection_time,
            envelope_checks=0, envelope_violations=[], displacement_max=disp_max,
            displacement_below_rho=False, alignment_reached=aligned, terminal_diameter=terminal,
            monotonicity_violations=steps_up, tolerance=eps, hypothesis1_until=math.nan, notes=notes,
        )
    if traj.containment is None or traj.hypothesis1 is None:
        traj.attach_monitors(certificate)

    lost = _first_false(traj.containment)
    preserved_until = math.inf if lost is None else float(traj.times[max(lost - 1, 0)])
    broken = _first_false(traj.hypothesis1)
    hyp_until = math.inf if broken is None else float(traj.times[max(broken - 1, 0)])

    sched = certificate.schedule
    violations = []
    checks = 0
    q = 0
    while True:
        # Sample at or just before q * period; the diameter is non-increasing,
        # so this is the conservative side.
        idx = int(math.floor(q * sched.period / traj.dt + 1e-9))
        if idx >= len(traj):
            break
        if broken is not None and broken <= idx:
            break
        bound = sched.envelope(q, delta0)
        checks += 1
        if traj.delta[idx] > bound + eps:
            violations.append((q, float(traj.delta[idx]), bound))
        q += 1

    rho = certificate.rho if certificate.rho is not None else 0.0
    if not certificate.premise_holds:
        notes.append("certificate premise does not hold; monitors report observed behavior only")
    return MonitorReport(
        tree_preserved_until=preserved_until,
        disconnection_time=disconnection_time,
        envelope_checks=checks,
        envelope_violations=violations,
        displacement_max=disp_max,
        displacement_below_rho=disp_max < rho,
        alignment_reached=aligned,
        terminal_diameter=terminal,
        monotonicity_violations=steps_up,
        tolerance=eps,
        hypothesis1_until=hyp_until,
        notes=notes,
    )


@dataclass
class ProbeResult:
    skipped: str | None
    layers: list[tuple[int, float, float]] = field(default_factory=list)
    tolerance: float = 0.0

    @property
    def ok(self) -> bool:
        return self.skipped is None and all(lhs <= rhs + self.tolerance for _, lhs, rhs in self.layers)


def _frozen_run(v: np.ndarray, adjacency: np.ndarray, dt: float, steps: int) -> np.ndarray:
    a = np.asarray(adjacency, dtype=float)
    degree = a.sum(axis=1)[:, None]
    x = np.zeros_like(v)
    for _ in range(steps):
        x, v = _rk4(x, v, lambda u: a @ u - degree * u, dt)
    return v


def _layer_diameters(v: np.ndarray, hierarchy: Hierarchy) -> list[float]:
    return [velocity_diameter(v, u) for u in hierarchy.nested_sets]


def diameter_inequality_probe(
    state: State, graph: InteractionGraph, hierarchy: Hierarchy, dt: float = 1e-4
) -> ProbeResult:
    """Forward-difference check of the per-layer diameter growth bounds.

    With the overall diameter frozen at the probe's start, the growth rate of
    the diameter of ``U_1`` is at most ``-D_1 + m (D_N - D_1)`` and that of
    ``U_{k+1}`` at most ``alpha_k (D_k - D_{k+1}) + (m - alpha_k)(D_N - D_{k+1})``.
    """
    check = check_hypothesis1(graph, hierarchy)
    if not check:
        return ProbeResult(f"hypothesis fails at layer {check.layer}, agent {check.agent}")
    v0 = np.array(state.velocities)
    v1 = _frozen_run(v0, graph.adjacency, dt, 1)
    before = _layer_diameters(v0, hierarchy)
    after = _layer_diameters(v1, hierarchy)
    top = velocity_diameter(v0)
    m = graph.m
    rows = []
    for k in range(hierarchy.depth):
        lhs = (after[k + 1] - before[k + 1]) / dt
        if k == 0:
            rhs = -before[1] + m * (top - before[1])
        else:
            a = hierarchy.alphas[k - 1]
            rhs = a * (before[k] - before[k + 1]) + (m - a) * (top - before[k + 1])
        rows.append((k, lhs, rhs))
    return ProbeResult(None, rows, integration_tolerance(dt, top))


def layer_contraction_probe(
    state: State, graph: InteractionGraph, hierarchy: Hierarchy, k: int, tau: float, dt: float = 1e-3
) -> tuple[float, float]:
    """Integrated per-layer contraction over ``[t, t + tau]`` with the graph frozen.

    Returns ``(observed, bound)`` with ``observed`` the diameter of ``U_{k+1}``
    at ``t + tau`` and ``bound = D_N(t) - c_k(tau) (D_N(t) - D_{U_k}(t))``.
    """
    if not check_hypothesis1(graph, hierarchy):
        raise DomainError("hypothesis does not hold for this graph and hierarchy")
    steps = max(1, int(round(tau / dt)))
    v0 = np.array(state.velocities)
    v1 = _frozen_run(v0, graph.adjacency, tau / steps, steps)
    top = velocity_diameter(v0)
    inner = velocity_diameter(v0, hierarchy.nested(k))
    alpha = hierarchy.alphas[k - 1] if k >= 1 else None
    gain = layer_gain(k, tau, graph.m, alpha)
    return velocity_diameter(v1, hierarchy.nested(k + 1)), top - gain * (top - inner)
