"""Layer gains, the ratio-optimal dwell-time schedule, and the (rho, root) sweep."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import bisect

from .errors import DomainError, SolverError
from .hierarchy import Hierarchy, build_hierarchy
from .robustness import edge_robustness_matrix, graph_robustness
from .topology import perturbed_core_graph

T_TOL = 1e-12
# A depth-1 hierarchy has no interior optimum: gain/period tends to 1 as the
# dwell shrinks. This dwell keeps the ratio within about 5e-4 of that limit.
STAR_DWELL = 1e-3


def layer_gain(k: int, tau: float, m: int, alpha: int | None = None) -> float:
    """Guaranteed fraction of diameter removed from layer ``k+1`` in time ``tau``.

    ``k = 0``: ``(1 - exp(-(m+1) tau)) / (m+1)``.
    ``k >= 1``: ``exp(-(m - alpha) tau) (1 - exp(-alpha tau))``, the overflow-free
    form of ``exp(-m tau) (exp(alpha tau) - 1)``.
    """
    if tau < 0:
        raise DomainError(f"dwell time must be non-negative, got {tau}")
    if k == 0:
        return -math.expm1(-(m + 1) * tau) / (m + 1)
    if alpha is None or not 1 <= alpha <= m:
        raise DomainError(f"flow bound must lie in [1, m={m}], got {alpha}")
    return math.exp(-(m - alpha) * tau) * -math.expm1(-alpha * tau)


def gain_product(taus: Sequence[float], m: int, alphas: Sequence[int]) -> float:
    c = layer_gain(0, taus[0], m)
    for k, (tau, a) in enumerate(zip(taus[1:], alphas), start=1):
        c *= layer_gain(k, tau, m, a)
    return c


def ratio(taus: Sequence[float], m: int, alphas: Sequence[int]) -> float:
    """Per-period gain over period length for an arbitrary schedule."""
    total = float(sum(taus))
    if total <= 0:
        return 0.0
    return gain_product(taus, m, alphas) / total


def _validate(m: int, alphas: Sequence[int]):
    if m < 1:
        raise DomainError(f"m must be positive, got {m}")
    for a in alphas:
        if not 1 <= a <= m:
            raise DomainError(f"flow bound must lie in [1, m={m}], got {a}")


def period_residual(T: float, m: int, alphas: Sequence[int]) -> float:
    """``log RHS - T`` for the period equation; zero at the optimal period."""
    total = math.log1p((m + 1) * T) / (m + 1)
    for a in alphas:
        total += (math.log1p(m * T) - math.log1p((m - a) * T)) / a
    return total - T


@dataclass(frozen=True)
class ContractionSchedule:
    dwell_times: tuple[float, ...]
    period: float
    gain: float
    m: int
    alphas: tuple[int, ...]

    @property
    def ratio(self) -> float:
        return self.gain / self.period

    @property
    def depth(self) -> int:
        return len(self.dwell_times)

    def envelope(self, q: int, initial_diameter: float) -> float:
        """Guaranteed bound on the diameter after ``q`` full periods."""
        return (1.0 - self.gain) ** q * initial_diameter


def solve_schedule(m: int, alphas: Sequence[int], depth: int | None = None) -> ContractionSchedule:
    """Dwell times maximizing gain / period for a hierarchy with these flow bounds.

    The optimal period is the unique positive root of
    ``T = ln((m+1)T + 1)/(m+1) + sum_k ln((mT + 1)/((m - a_k)T + 1))/a_k``,
    found by bisection; the dwell times follow in closed form. With no flow
    bounds (depth 1) the supremum is not attained and ``STAR_DWELL / (m+1)``
    is used instead.
    """
    alphas = tuple(int(a) for a in alphas)
    if depth is not None and depth != len(alphas) + 1:
        raise DomainError(f"depth {depth} needs {depth - 1} flow bounds, got {len(alphas)}")
    _validate(m, alphas)
    if not alphas:
        tau = STAR_DWELL / (m + 1)
        return ContractionSchedule((tau,), tau, layer_gain(0, tau, m), m, alphas)

    def g(T):
        return period_residual(T, m, alphas)

    hi = 1.0
    while g(hi) >= 0:
        hi *= 2.0
        if hi > 1e12:
            raise SolverError(f"no sign change up to T={hi} (m={m}, alphas={alphas})")
    lo = hi / 2.0
    while g(lo) <= 0:
        lo /= 2.0
        if lo < 1e-300:
            raise SolverError(f"residual not positive near 0 (m={m}, alphas={alphas})")
    period = bisect(g, lo, hi, xtol=T_TOL, rtol=4 * np.finfo(float).eps, maxiter=500)

    taus = [math.log1p((m + 1) * period) / (m + 1)]
    taus += [(math.log1p(m * period) - math.log1p((m - a) * period)) / a for a in alphas]
    return ContractionSchedule(
        dwell_times=tuple(taus),
        period=float(sum(taus)),
        gain=gain_product(taus, m, alphas),
        m=m,
        alphas=alphas,
    )


@dataclass(frozen=True)
class Candidate:
    """One (rho, root) evaluation in the sweep."""

    rho: float
    root: int
    depth: int
    alphas: tuple[int, ...]
    period: float | None
    gain: float | None
    ratio: float
    bound: float

    @property
    def contracting(self) -> bool:
        return self.period is not None


@dataclass
class BoundResult:
    """Best (rho, root) choice and its schedule; ``rho`` is None if uncertifiable."""

    rho: float | None
    root: int | None
    hierarchy: Hierarchy | None
    schedule: ContractionSchedule | None
    bound: float
    candidates: list[Candidate] = field(default_factory=list)

    @property
    def certifiable(self) -> bool:
        return self.rho is not None


def evaluate_candidate(positions, m: int, rho: float, root: int) -> tuple[Candidate, Hierarchy, ContractionSchedule | None]:
    """Hierarchy and schedule for one (rho, root); raises NoSpanningTree if unreachable."""
    h = build_hierarchy(perturbed_core_graph(positions, m, rho), root)
    if not h.contracting:
        return Candidate(rho, root, h.depth, h.alphas, None, None, 0.0, 0.0), h, None
    sched = solve_schedule(m, h.alphas)
    cand = Candidate(rho, root, h.depth, h.alphas, sched.period, sched.gain, sched.ratio, sched.ratio * rho)
    return cand, h, sched


def rho_candidates(positions, m: int) -> list[float]:
    """Distinct edge robustness values at which the core graph keeps a spanning tree."""
    report = graph_robustness(positions, m)
    if not report.has_spanning_tree:
        return []
    s = edge_robustness_matrix(positions, m)
    values = np.unique(s[np.isfinite(s)])
    return [float(v) for v in values if v <= report.graph_robustness]


def sweep(positions, m: int, rhos: Sequence[float] | None = None, roots: Sequence[int] | None = None) -> BoundResult:
    """Evaluate every (rho, root) pair whose core graph is spanned from ``root``.

    ``rhos`` defaults to :func:`rho_candidates`, ``roots`` to all agents. The
    best bound wins; ties go to the larger rho, then the lower root index.
    """
    x = np.asarray(positions, dtype=float)
    rows: list[Candidate] = []
    best = None
    for rho in rho_candidates(x, m) if rhos is None else rhos:
        core = perturbed_core_graph(x, m, rho)
        spanning = core.spanning_roots()
        for root in spanning if roots is None else [r for r in roots if r in spanning]:
            cand, h, sched = evaluate_candidate(x, m, rho, root)
            rows.append(cand)
            if sched is None:
                continue
            key = (cand.bound, cand.rho, -cand.root)
            if best is None or key > best[0]:
                best = (key, cand, h, sched)
    if best is None:
        return BoundResult(None, None, None, None, 0.0, rows)
    _, cand, h, sched = best
    return BoundResult(cand.rho, cand.root, h, sched, cand.bound, rows)


def optimize_bound(positions, m: int) -> BoundResult:
    """Largest certified threshold over all candidate disturbances and roots."""
    return sweep(positions, m)
