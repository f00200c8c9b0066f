"""A priori flocking certificates: initial velocity diameter against (c/T) * rho."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .contraction import Candidate, ContractionSchedule, evaluate_candidate, sweep
from .errors import DomainError
from .hierarchy import Hierarchy, NoSpanningTree
from .model import Configuration, config_digest, is_reference_scenario, velocity_diameter
from .robustness import graph_robustness, root_robustness

CERTIFIED = "certified"
NOT_CERTIFIED = "not-certified"
UNCERTIFIABLE = "uncertifiable"

REFERENCE_RHO = 0.25
REFERENCE_ROOT = 1  # second agent, 0-based


@dataclass
class Certificate:
    """Verdict of the sufficient flocking condition together with every input to it.

    ``premise_holds`` is False when an override asked for a disturbance level
    at which the core graph has no spanning tree from the chosen root; the
    hierarchy is then taken from the largest core graph that still has one and
    the verdict is conditional (see ``warnings``).
    """

    digest: str
    m: int
    n: int
    rho: float | None
    root: int | None
    hierarchy: Hierarchy | None
    schedule: ContractionSchedule | None
    threshold: float
    initial_diameter: float
    verdict: str
    premise_holds: bool = True
    hierarchy_rho: float | None = None
    warnings: list[str] = field(default_factory=list)
    candidates: list[Candidate] = field(default_factory=list)

    @property
    def margin(self) -> float:
        return self.threshold - self.initial_diameter

    @property
    def certified(self) -> bool:
        return self.verdict == CERTIFIED


def _verdict(delta0: float, threshold: float) -> str:
    return CERTIFIED if delta0 <= threshold else NOT_CERTIFIED


def certify(config: Configuration, rho: float | None = None, root: int | None = None) -> Certificate:
    """Evaluate the certificate, sweeping (rho, root) unless overridden.

    ``root`` is a 0-based agent index. Supplying only one of ``rho``/``root``
    restricts the sweep to that value.
    """
    x = config.positions
    m = config.m
    delta0 = velocity_diameter(config.velocities)
    base = dict(digest=config_digest(config), m=m, n=config.n, initial_diameter=delta0)
    if root is not None and not 0 <= root < config.n:
        raise DomainError(f"root {root} out of range 0..{config.n - 1}")
    if rho is not None and not rho >= 0:
        raise DomainError(f"rho must be non-negative, got {rho}")

    report = graph_robustness(x, m)
    if not report.has_spanning_tree:
        return Certificate(
            **base, rho=rho, root=root, hierarchy=None, schedule=None, threshold=0.0,
            verdict=UNCERTIFIABLE, warnings=["initial interaction graph has no spanning tree"],
        )

    if rho is None or root is None:
        result = sweep(
            x, m,
            rhos=None if rho is None else [rho],
            roots=None if root is None else [root],
        )
    else:
        result = None

    if result is not None:
        if not result.certifiable:
            return Certificate(
                **base, rho=rho, root=root, hierarchy=None, schedule=None, threshold=0.0,
                verdict=UNCERTIFIABLE, candidates=result.candidates,
                warnings=["no contracting hierarchy for the requested choice"],
            )
        cert = Certificate(
            **base, rho=result.rho, root=result.root, hierarchy=result.hierarchy,
            schedule=result.schedule, threshold=result.bound,
            verdict=_verdict(delta0, result.bound), hierarchy_rho=result.rho,
            candidates=result.candidates,
        )
    else:
        cert = _override(config, rho, root, report.graph_robustness, delta0, base)

    if cert.rho is not None and cert.rho > delta0:
        cert.warnings.append(
            f"rho={cert.rho:.6g} exceeds the initial velocity diameter {delta0:.6g}; "
            "the condition rho <= diameter is not enforced"
        )
    if is_reference_scenario(config):
        cert.warnings.append(
            f"reference scenario: the documented robustness {REFERENCE_RHO} differs from the "
            f"graph robustness {report.graph_robustness:.6g} computed from the edge definitions "
            f"(agent 3's (m+1)-th closest agent is agent 1, not agent 4); "
            f"pass rho={REFERENCE_RHO}, root {REFERENCE_ROOT + 1} to reproduce the documented bound"
        )
    return cert


def _override(config, rho, root, rho_graph, delta0, base) -> Certificate:
    x, m = config.positions, config.m
    warnings = []
    premise = True
    try:
        cand, h, sched = evaluate_candidate(x, m, rho, root)
        hierarchy_rho = rho
    except NoSpanningTree:
        # Fall back to the largest core graph that keeps a tree from this root.
        rho_root, _ = root_robustness(x, m, root)
        if rho_root < 0:
            return Certificate(
                **base, rho=rho, root=root, hierarchy=None, schedule=None, threshold=0.0,
                verdict=UNCERTIFIABLE,
                warnings=[f"agent {root + 1} does not reach every agent in the initial graph"],
            )
        premise = False
        hierarchy_rho = rho_root
        cand, h, sched = evaluate_candidate(x, m, rho_root, root)
        warnings.append(
            f"override rho={rho:.6g} exceeds the graph robustness {rho_graph:.6g}: the core "
            f"graph at rho={rho:.6g} has no spanning tree from agent {root + 1}; hierarchy "
            f"built on the core graph at rho={rho_root:.6g} and the verdict is conditional"
        )
    if sched is None:
        return Certificate(
            **base, rho=rho, root=root, hierarchy=h, schedule=None, threshold=0.0,
            verdict=UNCERTIFIABLE, hierarchy_rho=hierarchy_rho,
            warnings=warnings + ["hierarchy has a zero flow bound; no contraction guaranteed"],
        )
    threshold = sched.ratio * rho
    cand = replace(cand, rho=rho, bound=threshold)
    return Certificate(
        **base, rho=rho, root=root, hierarchy=h, schedule=sched, threshold=threshold,
        verdict=_verdict(base["initial_diameter"], threshold), premise_holds=premise,
        hierarchy_rho=hierarchy_rho, warnings=warnings, candidates=[cand],
    )


def scaled_velocities(config: Configuration, factor: float) -> np.ndarray:
    """Velocities whose deviations from the mean are scaled by ``factor``."""
    mean = config.velocities.mean(axis=0)
    return mean + factor * (config.velocities - mean)
