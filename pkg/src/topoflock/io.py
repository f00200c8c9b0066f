"""Configuration documents and result serialization.

Structured documents are JSON carrying ``"schema": 1``. Agents are numbered
from 1 in every document (the Python API is 0-based). Bulk trajectory data is
written as CSV with 17 significant digits so values round-trip exactly.
"""

from __future__ import annotations

import csv
import json
import math
import re
from pathlib import Path
from typing import Any

import numpy as np

from .certificate import Certificate
from .contraction import Candidate, ContractionSchedule
from .errors import DomainError
from .hierarchy import Hierarchy
from .model import Configuration
from .robustness import RobustnessReport
from .simulator import MonitorReport, Trajectory
from .topology import CORE, InteractionGraph

SCHEMA = 1


class ConfigError(ValueError):
    """Malformed document; ``field`` names the offending entry."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        where = []
        if field:
            where.append(f"field {field!r}")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.field = field
        self.line = line


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _load(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(exc.msg, line=exc.lineno) from None
    if not isinstance(doc, dict):
        raise ConfigError("document must be a JSON object")
    return doc


def _require(doc: dict, key: str, path: str = ""):
    if key not in doc:
        raise ConfigError("missing required field", field=path + key)
    return doc[key]


def _vector(value, field: str, dimension: int) -> list[float]:
    if not isinstance(value, list) or len(value) != dimension:
        raise ConfigError(f"expected a list of {dimension} numbers", field=field)
    out = []
    for k, item in enumerate(value):
        if isinstance(item, bool) or not isinstance(item, (int, float)):
            raise ConfigError("expected a number", field=f"{field}[{k}]")
        if not math.isfinite(item):
            raise ConfigError("expected a finite number", field=f"{field}[{k}]")
        out.append(float(item))
    return out


def _positive_int(value, field: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ConfigError("expected a positive integer", field=field)
    return value


def parse_config(text: str) -> Configuration:
    """Parse a configuration document.

    With an optional ``scenario`` block ``{"velocity_scale": a, "drift": [...]}``
    each agent's ``v`` is a direction ``w`` and the velocity is ``a * w + drift``.
    """
    doc = _load(text)
    schema = doc.get("schema", SCHEMA)
    if schema != SCHEMA:
        raise ConfigError(f"unsupported schema {schema!r}", field="schema")
    dimension = _positive_int(_require(doc, "dimension"), "dimension")
    m = _positive_int(_require(doc, "m"), "m")
    agents = _require(doc, "agents")
    if not isinstance(agents, list):
        raise ConfigError("expected a list of agents", field="agents")
    xs, vs = [], []
    for i, agent in enumerate(agents):
        path = f"agents[{i}]."
        if not isinstance(agent, dict):
            raise ConfigError("expected an object", field=f"agents[{i}]")
        xs.append(_vector(_require(agent, "x", path), path + "x", dimension))
        vs.append(_vector(_require(agent, "v", path), path + "v", dimension))
    if len(agents) < m + 2:
        raise ConfigError(f"need at least m + 2 = {m + 2} agents, got {len(agents)}", field="agents")
    velocities = np.array(vs)
    scenario = doc.get("scenario")
    if scenario is not None:
        if not isinstance(scenario, dict):
            raise ConfigError("expected an object", field="scenario")
        scale = _require(scenario, "velocity_scale", "scenario.")
        if isinstance(scale, bool) or not isinstance(scale, (int, float)) or not math.isfinite(scale):
            raise ConfigError("expected a finite number", field="scenario.velocity_scale")
        drift = _vector(scenario.get("drift", [0.0] * dimension), "scenario.drift", dimension)
        velocities = float(scale) * velocities + np.array(drift)[None, :]
    try:
        return Configuration(np.array(xs), velocities, m)
    except DomainError as exc:
        raise ConfigError(str(exc)) from None


def read_config(path) -> Configuration:
    return parse_config(Path(path).read_text(encoding="utf-8"))


_ATOM = r"(?:-?[0-9.eE+-]+|null|true|false)"
_SCALAR_LIST = re.compile(rf"\[\s*({_ATOM}(?:\s*,\s*{_ATOM})*)\s*\]")


def _dump(doc: dict) -> str:
    text = json.dumps(doc, indent=2, allow_nan=False)
    # keep lists of numbers on one line
    text = _SCALAR_LIST.sub(lambda mt: "[" + re.sub(r"\s*\n\s*", " ", mt.group(1)) + "]", text)
    return text + "\n"


def serialize_config(config: Configuration) -> str:
    return _dump({
        "schema": SCHEMA,
        "dimension": config.dimension,
        "m": config.m,
        "agents": [
            {"x": [float(c) for c in x], "v": [float(c) for c in v]}
            for x, v in zip(config.positions, config.velocities)
        ],
    })


def _finite(x: float | None):
    if x is None or not math.isfinite(x):
        return None
    return float(x)


def _edges_doc(graph: InteractionGraph) -> list[list[int]]:
    return [[j + 1, i + 1] for j, i in graph.edges()]


def _candidate_doc(c: Candidate) -> dict:
    return {
        "rho": c.rho, "root": c.root + 1, "depth": c.depth, "alphas": list(c.alphas),
        "period": c.period, "gain": c.gain, "ratio": c.ratio, "bound": c.bound,
    }


def certificate_to_dict(cert: Certificate) -> dict:
    h, s = cert.hierarchy, cert.schedule
    return {
        "schema": SCHEMA,
        "kind": "certificate",
        "configuration_digest": cert.digest,
        "m": cert.m,
        "n": cert.n,
        "rho": cert.rho,
        "root": None if cert.root is None else cert.root + 1,
        "hierarchy_rho": cert.hierarchy_rho,
        "premise_holds": cert.premise_holds,
        "hierarchy": None if h is None else {
            "depth": h.depth,
            "layers": [[i + 1 for i in layer] for layer in h.layers],
            "alphas": list(h.alphas),
            "core_edges": _edges_doc(h.graph),
        },
        "schedule": None if s is None else {
            "dwell_times": list(s.dwell_times),
            "period": s.period,
            "gain": s.gain,
            "ratio": s.ratio,
        },
        "threshold": cert.threshold,
        "initial_diameter": cert.initial_diameter,
        "margin": cert.margin,
        "verdict": cert.verdict,
        "warnings": list(cert.warnings),
        "candidates": [_candidate_doc(c) for c in cert.candidates],
    }


def serialize_certificate(cert: Certificate) -> str:
    return _dump(certificate_to_dict(cert))


def parse_certificate(text: str) -> Certificate:
    doc = _load(text)
    if doc.get("kind") != "certificate":
        raise ConfigError("not a certificate document", field="kind")
    try:
        m, n = int(doc["m"]), int(doc["n"])
        hierarchy = schedule = None
        if doc["hierarchy"] is not None:
            hd = doc["hierarchy"]
            adj = np.zeros((n, n), dtype=bool)
            for j, i in hd["core_edges"]:
                adj[i - 1, j - 1] = True
            layers = tuple(tuple(i - 1 for i in layer) for layer in hd["layers"])
            hierarchy = Hierarchy(layers[0][0], layers, tuple(hd["alphas"]), InteractionGraph(adj, m, CORE))
        if doc["schedule"] is not None:
            sd = doc["schedule"]
            schedule = ContractionSchedule(
                tuple(sd["dwell_times"]), sd["period"], sd["gain"], m,
                tuple(doc["hierarchy"]["alphas"]),
            )
        return Certificate(
            digest=doc["configuration_digest"], m=m, n=n, rho=doc["rho"],
            root=None if doc["root"] is None else doc["root"] - 1,
            hierarchy=hierarchy, schedule=schedule, threshold=doc["threshold"],
            initial_diameter=doc["initial_diameter"], verdict=doc["verdict"],
            premise_holds=doc["premise_holds"], hierarchy_rho=doc["hierarchy_rho"],
            warnings=list(doc["warnings"]),
            candidates=[
                Candidate(c["rho"], c["root"] - 1, c["depth"], tuple(c["alphas"]),
                          c["period"], c["gain"], c["ratio"], c["bound"])
                for c in doc["candidates"]
            ],
        )
    except KeyError as exc:
        raise ConfigError("missing required field", field=exc.args[0]) from None


def robustness_to_dict(report: RobustnessReport) -> dict:
    return {
        "schema": SCHEMA,
        "kind": "robustness",
        "has_spanning_tree": report.has_spanning_tree,
        "graph_robustness": _finite(report.graph_robustness),
        "best_root": None if report.best_root is None else report.best_root + 1,
        "co_optimal_roots": [r + 1 for r in report.co_optimal_roots],
        "edge_robustness": [
            {"source": j + 1, "target": i + 1, "s": s}
            for (j, i), s in sorted(report.edge_robustness.items(), key=lambda e: (e[0][1], e[0][0]))
        ],
        # null marks a root that does not reach every agent
        "root_robustness": [
            {"root": r + 1, "rho": _finite(v)} for r, v in sorted(report.root_robustness.items())
        ],
        "core_edges": None if report.core_subgraph is None else _edges_doc(report.core_subgraph),
    }


def serialize_robustness(report: RobustnessReport) -> str:
    return _dump(robustness_to_dict(report))


def monitor_to_dict(report: MonitorReport) -> dict:
    return {
        "schema": SCHEMA,
        "kind": "monitor_report",
        "tree_preserved": report.tree_preserved,
        "tree_preserved_until": _finite(report.tree_preserved_until),
        "hypothesis1_until": _finite(report.hypothesis1_until),
        "disconnection_time": report.disconnection_time,
        "envelope_checks": report.envelope_checks,
        "envelope_violations": [
            {"q": q, "diameter": d, "bound": b} for q, d, b in report.envelope_violations
        ],
        "displacement_max": report.displacement_max,
        "displacement_below_rho": report.displacement_below_rho,
        "alignment_reached": report.alignment_reached,
        "terminal_diameter": report.terminal_diameter,
        "monotonicity_violations": report.monotonicity_violations,
        "tolerance": report.tolerance,
        "notes": list(report.notes),
    }


def serialize_monitor(report: MonitorReport) -> str:
    return _dump(monitor_to_dict(report))


def write_trajectory(traj: Trajectory, path):
    d = traj.positions.shape[2]
    header = ["t", "agent"] + [f"x{k + 1}" for k in range(d)] + [f"v{k + 1}" for k in range(d)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(header)
        for k, t in enumerate(traj.times):
            for i in range(traj.positions.shape[1]):
                out.writerow(
                    [fmt(t), i + 1]
                    + [fmt(c) for c in traj.positions[k, i]]
                    + [fmt(c) for c in traj.velocities[k, i]]
                )


def read_trajectory(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(times, positions, velocities)`` from a trajectory CSV."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    d = sum(1 for h in header if h.startswith("x"))
    n = max(int(r[1]) for r in body)
    data = np.array([[float(c) for c in r] for r in body]).reshape(-1, n, 2 + 2 * d)
    return data[:, 0, 0], data[:, :, 2 : 2 + d], data[:, :, 2 + d :]


def _flag(mask, k) -> str:
    return "" if mask is None else str(int(mask[k]))


def write_diagnostics(traj: Trajectory, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow([
            "t", "delta_N", "tree_preserved", "hypothesis1", "displacement_max",
            "edge_changes", "has_spanning_tree",
        ])
        for k, t in enumerate(traj.times):
            out.writerow([
                fmt(t), fmt(traj.delta[k]), _flag(traj.containment, k), _flag(traj.hypothesis1, k),
                fmt(traj.displacement[k]), int(traj.edge_changes[k]), int(traj.spanning[k]),
            ])


def read_diagnostics(path) -> dict[str, list[Any]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        cols: dict[str, list[Any]] = {name: [] for name in reader.fieldnames}
        for row in reader:
            for name, value in row.items():
                cols[name].append(value)
    return cols


SWEEP_COLUMNS = ["rho", "root", "depth", "alphas", "period", "gain", "ratio", "bound"]


def write_sweep(candidates: list[Candidate], path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(SWEEP_COLUMNS)
        for c in candidates:
            out.writerow([
                fmt(c.rho), c.root + 1, c.depth, ";".join(str(a) for a in c.alphas),
                "" if c.period is None else fmt(c.period),
                "" if c.gain is None else fmt(c.gain),
                fmt(c.ratio), fmt(c.bound),
            ])


def read_sweep(path) -> list[Candidate]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return [
        Candidate(
            float(r["rho"]), int(r["root"]) - 1, int(r["depth"]),
            tuple(int(a) for a in r["alphas"].split(";") if a),
            float(r["period"]) if r["period"] else None,
            float(r["gain"]) if r["gain"] else None,
            float(r["ratio"]), float(r["bound"]),
        )
        for r in rows
    ]
