"""Command-line entry point: certify, simulate, sweep, robustness.

Exit status: 0 on success, 1 when ``certify`` does not certify, 2 on input errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import io
from .certificate import certify
from .contraction import optimize_bound
from .errors import DomainError
from .robustness import graph_robustness
from .simulator import DEFAULT_DT, DEFAULT_T_END, monitor_report, simulate

log = logging.getLogger("topoflock")


def _root(value: str) -> int:
    k = int(value)
    if k < 1:
        raise argparse.ArgumentTypeError("agents are numbered from 1")
    return k - 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="topoflock",
        description="A priori flocking certificates for m-nearest-neighbor velocity alignment.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("certify", help="evaluate the flocking certificate")
    p.add_argument("config")
    p.add_argument("--rho", type=float, help="disturbance level override")
    p.add_argument("--root", type=_root, help="root agent override (1-based)")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("simulate", help="integrate the switched system and monitor the certificate")
    p.add_argument("config")
    p.add_argument("--dt", type=float, default=DEFAULT_DT)
    p.add_argument("--t-end", type=float, default=DEFAULT_T_END)
    p.add_argument("--certificate", help="certificate document (computed when omitted)")
    p.add_argument("-o", "--output", required=True, help="prefix for emitted files")

    p = sub.add_parser("sweep", help="full (rho, root) candidate table")
    p.add_argument("config")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("robustness", help="edge, root and graph robustness report")
    p.add_argument("config")
    p.add_argument("-o", "--output", required=True)
    return parser


def _certify(args) -> int:
    config = io.read_config(args.config)
    cert = certify(config, rho=args.rho, root=args.root)
    Path(args.output).write_text(io.serialize_certificate(cert), encoding="utf-8")
    print(f"{cert.verdict}: initial diameter {cert.initial_diameter:.6g}, threshold {cert.threshold:.6g}")
    for w in cert.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return 0 if cert.certified else 1


def _simulate(args) -> int:
    config = io.read_config(args.config)
    if args.certificate:
        cert = io.parse_certificate(Path(args.certificate).read_text(encoding="utf-8"))
    else:
        cert = certify(config)
    traj = simulate(config, dt=args.dt, t_end=args.t_end, certificate=cert)
    report = monitor_report(traj, cert)
    prefix = args.output
    io.write_trajectory(traj, f"{prefix}.trajectory.csv")
    io.write_diagnostics(traj, f"{prefix}.diagnostics.csv")
    Path(f"{prefix}.monitor.json").write_text(io.serialize_monitor(report), encoding="utf-8")
    status = "aligned" if report.alignment_reached else "not aligned"
    print(f"{len(traj)} samples, {status}, terminal diameter {report.terminal_diameter:.3g}")
    return 0


def _sweep(args) -> int:
    config = io.read_config(args.config)
    result = optimize_bound(config.positions, config.m)
    io.write_sweep(result.candidates, args.output)
    if result.certifiable:
        print(f"best rho {result.rho:.6g}, root {result.root + 1}, bound {result.bound:.6g}")
    else:
        print("uncertifiable: initial graph has no spanning tree")
    return 0


def _robustness(args) -> int:
    config = io.read_config(args.config)
    report = graph_robustness(config.positions, config.m)
    Path(args.output).write_text(io.serialize_robustness(report), encoding="utf-8")
    if report.has_spanning_tree:
        print(f"graph robustness {report.graph_robustness:.6g} (root {report.best_root + 1})")
    else:
        print("initial graph has no spanning tree")
    return 0


COMMANDS = {"certify": _certify, "simulate": _simulate, "sweep": _sweep, "robustness": _robustness}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return COMMANDS[args.command](args)
    except (io.ConfigError, DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
