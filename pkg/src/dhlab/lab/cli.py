"""Command line interface.

Exit codes: 0 when every verdict is PASS or VACUOUS, 1 when any verdict
fails, 2 for usage and configuration errors.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from ..besov import FourierConfig, band_decomposition
from ..grid import log_grid, power_transform
from ..operator import DistortedKernel, assemble_distorted, assemble_weighted_hankel
from ..projection import angular_rule, beta_normalizer, project_Q
from ..spectrum import dense_singular_values, schatten, topk_singular_values
from ..symbol import parse_symbol
from .config import EXPERIMENTS, ConfigError, exponent, load_config
from .experiments import recompute_verdicts, run_experiment
from .report import load_report, write_report

# options whose values may start with '-' (e.g. "--grid -10:4:16")
_RANGE_OPTS = ("--grid", "--j-range")


class UsageError(ValueError):
    pass


def _triple(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"grid must be j_min:j_max:ppo, got {text!r}")
    try:
        return tuple(int(p) for p in parts)
    except ValueError:
        raise UsageError(f"grid must be integers, got {text!r}") from None


def _pair(text: str):
    parts = text.split(":")
    if len(parts) != 2:
        raise UsageError(f"range must be lo:hi, got {text!r}")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise UsageError(f"range must be integers, got {text!r}") from None


def _floats(text: str) -> List[float]:
    try:
        return [exponent(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _join_range_args(argv: Sequence[str]) -> List[str]:
    out, i = [], 0
    argv = list(argv)
    while i < len(argv):
        if argv[i] in _RANGE_OPTS and i + 1 < len(argv):
            out.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML config file")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--jobs", type=int, help="worker processes")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key, e.g. experiments.window.sizes=[64,128]")

    ap = argparse.ArgumentParser(prog="dhlab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("grid", parents=[common], help="describe a dyadic grid")
    g.add_argument("--grid", default="0:3:4", help="j_min:j_max:ppo")
    g.add_argument("--power", type=float, default=1.0, help="apply x -> x**power")

    b = sub.add_parser("besov", parents=[common], help="band norms and Besov norm of a symbol")
    b.add_argument("--symbol", required=True)
    b.add_argument("--p", default="2")
    b.add_argument("--s", type=float, default=0.0)
    b.add_argument("--j-range", help="lo:hi (inferred from the support if omitted)")

    s = sub.add_parser("svd", parents=[common], help="singular values of an assembled operator")
    s.add_argument("--symbol", required=True)
    s.add_argument("--alpha", type=float, default=1.0)
    s.add_argument("--beta", type=float, default=1.0)
    s.add_argument("--a", type=float, help="weight exponent on x (weighted Hankel form)")
    s.add_argument("--b", type=float, help="weight exponent on y (weighted Hankel form)")
    s.add_argument("--grid", default="-10:4:16", help="j_min:j_max:ppo")
    s.add_argument("--top", type=int, default=5)
    s.add_argument("--p", default="1,2,inf", help="Schatten exponents to print")
    s.add_argument("--iterative", action="store_true", help="use Lanczos for the top values")

    pj = sub.add_parser("project", parents=[common], help="level-curve average of a kernel")
    pj.add_argument("--symbol", required=True)
    pj.add_argument("--alpha", type=float, default=1.0)
    pj.add_argument("--beta", type=float, default=1.0)
    pj.add_argument("--a", type=float, default=0.0, help="kernel x**a y**b phi(x+y)")
    pj.add_argument("--b", type=float, default=0.0)
    pj.add_argument("--r", default="0.5,1,2", help="radii to evaluate at")

    e = sub.add_parser("experiment", parents=[common], help="run an experiment")
    e.add_argument("id", choices=list(EXPERIMENTS) + ["all"])

    r = sub.add_parser("report", parents=[common], help="re-check stored reports")
    r.add_argument("path", nargs="?", help="results directory (default: config 'out')")
    return ap


def _cfg(args):
    overrides = list(args.set)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.jobs is not None:
        overrides.append(f"jobs={args.jobs}")
    cfg = load_config(args.config, overrides)
    if args.out is not None:
        cfg["out"] = args.out
    return cfg


def _cmd_grid(args, cfg):
    g = log_grid(*_triple(args.grid))
    if args.power != 1.0:
        g = power_transform(g, args.power)
    print(g.describe())
    k = min(3, len(g))
    print("first points:", " ".join(f"{v:.6g}" for v in g.points[:k]))
    print("last points: ", " ".join(f"{v:.6g}" for v in g.points[-k:]))
    return 0


def _cmd_besov(args, cfg):
    phi = parse_symbol(args.symbol)
    p = exponent(args.p)
    jr = _pair(args.j_range) if args.j_range else None
    f = cfg["fourier"]
    dec = band_decomposition(phi, p, args.s, jr, FourierConfig(**f), jobs=cfg["jobs"])
    for j, v in dec.band_norms.items():
        print(f"j={j:+d}  ||F(v_j phi)||_p = {v:.10g}")
    print(f"Besov norm (p={args.p}, s={args.s:g}) = {dec.norm():.10g}")
    return 0


def _cmd_svd(args, cfg):
    phi = parse_symbol(args.symbol)
    g = log_grid(*_triple(args.grid))
    if args.a is not None or args.b is not None:
        m = assemble_weighted_hankel(phi, args.a or 0.0, args.b or 0.0, g, g, jobs=cfg["jobs"])
    else:
        m = assemble_distorted(phi, args.alpha, args.beta, g, g, jobs=cfg["jobs"])
    if args.iterative:
        e = m.entries
        sp = topk_singular_values(lambda v: e @ v, lambda u: e.T @ u, e.shape, args.top,
                                  seed=cfg["seed"])
    else:
        sp = dense_singular_values(m)
    print(m.label, f"on {len(g)} points ({sp.source})")
    for j, v in enumerate(sp.values[: args.top]):
        print(f"s_{j} = {v:.10g}")
    # top-k values give only a lower bound for finite p
    partial = " (top-k lower bound)" if args.iterative else ""
    for p in _floats(args.p):
        tag = partial if math.isfinite(p) else ""
        print(f"||.||_S{p:g} = {schatten(sp, p):.10g}{tag}")
    return 0


def _cmd_project(args, cfg):
    phi = parse_symbol(args.symbol)
    k = DistortedKernel(phi, 1.0, 1.0, args.a, args.b)
    q = project_Q(k, args.alpha, args.beta, angular_rule(args.alpha, args.beta, cfg["jacobi_nodes"]))
    print(f"A(alpha, beta) = {beta_normalizer(args.alpha, args.beta):.12g}")
    r = np.array(_floats(args.r))
    for rv, v in zip(r, q(r)):
        print(f"r = {rv:g}  projected symbol = {v:.12g}")
    return 0


def _print_verdicts(name, verdicts):
    for v in verdicts:
        print(f"[{v['verdict']}] {name}: {v['name']}")


def _cmd_experiment(args, cfg):
    ids = EXPERIMENTS if args.id == "all" else (args.id,)
    code = 0
    for name in ids:
        rep = run_experiment(name, cfg)
        out = write_report(rep, cfg["out"])
        _print_verdicts(name, rep.verdicts)
        print(f"{name}: {rep.status} ({rep.timing['total_seconds']:.1f}s) -> {out}")
        if rep.status != "PASS":
            code = 1
    return code


def _cmd_report(args, cfg):
    root = Path(args.path or cfg["out"])
    files = sorted(root.glob("*/report.json"))
    if not files:
        print(f"no reports under {root}", file=sys.stderr)
        return 2
    code = 0
    for f in files:
        rep = load_report(f)
        again = recompute_verdicts(rep)
        same = [(a["name"], a["verdict"]) for a in again] == [
            (b["name"], b["verdict"]) for b in rep["verdicts"]
        ]
        _print_verdicts(rep["experiment"], again)
        print(f"{rep['experiment']}: {rep['status']}, verdicts recomputed "
              f"{'identically' if same else 'DIFFERENTLY'}")
        if not same or any(v["verdict"] == "FAIL" for v in again):
            code = 1
    return code


_COMMANDS = {
    "grid": _cmd_grid,
    "besov": _cmd_besov,
    "svd": _cmd_svd,
    "project": _cmd_project,
    "experiment": _cmd_experiment,
    "report": _cmd_report,
}


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    try:
        args = parser.parse_args(_join_range_args(argv))
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        cfg = _cfg(args)
        return _COMMANDS[args.command](args, cfg)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_cli())
