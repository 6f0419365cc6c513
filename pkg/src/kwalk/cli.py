"""Command-line entry point: ``kwalk <subcommand> [flags]``.

Primary output goes to ``--out`` or stdout; logs go to stderr.  Exit status is
0 on success, 1 when a soundness check fails and 2 on usage errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .bounds import (baby_matthews_upper, compose_cover_prob, cycle_bounds,
                     expander_hit_lower, expander_walk_budget, grid_lower, kspeed_upper,
                     matthews_bounds, mixing_speedup_lower)
from .estimate import StartSpec, estimate_cover, estimate_hitting, resolve_workers
from .exact import hitting_matrix, mixing_time
from .experiments import (ConfigError, ExperimentConfig, build_graph, run_barbell,
                          run_composition_check, run_conjecture_scan, run_table1)
from .graphs import GraphError, parse_graph, serialize_graph
from .walks import run_cover

log = logging.getLogger("kwalk")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
RANDOM_FAMILIES = {"erdos_renyi", "random_regular"}
BOUNDS = ("matthews", "baby_matthews", "kspeed", "expander_hit", "expander_budget",
          "cycle", "grid", "mixing", "compose")


class UsageError(Exception):
    pass


class _HelpFormatter(argparse.ArgumentDefaultsHelpFormatter):
    # show defaults, but not the uninformative "None"
    def _get_help_string(self, action):
        if action.default is None or action.default is False:
            return action.help
        return super()._get_help_string(action)


def _parser() -> argparse.ArgumentParser:
    fmt = _HelpFormatter
    p = argparse.ArgumentParser(prog="kwalk", formatter_class=fmt, allow_abbrev=False,
                                description="Parallel random walks on graphs.")
    p.add_argument("--version", action="version", version=f"kwalk {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = p.add_subparsers(dest="command", metavar="subcommand", required=True)

    def add(name, help_text):
        sp = sub.add_parser(name, help=help_text, description=help_text,
                            formatter_class=fmt, allow_abbrev=False)
        sp.add_argument("--out", default=None, help="output path (default: stdout)")
        return sp

    def seeded(sp, required=True, text="64-bit seed (mandatory: no implicit entropy)"):
        sp.add_argument("--seed", type=int, required=required, default=None, help=text)

    def worker_flag(sp):
        sp.add_argument("--workers", type=int, default=None,
                        help="estimator worker processes (env KWALK_WORKERS, else 1)")

    sp = add("gen", "generate a graph as an edge list")
    sp.add_argument("--family", required=True,
                    choices=["cycle", "complete", "torus", "hypercube", "barbell",
                             "erdos_renyi", "random_regular"], help="graph family")
    sp.add_argument("--n", type=int, default=None, help="vertex count")
    sp.add_argument("--side", type=int, default=None, help="torus side length")
    sp.add_argument("--dim", type=int, default=None, help="hypercube dimension")
    sp.add_argument("--d", type=int, default=None,
                    help="torus dimension (default 2) or regular degree (default 8)")
    sp.add_argument("--p", type=float, default=None,
                    help="edge probability (default 2 ln n / n)")
    sp.add_argument("--self-loops", action="store_true", help="complete graph with loops")
    seeded(sp, required=False, text="64-bit seed (mandatory for the random families)")

    sp = add("cover", "estimate the k-walk cover time")
    sp.add_argument("--graph", required=True, help="edge-list file")
    sp.add_argument("--k", type=int, default=1, help="number of walkers")
    sp.add_argument("--trials", type=int, default=1000, help="Monte Carlo trials")
    sp.add_argument("--start", type=int, default=0, help="fixed start vertex")
    sp.add_argument("--start-kind", default="fixed",
                    choices=["fixed", "stationary", "uniform"], help="start distribution")
    sp.add_argument("--cap", type=int, default=None, help="round cap (default 64 n^3)")
    sp.add_argument("--trace", default=None,
                    help="write the trajectory of trial 0 to this file")
    seeded(sp)
    worker_flag(sp)

    sp = add("hit", "estimate a hitting time, or export exact hitting times")
    sp.add_argument("--graph", required=True, help="edge-list file")
    sp.add_argument("--u", type=int, default=0, help="source vertex")
    sp.add_argument("--v", type=int, default=1, help="target vertex")
    sp.add_argument("--trials", type=int, default=1000, help="Monte Carlo trials")
    sp.add_argument("--exact", action="store_true",
                    help="write the exact all-pairs hitting matrix as CSV instead")
    seeded(sp)

    sp = add("mix", "exact mixing time")
    sp.add_argument("--graph", required=True, help="edge-list file")
    sp.add_argument("--lazy", action="store_true", help="use the lazy kernel (I+Q)/2")
    sp.add_argument("--t-cap", type=int, default=1_000_000, help="maximum t")

    sp = add("bounds", "evaluate a closed-form bound")
    sp.add_argument("--name", required=True, choices=BOUNDS, help="bound to evaluate")
    for flag, typ, text in (
            ("--n", int, "vertex count"),
            ("--k", int, "number of walkers"),
            ("--d", float, "degree (expander bounds) or torus dimension (grid, default 2)"),
            ("--lam", float, "largest nontrivial adjacency eigenvalue magnitude"),
            ("--h-min", float, "minimum hitting time"),
            ("--h-max", float, "maximum hitting time"),
            ("--cover", float, "single-walk cover time"),
            ("--f-val", float, "value of the slowly growing f(n) (default ln(cover/h_max))"),
            ("--t-m", float, "mixing time"),
            ("--p-c", float, "single-walk cover probability"),
            ("--p-h", float, "worst-pair hitting probability"),
            ("--ell", int, "hitting window repetitions")):
        sp.add_argument(flag, type=typ, default=None, help=text)
    sp.add_argument("--eps", type=float, default=0.1, help="finite surrogate for o(1)")

    sp = add("compose", "Monte Carlo check of the composition inequality")
    sp.add_argument("--graph", required=True, help="edge-list file")
    sp.add_argument("--t-c", type=int, required=True, help="single-walk cover length")
    sp.add_argument("--t-h", type=int, required=True, help="hitting window length")
    sp.add_argument("--k", type=int, required=True, help="number of walkers")
    sp.add_argument("--ell", type=int, required=True, help="hitting window repetitions")
    sp.add_argument("--trials", type=int, default=4000, help="Monte Carlo trials")
    sp.add_argument("--start", type=int, default=0, help="start vertex of every walker")
    sp.add_argument("--format", choices=["csv", "json"], default="json")
    seeded(sp)

    for name, text in (("table1", "run the speed-up table scenarios"),
                       ("scan", "run the conjecture scan")):
        sp = add(name, text)
        sp.add_argument("--config", required=True, help="experiment config (JSON)")
        sp.add_argument("--format", choices=["csv", "json"], default=None,
                        help="override the config's output format")
        seeded(sp, required=False, text="override every scenario seed")
        worker_flag(sp)

    sp = add("barbell", "barbell growth and speed-up experiment")
    sp.add_argument("--n", type=int, default=101, help="odd barbell size")
    sp.add_argument("--trials", type=int, default=1000, help="Monte Carlo trials")
    sp.add_argument("--format", choices=["csv", "json"], default="json")
    seeded(sp)
    worker_flag(sp)
    return p


def _write(args, text: str) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2)


def _load_graph(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read graph file {path!r}: {exc.strerror}") from None
    try:
        return parse_graph(text, family_tag=Path(path).name)
    except GraphError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _cmd_gen(args) -> int:
    fam = args.family
    if fam in RANDOM_FAMILIES and args.seed is None:
        raise UsageError(f"--seed is required for the random family {fam!r}")
    opts = {}
    if fam == "torus":
        d = args.d or 2
        size = args.side if args.side is not None else _root(args.n, d)
        opts["d"] = d
    elif fam == "hypercube":
        size = args.dim if args.dim is not None else _root(args.n, None)
    else:
        if args.n is None:
            raise UsageError(f"--n is required for family {fam!r}")
        size = args.n
        if fam == "complete":
            opts["self_loops"] = args.self_loops
        if fam == "random_regular":
            opts["d"] = args.d or 8
        if fam == "erdos_renyi" and args.p is not None:
            opts["p"] = args.p
    g, center = build_graph(fam, size, opts, args.seed or 0)
    if center is not None:
        log.info("barbell center vertex: %d", center)
    _write(args, serialize_graph(g))
    return EXIT_OK


def _root(n, d):
    if n is None:
        raise UsageError("give --side/--dim or --n")
    if d is None:
        dim = n.bit_length() - 1
        if 1 << dim != n:
            raise UsageError(f"--n {n} is not a power of two")
        return dim
    side = round(n ** (1 / d))
    if side**d != n:
        raise UsageError(f"--n {n} is not a perfect {d}-th power")
    return side


def _cmd_cover(args) -> int:
    g = _load_graph(args.graph)
    if args.start_kind == "fixed":
        spec = StartSpec.fixed(args.start)
    else:
        spec = StartSpec(args.start_kind)
    est = estimate_cover(g, spec, args.k, args.trials, args.seed, args.cap, args.workers)
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            run_cover(g, list(spec.starts(g, args.k, args.seed, [0])[0]), args.seed,
                      args.cap, trial=0, trace=fh)
    _write(args, _dump(est.to_json()))
    return EXIT_OK


def _cmd_hit(args) -> int:
    g = _load_graph(args.graph)
    if args.exact:
        _write(args, hitting_matrix(g).to_csv())
        return EXIT_OK
    if not (0 <= args.u < g.n and 0 <= args.v < g.n):
        raise UsageError("--u/--v out of range")
    _write(args, _dump(estimate_hitting(g, args.u, args.v, args.trials, args.seed).to_json()))
    return EXIT_OK


def _cmd_mix(args) -> int:
    g = _load_graph(args.graph)
    _write(args, _dump(mixing_time(g, args.lazy, args.t_cap).to_json()))
    return EXIT_OK


def _need(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError("missing " + ", ".join("--" + m.replace("_", "-") for m in missing))


def _cmd_bounds(args) -> int:
    name = args.name
    if name == "matthews":
        _need(args, "h_min", "h_max", "n")
        lo, hi = matthews_bounds(args.h_min, args.h_max, args.n)
        out = {"name": "matthews_bounds", "value": [lo, hi],
               "inputs": {"h_min": args.h_min, "h_max": args.h_max, "n": args.n}}
    elif name == "compose":
        _need(args, "p_c", "p_h", "k", "ell")
        out = {"name": "compose_cover_prob",
               "value": compose_cover_prob(args.p_c, args.p_h, args.k, args.ell),
               "inputs": {"p_c": args.p_c, "p_h": args.p_h, "k": args.k, "ell": args.ell}}
    else:
        if name == "baby_matthews":
            _need(args, "h_max", "n", "k")
            rep = baby_matthews_upper(args.h_max, args.n, args.k)
        elif name == "kspeed":
            _need(args, "cover", "h_max", "k")
            rep = kspeed_upper(args.cover, args.h_max, args.k, args.f_val, args.eps)
        elif name == "expander_hit":
            _need(args, "n", "d", "lam")
            rep = expander_hit_lower(args.n, args.d, args.lam)
        elif name == "expander_budget":
            _need(args, "n", "d", "lam", "k")
            rep = expander_walk_budget(args.n, args.d, args.lam, args.k)
        elif name == "cycle":
            _need(args, "n", "k")
            rep = cycle_bounds(args.n, args.k)
        elif name == "grid":
            _need(args, "n", "k")
            rep = grid_lower(args.n, int(args.d or 2), args.k)
        else:
            _need(args, "k", "t_m", "n")
            rep = mixing_speedup_lower(args.k, args.t_m, args.n)
        out = rep.to_json()
    _write(args, _dump(out))
    return EXIT_OK


def _cmd_compose(args) -> int:
    g = _load_graph(args.graph)
    rep = run_composition_check(g, args.t_c, args.t_h, args.k, args.ell, args.trials,
                                args.seed, args.start)
    _write(args, rep.render(args.format))
    return EXIT_FAIL if rep.failures() else EXIT_OK


def _load_config(args) -> ExperimentConfig:
    try:
        raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(f"cannot read config {args.config!r}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{args.config}: invalid JSON: {exc}") from None
    if args.seed is not None:
        for sc in raw.get("scenarios", []):
            sc["seed"] = args.seed
    return ExperimentConfig.from_json(raw)


def _cmd_table(args) -> int:
    cfg = _load_config(args)
    runner = run_table1 if args.command == "table1" else run_conjecture_scan
    rep = runner(cfg, resolve_workers(args.workers))
    _write(args, rep.render(args.format or cfg.format))
    fails = rep.failures()
    for f in fails:
        log.error("soundness check failed: %s", f)
    return EXIT_FAIL if fails else EXIT_OK


def _cmd_barbell(args) -> int:
    rep = run_barbell(args.n, args.trials, args.seed, workers=resolve_workers(args.workers))
    _write(args, rep.render(args.format))
    fails = rep.failures()
    for f in fails:
        log.error("check failed: %s", f)
    return EXIT_FAIL if fails else EXIT_OK


COMMANDS = {"gen": _cmd_gen, "cover": _cmd_cover, "hit": _cmd_hit, "mix": _cmd_mix,
            "bounds": _cmd_bounds, "compose": _cmd_compose, "table1": _cmd_table,
            "scan": _cmd_table, "barbell": _cmd_barbell}


def main(argv: list[str] | None = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError, GraphError, ValueError) as exc:
        print(f"kwalk {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
