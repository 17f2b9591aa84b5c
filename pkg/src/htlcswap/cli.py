"""Command-line entry point.

Exit codes: 0 success, 1 input or usage error, 2 rejection or failed check.
JSON goes to stdout; the log, the seed and a replay line go to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import shlex
import sys

from . import behaviors as bh
from . import checker
from .clearing import ClearingRejected, clear, parse_orders
from .engine import run
from .outcomes import classify, classify_all
from .schedule import ScheduleError, build_schedule, validate_schedule_invariants
from .swapgraph import (
    GraphFormatError,
    NotReuniclus,
    NotStronglyConnected,
    bottleneck_vertices,
    format_digraph,
    parse_digraph,
    reuniclus_decompose,
)

log = logging.getLogger("htlcswap")

HORIZON_ENV = "HTLCSWAP_HORIZON"


class InputError(Exception):
    pass


class Rejected(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _read(path):
    try:
        with open(path) as f:
            return f.read()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None


def _graph(path):
    try:
        return parse_digraph(_read(path))
    except GraphFormatError as e:
        raise InputError(f"{path}: {e}") from None


def _emit(obj):
    print(json.dumps(obj, indent=2))


def _schedule(g, protocol, leader):
    try:
        return build_schedule(g, protocol, leader)
    except (NotReuniclus, NotStronglyConnected, ScheduleError) as e:
        raise Rejected(str(e)) from None


def cmd_recognize(args):
    g = _graph(args.graph)
    try:
        dec = reuniclus_decompose(g, root=args.root)
    except (NotReuniclus, NotStronglyConnected) as e:
        _emit({"reuniclus": False, "reason": str(e)})
        raise Rejected(str(e)) from None
    out = {"reuniclus": True, "decomposition": dec.to_json(),
           "bottleneck_vertices": sorted(bottleneck_vertices(g))}
    _emit(out)
    return 0


def cmd_schedule(args):
    g = _graph(args.graph)
    s = _schedule(g, args.protocol, args.leader)
    out = s.to_json()
    out["invariants"] = validate_schedule_invariants(g, s.decomposition, s).to_json()
    _emit(out)
    if args.figure:
        from .plotting import plot_schedule
        plot_schedule(s, args.figure)
        log.info("wrote %s", args.figure)
    return 0


def _default_horizon(value):
    if value is not None:
        return value
    env = os.environ.get(HORIZON_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise InputError(f"{HORIZON_ENV} must be an integer, got {env!r}") from None
    return None


def cmd_simulate(args):
    if args.replay:
        try:
            bundle = json.loads(_read(args.replay))
            res = checker.replay(bundle)
        except (ValueError, KeyError) as e:
            raise InputError(f"{args.replay}: bad replay bundle: {e}") from None
        ok = res.matches(bundle)
        _emit({"verdict": res.verdict, "reason": res.reason, "trace_digest": res.trace_digest,
               "expected_verdict": bundle["verdict"], "expected_digest": bundle["trace_digest"],
               "matches": ok})
        if args.figure:
            from .plotting import plot_trace
            plot_trace(res.trace, args.figure)
        if not ok:
            raise Rejected("replay diverged from the bundle")
        return 0
    if not args.graph:
        raise InputError("simulate needs a graph file or --replay")
    g = _graph(args.graph)
    s = _schedule(g, args.protocol, args.leader)
    if args.behaviors:
        try:
            behaviors = bh.load_script(s, _read(args.behaviors))
        except ValueError as e:
            raise InputError(f"{args.behaviors}: {e}") from None
    elif args.coalition:
        members = args.coalition.split(",")
        if not set(members) <= set(g.vertices):
            raise InputError(f"unknown coalition members {sorted(set(members) - set(g.vertices))}")
        behaviors = bh.random_adversary(s, args.seed, members, args.budget)
    else:
        behaviors = bh.conforming_all(s, args.claim_early)
    trace = run(g, behaviors, _default_horizon(args.horizon))
    sys.stdout.write(trace.to_jsonl())
    report = {
        "outcomes": [o.to_json() for o in classify_all(trace).values()],
        "trace_digest": trace.digest(),
        "horizon": trace.horizon,
        "behaviors": bh.behaviors_to_script(behaviors),
    }
    if args.coalition:
        report["coalition"] = classify(trace, tuple(args.coalition.split(","))).to_json()
    print(json.dumps(report))
    if args.figure:
        from .plotting import plot_trace
        plot_trace(trace, args.figure)
        log.info("wrote %s", args.figure)
    return 0


def cmd_check(args):
    suite = args.suite
    if suite == "enumerate":
        rep = checker.enumerate_and_crosscheck(args.n, samples=args.samples, seed=args.seed,
                                               trials=args.trials if args.trials else 20)
        return _report(rep, args)
    if not args.graph:
        raise InputError(f"suite {suite} needs a graph file")
    g = _graph(args.graph)
    s = _schedule(g, args.protocol, args.leader)
    if suite == "liveness":
        rep = checker.check_liveness(g, schedule=s)
    elif suite == "invariants":
        rep = checker.check_schedule(g, schedule=s)
    else:
        if args.exhaustive:
            mode = checker.Exhaustive(args.coalition_size, args.budget)
        else:
            mode = checker.Randomized(args.trials or 1000, args.seed, args.coalition_size, args.budget)
        rep = checker.sweep(s, mode, (suite,), workers=args.workers)[suite]
    return _report(rep, args)


def _report(rep, args):
    _emit(rep.to_json())
    if rep.counterexample and args.bundle_out:
        with open(args.bundle_out, "w") as f:
            f.write(checker.dump_bundle(rep.counterexample))
        log.info("replay bundle written to %s", args.bundle_out)
    if not rep.passed:
        raise Rejected(f"{rep.name} check failed ({rep.failures} of {rep.instances})")
    return 0


def cmd_clear(args):
    try:
        orders = parse_orders(_read(args.orders))
    except ValueError as e:
        raise InputError(f"{args.orders}: {e}") from None
    try:
        result = clear(orders)
    except ClearingRejected as e:
        _emit({"cleared": False, "stage": e.stage, "reason": e.message})
        raise Rejected(str(e)) from None
    s = build_schedule(result.graph, "rdp")
    _emit({"cleared": True, "graph": format_digraph(result.graph), **result.to_json(), "schedule": s.to_json()})
    return 0


def build_parser():
    p = _Parser(prog="htlcswap", description="Simulate and check hashed-timelock multi-party swaps.")
    p.add_argument("--seed", type=int, default=0, help="64-bit seed for every random choice")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("recognize", help="decompose a swap digraph into bottleneck components")
    r.add_argument("graph")
    r.add_argument("--root", help="preferred main leader")
    r.set_defaults(func=cmd_recognize)

    def protocol_opts(q):
        q.add_argument("--protocol", choices=("bdp", "rdp", "naive"), default="rdp")
        q.add_argument("--leader")

    s = sub.add_parser("schedule", help="compile the per-party timetable")
    s.add_argument("graph")
    protocol_opts(s)
    s.add_argument("--figure", metavar="PATH", help="write a timeline plot")
    s.set_defaults(func=cmd_schedule)

    m = sub.add_parser("simulate", help="run one execution and classify outcomes")
    m.add_argument("graph", nargs="?")
    protocol_opts(m)
    m.add_argument("--behaviors", metavar="FILE", help="JSON behavior script")
    m.add_argument("--coalition", help="comma-separated parties driven by a random adversary")
    m.add_argument("--budget", type=int, default=2)
    m.add_argument("--horizon", type=int, help=f"last step (default: automatic, or ${HORIZON_ENV})")
    m.add_argument("--claim-early", action="store_true", help="claim as soon as an outgoing asset is claimed")
    m.add_argument("--replay", metavar="BUNDLE", help="re-run a checker replay bundle")
    m.add_argument("--figure", metavar="PATH", help="write a timeline plot")
    m.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    m.set_defaults(func=cmd_simulate)

    c = sub.add_parser("check", help="run a property suite")
    c.add_argument("graph", nargs="?")
    c.add_argument("--suite", choices=("liveness", "safety", "nogain", "invariants", "enumerate"), required=True)
    protocol_opts(c)
    c.add_argument("--exhaustive", action="store_true", help="enumerate adversaries instead of sampling")
    c.add_argument("--budget", type=int, default=2, help="deviations per adversary")
    c.add_argument("--coalition-size", type=int, default=1)
    c.add_argument("--trials", type=int, default=0)
    c.add_argument("--n", type=int, default=4, help="vertex bound for --suite enumerate")
    c.add_argument("--samples", type=int, default=0, help="extra random digraphs for --suite enumerate")
    c.add_argument("--workers", type=int, default=1)
    c.add_argument("--bundle-out", metavar="PATH", help="write the replay bundle of a failure")
    c.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    c.set_defaults(func=cmd_check)

    k = sub.add_parser("clear", help="build a swap digraph from orders")
    k.add_argument("orders")
    k.set_defaults(func=cmd_clear)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    print(f"seed={args.seed}", file=sys.stderr)
    replay_args = [a for a in argv if a != "--seed" and not a.startswith("--seed=")]
    if "--seed" in argv:
        i = argv.index("--seed")
        replay_args = argv[:i] + argv[i + 2:]
    print("replay: htlcswap " + shlex.join(["--seed", str(args.seed)] + replay_args), file=sys.stderr)
    try:
        return args.func(args)
    except InputError as e:
        log.error("%s", e)
        return 1
    except Rejected as e:
        log.error("%s", e)
        return 2


if __name__ == "__main__":
    sys.exit(main())
