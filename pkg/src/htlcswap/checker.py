"""Property suites over compiled schedules and simulated runs."""

from __future__ import annotations

import itertools
import json
import logging
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from . import behaviors as bh
from .engine import run
from .enumeration import random_strongly_connected, strongly_connected_digraphs
from .outcomes import DISCOUNT, FREE_RIDE, classify, classify_all
from .schedule import (
    Schedule,
    build_schedule,
    compile_rdp,
    validate_schedule_invariants,
    with_create_time,
    with_timeout,
)
from .swapgraph import (
    SwapDigraph,
    brute_force_reuniclus_oracle,
    format_digraph,
    is_reuniclus,
    parse_digraph,
    reuniclus_decompose,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Randomized:
    trials: int = 1000
    seed: int = 0
    coalition_size: int = 1
    budget: int = 3


@dataclass(frozen=True)
class Exhaustive:
    coalition_size: int = 1
    budget: int = 2


@dataclass
class CheckReport:
    name: str
    passed: bool
    instances: int = 0
    failures: int = 0
    seed: int | None = None
    runtime: float = 0.0
    counterexample: dict | None = None
    details: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def to_json(self) -> dict:
        return {
            "property": self.name,
            "verdict": self.verdict,
            "instances": self.instances,
            "failures": self.failures,
            "seed": self.seed,
            "runtime": round(self.runtime, 3),
            "details": self.details,
            "counterexample": self.counterexample,
        }


# verdicts --------------------------------------------------------------------

def judge(prop: str, trace, coalition=()) -> str | None:
    """None if the run satisfies ``prop``, else a reason."""
    if prop == "liveness":
        bad = {v: o.klass for v, o in classify_all(trace).items() if o.klass != "Deal"}
        return f"parties not in Deal: {bad}" if bad else None
    if prop == "safety":
        members = set(coalition)
        bad = {v: o.klass for v, o in classify_all(trace).items() if v not in members and not o.acceptable}
        return f"conforming parties Underwater: {sorted(bad)}" if bad else None
    if prop == "nogain":
        k = classify(trace, tuple(coalition)).klass
        return f"coalition {sorted(coalition)} ends {k}" if k in (DISCOUNT, FREE_RIDE) else None
    raise ValueError(f"unknown property {prop!r}")


# replay bundles -----------------------------------------------------------------

def _overrides(s: Schedule) -> dict:
    base = build_schedule(s.graph, s.protocol, s.leader)
    out = {}
    for name, mine, ref in (("timeout", s.timeout, base.timeout), ("create_time", s.create_time, base.create_time)):
        diff = {f"{u}->{v}": t for (u, v), t in sorted(mine.items()) if ref[(u, v)] != t}
        if diff:
            out[name] = diff
    return out


def schedule_from_bundle(b: dict) -> Schedule:
    g = parse_digraph(b["graph"])
    s = build_schedule(g, b["protocol"], b.get("leader"))
    for key, fn in (("timeout", with_timeout), ("create_time", with_create_time)):
        for arc, t in b.get("overrides", {}).get(key, {}).items():
            s = fn(s, tuple(arc.split("->")), t)
    return s


def make_bundle(s: Schedule, behaviors: dict, prop: str, coalition, seed, horizon, trace, reason) -> dict:
    return {
        "graph": format_digraph(s.graph),
        "protocol": s.protocol,
        "leader": s.leader,
        "overrides": _overrides(s),
        "behaviors": bh.behaviors_to_script(behaviors),
        "property": prop,
        "coalition": sorted(coalition),
        "seed": seed,
        "horizon": horizon,
        "verdict": "fail" if reason else "pass",
        "reason": reason,
        "trace_digest": trace.digest(),
    }


@dataclass
class ReplayResult:
    verdict: str
    reason: str | None
    trace_digest: str
    trace: object

    def matches(self, bundle: dict) -> bool:
        return self.verdict == bundle["verdict"] and self.trace_digest == bundle["trace_digest"]


def replay(bundle: dict) -> ReplayResult:
    s = schedule_from_bundle(bundle)
    behaviors = bh.behaviors_from_script(s, bundle["behaviors"])
    trace = run(s.graph, behaviors, bundle.get("horizon"))
    reason = judge(bundle["property"], trace, bundle.get("coalition", ()))
    return ReplayResult("fail" if reason else "pass", reason, trace.digest(), trace)


def dump_bundle(bundle: dict) -> str:
    return json.dumps(bundle, indent=2, sort_keys=True)


# liveness and invariants ---------------------------------------------------------

def _schedule_for(g, dec, protocol, leader, schedule):
    if schedule is not None:
        return schedule
    if protocol == "rdp":
        return compile_rdp(g, dec if dec is not None else reuniclus_decompose(g, root=leader))
    return build_schedule(g, protocol, leader)


def check_liveness(g: SwapDigraph, dec=None, protocol: str = "rdp", leader=None,
                   schedule: Schedule | None = None, claim_early: bool = False) -> CheckReport:
    t0 = time.perf_counter()
    s = _schedule_for(g, dec, protocol, leader, schedule)
    behaviors = bh.conforming_all(s, claim_early)
    trace = run(g, behaviors)
    reason = judge("liveness", trace)
    rep = CheckReport("liveness", reason is None, 1, 0 if reason is None else 1)
    rep.details = {"classes": {v: o.klass for v, o in classify_all(trace).items()}, "trace_digest": trace.digest()}
    if reason:
        rep.counterexample = make_bundle(s, behaviors, "liveness", (), None, trace.horizon, trace, reason)
    rep.runtime = time.perf_counter() - t0
    return rep


def trace_invariant_violations(trace, schedule: Schedule | None = None) -> list[str]:
    bad = []
    creates = [e.step for e in trace.events if e.event == "create"]
    claims = [e.step for e in trace.events if e.event == "claim"]
    if creates and claims and max(creates) >= min(claims):
        bad.append(f"claim at step {min(claims)} does not follow the last creation at step {max(creates)}")
    steps = [e.step for e in trace.events]
    if steps != sorted(steps):
        bad.append("events are not ordered by step")
    w = trace.final
    for arc in w.graph.sorted_arcs:
        if w.holder(arc) not in arc:
            bad.append(f"asset {arc} ends with {w.holder(arc)}")
    # every secret is owned, revealed by a claim on a sold contract, or shared
    sources = {(v, f"s:{v}") for v in w.graph.vertices}
    for e in trace.events:
        if e.event == "claim":
            sources.add((e.arc[0], e.detail["secret"]))
        elif e.event == "share":
            sources.add((e.detail["to"], e.detail["secret"]))
    for v, known in w.knowledge.items():
        for s_ in known:
            if (v, s_) not in sources:
                bad.append(f"{v} knows {s_} without a source")
    if schedule is not None:
        for e in trace.events:
            if e.event == "create":
                if e.step != schedule.create_time[e.arc]:
                    bad.append(f"{e.arc} created at {e.step}, scheduled {schedule.create_time[e.arc]}")
                if e.detail["timeout"] <= e.step:
                    bad.append(f"{e.arc} created at {e.step} with timeout {e.detail['timeout']}")
            elif e.event == "claim" and e.step > schedule.timeout[e.arc]:
                bad.append(f"{e.arc} claimed at {e.step} after timeout")
        made = {e.arc: e.step for e in trace.events if e.event == "create"}
        g, own = w.graph, schedule.hashlock_owner
        for v in g.vertices:
            for a in g.in_arcs(v):
                for b in g.out_arcs(v):
                    if own[b] != v and a in made and b in made and made[a] >= made[b]:
                        bad.append(f"realized creations {a}@{made[a]} and {b}@{made[b]} not increasing")
    return bad


def check_trace_invariants(trace, schedule: Schedule | None = None) -> CheckReport:
    t0 = time.perf_counter()
    bad = trace_invariant_violations(trace, schedule)
    return CheckReport("invariants", not bad, 1, len(bad), runtime=time.perf_counter() - t0,
                       details={"violations": bad})


def check_schedule(g, dec=None, protocol="rdp", leader=None, schedule=None) -> CheckReport:
    """Static schedule invariants plus the invariants of its conforming trace."""
    t0 = time.perf_counter()
    s = _schedule_for(g, dec, protocol, leader, schedule)
    bad = validate_schedule_invariants(g, s.decomposition, s).violations
    bad = bad + trace_invariant_violations(run(g, bh.conforming_all(s)), s)
    return CheckReport("invariants", not bad, 1, len(bad), runtime=time.perf_counter() - t0,
                       details={"violations": bad})


# adversarial sweeps -----------------------------------------------------------------

def _coalitions(g, size):
    vs = g.vertices
    out = []
    for k in range(1, min(size, len(vs) - 1) + 1):
        out.extend(itertools.combinations(vs, k))
    return out


def _tasks(s: Schedule, mode, coalitions):
    if isinstance(mode, Exhaustive):
        for c in coalitions:
            for devs in bh.adversary_space(s, c, mode.budget):
                yield c, None, devs
    else:
        rng = random.Random(mode.seed)
        for _ in range(mode.trials):
            c = coalitions[rng.randrange(len(coalitions))]
            yield c, rng.getrandbits(64), None


def _adversary(s, c, seed, devs, budget):
    return bh.random_adversary(s, seed, c, budget) if devs is None else bh.with_deviations(s, devs)


def _evaluate_chunk(args):
    s, props, chunk, budget = args
    results = []
    for c, seed, devs in chunk:
        trace = run(s.graph, _adversary(s, c, seed, devs, budget))
        results.append({p: judge(p, trace, c) for p in props})
    return results


def _chunks(seq, n):
    for i in range(0, len(seq), n):
        yield seq[i:i + n]


def sweep(s: Schedule, mode, props=("safety", "nogain"), coalitions=None, workers: int = 1,
          chunk_size: int = 500) -> dict[str, CheckReport]:
    """Run one adversary sweep and judge every run against each property.

    Tasks are fixed up front and results are gathered in task order, so the
    reports do not depend on ``workers``.
    """
    t0 = time.perf_counter()
    if coalitions is None:
        coalitions = _coalitions(s.graph, mode.coalition_size)
    coalitions = [tuple(sorted(c)) for c in coalitions]
    tasks = list(_tasks(s, mode, coalitions))
    budget = mode.budget
    jobs = [(s, props, ch, budget) for ch in _chunks(tasks, chunk_size)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_evaluate_chunk, jobs))
    else:
        parts = [_evaluate_chunk(j) for j in jobs]
    results = [r for part in parts for r in part]
    seed = getattr(mode, "seed", None)
    reports = {}
    for p in props:
        failed = [i for i, r in enumerate(results) if r[p] is not None]
        rep = CheckReport(p, not failed, len(results), len(failed), seed)
        rep.details = {"mode": type(mode).__name__.lower(), "coalitions": [list(c) for c in coalitions]}
        if failed:
            c, tseed, devs = tasks[failed[0]]
            behaviors = _adversary(s, c, tseed, devs, budget)
            trace = run(s.graph, behaviors)
            rep.counterexample = make_bundle(s, behaviors, p, c, tseed, trace.horizon, trace, results[failed[0]][p])
        reports[p] = rep
    elapsed = time.perf_counter() - t0
    for rep in reports.values():
        rep.runtime = elapsed
    return reports


def check_safety(g, dec=None, mode=Exhaustive(), protocol="rdp", leader=None, schedule=None,
                 coalitions=None, workers=1) -> CheckReport:
    s = _schedule_for(g, dec, protocol, leader, schedule)
    return sweep(s, mode, ("safety",), coalitions, workers)["safety"]


def check_coalition_no_gain(g, dec=None, coalitions=None, mode=Exhaustive(), protocol="rdp",
                            leader=None, schedule=None, workers=1) -> CheckReport:
    s = _schedule_for(g, dec, protocol, leader, schedule)
    return sweep(s, mode, ("nogain",), coalitions, workers)["nogain"]


# enumeration ---------------------------------------------------------------------------

def enumerate_and_crosscheck(n: int, samples: int = 0, sample_size: int | None = None, seed: int = 0,
                             trials: int = 20, simulate: bool = True) -> CheckReport:
    """Compare the recognizer with the brute-force oracle on small digraphs.

    Every strongly connected digraph on 2..min(n, 5) vertices is checked up to
    isomorphism; ``samples`` extra random ones on ``sample_size`` vertices are
    added.  Reuniclus ones also get a liveness run and a short random safety
    sweep when ``simulate`` is set.
    """
    t0 = time.perf_counter()
    rng = random.Random(seed)
    graphs = [g for k in range(2, min(n, 5) + 1) for g in strongly_connected_digraphs(k)]
    if samples:
        size = sample_size or n
        graphs += [random_strongly_connected(rng, size) for _ in range(samples)]
    disagreements, accepted, failures = [], 0, []
    per_size: dict[int, list[int]] = {}
    for g in graphs:
        mine, oracle = is_reuniclus(g), brute_force_reuniclus_oracle(g)
        row = per_size.setdefault(len(g), [0, 0])
        row[0] += 1
        row[1] += mine
        if mine != oracle:
            disagreements.append(format_digraph(g))
            continue
        if not mine:
            continue
        accepted += 1
        if simulate:
            live = check_liveness(g)
            safe = check_safety(g, mode=Randomized(trials, rng.getrandbits(32)))
            for r in (live, safe):
                if not r.passed:
                    failures.append(r.counterexample)
    rep = CheckReport("enumerate", not disagreements and not failures, len(graphs),
                      len(disagreements) + len(failures), seed)
    rep.details = {
        "disagreements": disagreements,
        "reuniclus": accepted,
        "by_size": {str(k): {"strongly_connected": v[0], "reuniclus": v[1]} for k, v in sorted(per_size.items())},
    }
    if failures:
        rep.counterexample = failures[0]
    rep.runtime = time.perf_counter() - t0
    return rep
