"""End-to-end acceptance checks.

Each test prints one ``criterion N: PASS|FAIL ...`` line.  Run with
``pytest tests/test_acceptance.py -s -v`` to see them inline; they also show
under plain ``pytest -v`` because printing bypasses output capture.
"""

import random
import time

import pytest

from conftest import DIGON, DIGON_CHAIN, NON_REUNICLUS, THREE_CYCLE
from htlcswap.behaviors import conforming_all
from htlcswap.checker import (
    Exhaustive,
    Randomized,
    check_liveness,
    check_safety,
    enumerate_and_crosscheck,
    replay,
    sweep,
    trace_invariant_violations,
)
from htlcswap.engine import run
from htlcswap.enumeration import random_reuniclus, strongly_connected_digraphs
from htlcswap.schedule import build_schedule, compile_bdp, compile_rdp, validate_schedule_invariants
from htlcswap.swapgraph import (
    bottleneck_vertices,
    brute_force_reuniclus_oracle,
    format_digraph,
    is_bottleneck_digraph,
    is_reuniclus,
    parse_digraph,
)

SAMPLE_SEED = 2024
SAMPLES = 200


def _line(capsys, n, ok, text):
    with capsys.disabled():
        print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} {text}")


@pytest.fixture(scope="module")
def small():
    return [g for k in range(2, 5) for g in strongly_connected_digraphs(k) if is_reuniclus(g)]


@pytest.fixture(scope="module")
def samples():
    rng = random.Random(SAMPLE_SEED)
    return [random_reuniclus(rng, rng.randint(5, 8)) for _ in range(SAMPLES)]


def _schedules(small, samples):
    for g in small + samples:
        yield g, compile_rdp(g)
        if is_bottleneck_digraph(g):
            for b in sorted(bottleneck_vertices(g)):
                yield g, compile_bdp(g, b)


@pytest.fixture(scope="module")
def liveness_runs(small, samples):
    t0 = time.perf_counter()
    out = []
    for g, s in _schedules(small, samples):
        rep = check_liveness(g, schedule=s)
        trace = run(g, conforming_all(s))
        out.append((g, s, rep, trace))
    return out, time.perf_counter() - t0


@pytest.fixture(scope="module")
def adversary_sweeps(small, samples):
    """Exhaustive single-party budget-2 sweeps on the small graphs, randomized
    coalition sweeps on the samples; judged for safety and no-gain at once."""
    t0 = time.perf_counter()
    reports = []
    for g in small:
        reports.append((g, sweep(compile_rdp(g), Exhaustive(1, 2))))
        if is_bottleneck_digraph(g):
            for b in sorted(bottleneck_vertices(g)):
                reports.append((g, sweep(compile_bdp(g, b), Exhaustive(1, 2))))
    for i, g in enumerate(samples):
        reports.append((g, sweep(compile_rdp(g), Randomized(1000, SAMPLE_SEED + i, 2, 3))))
    return reports, time.perf_counter() - t0


def test_fixture_values(capsys):
    t0 = time.perf_counter()
    cyc = build_schedule(parse_digraph(THREE_CYCLE), "bdp", "l")
    dig = build_schedule(parse_digraph(DIGON), "bdp", "l")
    chain = build_schedule(parse_digraph(DIGON_CHAIN), "rdp")
    got = (
        cyc.distances.d_star, [cyc.timeout[a] for a in [("l", "a"), ("a", "b"), ("b", "l")]],
        dig.distances.d_star, [dig.timeout[a] for a in [("l", "v"), ("v", "l")]],
        chain.distances.b_star, chain.timeout,
    )
    want = (
        3, [5, 4, 3],
        2, [3, 2],
        3, {("b", "a"): 3, ("a", "b"): 4, ("c", "b"): 4, ("b", "c"): 5},
    )
    dt = time.perf_counter() - t0
    ok = got == want and dt < 1
    _line(capsys, 1, ok, f"fixture D*/B*/timeouts exact ({dt:.3f}s)")
    assert got == want and dt < 1


def test_liveness(capsys, liveness_runs, small, samples):
    runs, dt = liveness_runs
    fails = [format_digraph(g) for g, s, rep, _ in runs if not rep.passed]
    ok = not fails and dt < 60 and len(samples) >= 200
    _line(capsys, 2, ok, f"{len(runs)} conforming runs on {len(small)} small + {len(samples)} sampled graphs, "
                         f"{len(fails)} not all-Deal ({dt:.1f}s)")
    assert ok, fails[:3]


def test_safety(capsys, adversary_sweeps):
    reports, dt = adversary_sweeps
    runs = sum(r["safety"].instances for _, r in reports)
    fails = [r["safety"].counterexample for _, r in reports if not r["safety"].passed]
    ok = not fails and dt < 600
    _line(capsys, 3, ok, f"{runs} adversarial runs over {len(reports)} schedules, {len(fails)} with an Underwater "
                         f"conforming party ({dt:.1f}s)")
    assert ok, fails[:1]


def test_coalition_no_gain(capsys, adversary_sweeps):
    reports, _ = adversary_sweeps
    runs = sum(r["nogain"].instances for _, r in reports)
    fails = [r["nogain"].counterexample for _, r in reports if not r["nogain"].passed]
    _line(capsys, 4, not fails, f"{runs} adversarial runs, {len(fails)} schedules with a Discount/FreeRide coalition")
    assert not fails, fails[:1]


def test_invariants(capsys, liveness_runs):
    runs, _ = liveness_runs
    bad = []
    for g, s, _, trace in runs:
        bad += [f"{format_digraph(g)!r}: {v}" for v in validate_schedule_invariants(g, s.decomposition, s).violations]
        bad += [f"{format_digraph(g)!r}: {v}" for v in trace_invariant_violations(trace, s)]
    _line(capsys, 5, not bad, f"{len(runs)} schedules and conforming traces, {len(bad)} invariant violations")
    assert not bad, bad[:3]


def test_characterization_crosscheck(capsys):
    t0 = time.perf_counter()
    rep = enumerate_and_crosscheck(4, samples=500, sample_size=5, seed=SAMPLE_SEED, simulate=False)
    fixture = parse_digraph(NON_REUNICLUS)
    rejected = not is_reuniclus(fixture) and not brute_force_reuniclus_oracle(fixture)
    dt = time.perf_counter() - t0
    ok = rep.passed and rejected and dt < 300
    _line(capsys, 6, ok, f"{rep.instances} digraphs, {len(rep.details['disagreements'])} disagreements, "
                         f"fixture rejected by both: {rejected} ({dt:.1f}s)")
    assert ok


def test_negative_evidence(capsys):
    g = parse_digraph(NON_REUNICLUS)
    rep = check_safety(g, mode=Exhaustive(1, 2), protocol="naive", leader="a")
    bundle = rep.counterexample
    res = replay(bundle) if bundle else None
    ok = not rep.passed and res is not None and res.matches(bundle) and "Underwater" in bundle["reason"]
    _line(capsys, 7, ok, f"{rep.failures} of {rep.instances} adversaries break the single-hashlock schedule; "
                         f"first: {bundle['reason'] if bundle else None}")
    assert ok


def test_determinism(capsys):
    g = parse_digraph(NON_REUNICLUS)
    s = build_schedule(g, "naive", "a")
    reports = {w: sweep(s, Exhaustive(1, 2), ("safety",), workers=w)["safety"] for w in (1, 2, 3)}
    bundles = [r.counterexample for r in reports.values()]
    same_bundle = all(b == bundles[0] for b in bundles)
    same_counts = len({(r.failures, r.instances) for r in reports.values()}) == 1
    replays = [replay(bundles[0]) for _ in range(3)]
    same_replay = all(r.verdict == bundles[0]["verdict"] and r.trace_digest == bundles[0]["trace_digest"]
                      for r in replays)
    ok = same_bundle and same_counts and same_replay
    _line(capsys, 8, ok, f"workers 1/2/3 agree: {same_bundle and same_counts}; 3 replays identical: {same_replay}")
    assert ok
