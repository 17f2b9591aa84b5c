"""Compile the bottleneck and reuniclus protocols into per-party timetables."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Mapping

from .swapgraph import (
    Arc,
    DistanceTable,
    ReuniclusDecomposition,
    SwapDigraph,
    bottleneck_vertices,
    compute_distances,
    is_acyclic,
    is_strongly_connected,
    NotStronglyConnected,
    reuniclus_decompose,
    single_component,
)


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class TimedAction:
    """One step of a party's program.

    ``kind`` is ``pair``, ``verify``, ``create`` or ``claim``.  A create copies
    the common hashlock of ``hashlock_from`` (incoming arcs) or, when that is
    empty, uses the party's own.  A claim uses the secret revealed by any
    claimed arc in ``secret_from`` (outgoing arcs) or, when empty, its own.
    A verify checks that ``arcs`` exist with their scheduled timeouts, that
    ``own_arcs`` carry the party's hashlock and that ``uniform_arcs`` share one.
    A claim with ``secret_from`` aborts when none of those arcs was claimed;
    otherwise it unlocks ``own_arcs`` with the party's secret and the rest
    with the learned one.
    """

    time: int
    party: str
    kind: str
    arc: Arc | None = None
    arcs: tuple[Arc, ...] = ()
    hashlock_owner: str | None = None
    timeout: int | None = None
    hashlock_from: tuple[Arc, ...] = ()
    secret_from: tuple[Arc, ...] = ()
    own_arcs: tuple[Arc, ...] = ()
    uniform_arcs: tuple[Arc, ...] = ()


@dataclass(frozen=True)
class Schedule:
    graph: SwapDigraph
    protocol: str
    leader: str
    per_party: Mapping[str, tuple[TimedAction, ...]]
    hashlock_owner: Mapping[Arc, str]
    timeout: Mapping[Arc, int]
    create_time: Mapping[Arc, int]
    decomposition: ReuniclusDecomposition | None = None
    distances: DistanceTable | None = None
    anchor: int = 0  # D* or B*

    @property
    def protectors(self) -> frozenset[str]:
        return frozenset(self.hashlock_owner.values())

    def claim_time(self, party: str) -> int | None:
        times = [a.time for a in self.per_party[party] if a.kind == "claim"]
        return min(times) if times else None

    def actions(self):
        for p in sorted(self.per_party):
            yield from self.per_party[p]

    def max_timeout(self) -> int:
        return max(self.timeout.values())

    def export(self) -> list[dict]:
        """Flat rows ordered by (time, party, arc)."""
        rows = []
        for a in self.actions():
            arcs = [a.arc] if a.arc else list(a.arcs) or [None]
            for arc in arcs:
                rows.append({
                    "party": a.party,
                    "time": a.time,
                    "action": a.kind,
                    "arc": list(arc) if arc else None,
                    "hashlockOwner": self.hashlock_owner.get(arc) if arc else a.party,
                    "timeout": self.timeout.get(arc) if arc else None,
                })
        kind_rank = {"pair": 0, "verify": 1, "create": 2, "claim": 3}
        rows.sort(key=lambda r: (r["time"], r["party"], kind_rank[r["action"]], r["arc"] or []))
        return rows

    def to_json(self) -> dict:
        out = {
            "protocol": self.protocol,
            "leader": self.leader,
            "anchor": self.anchor,
            "actions": self.export(),
            "timeouts": {f"{u}->{v}": t for (u, v), t in sorted(self.timeout.items())},
            "create_times": {f"{u}->{v}": t for (u, v), t in sorted(self.create_time.items())},
            "hashlock_owners": {f"{u}->{v}": x for (u, v), x in sorted(self.hashlock_owner.items())},
        }
        if self.distances is not None:
            out["distances"] = self.distances.to_json()
        if self.decomposition is not None:
            out["decomposition"] = self.decomposition.to_json()
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def _assemble(g, protocol, leader, actions, owner, timeout, created, dec, dist, anchor):
    per_party = {v: [] for v in g.vertices}
    for a in actions:
        per_party[a.party].append(a)
    order = {"pair": 0, "verify": 1, "create": 2, "claim": 3}
    per_party = {
        v: tuple(sorted(acts, key=lambda a: (a.time, order[a.kind], a.arc or ())))
        for v, acts in per_party.items()
    }
    return Schedule(g, protocol, leader, per_party, owner, timeout, created, dec, dist, anchor)


def compile_bdp(g: SwapDigraph, leader: str) -> Schedule:
    """Single-hashlock timetable for a bottleneck digraph."""
    if not g.arcs or not is_strongly_connected(g):
        raise NotStronglyConnected("swap digraph must be strongly connected")
    if leader not in bottleneck_vertices(g):
        raise ScheduleError(f"{leader!r} is not a bottleneck vertex")
    dec = single_component(g, leader)
    dist = compute_distances(g, dec)
    d_star = dist.d_star
    timeout = {(u, v): d_star + dist.d_to[v] for u, v in g.arcs}
    created = {(u, v): dist.d_from[u] for u, v in g.arcs}
    owner = {a: leader for a in g.arcs}
    acts = [TimedAction(0, leader, "pair")]
    for a in g.out_arcs(leader):
        acts.append(TimedAction(0, leader, "create", arc=a, hashlock_owner=leader, timeout=timeout[a]))
    incoming = g.in_arcs(leader)
    acts.append(TimedAction(d_star, leader, "verify", arcs=incoming, own_arcs=incoming))
    acts.append(TimedAction(d_star, leader, "claim", arcs=incoming))
    for u in g.vertices:
        if u == leader:
            continue
        inc, out = g.in_arcs(u), g.out_arcs(u)
        t = dist.d_from[u]
        acts.append(TimedAction(t, u, "verify", arcs=inc, uniform_arcs=inc))
        for a in out:
            acts.append(TimedAction(t, u, "create", arc=a, hashlock_owner=leader,
                                    timeout=timeout[a], hashlock_from=inc))
        acts.append(TimedAction(d_star + dist.d_to[u], u, "claim", arcs=inc, secret_from=out))
    return _assemble(g, "bdp", leader, acts, owner, timeout, created, dec, dist, d_star)


def compile_rdp(g: SwapDigraph, dec: ReuniclusDecomposition | None = None) -> Schedule:
    """Hierarchical timetable: one hashlock per bottleneck component."""
    if dec is None:
        dec = reuniclus_decompose(g)
    dist = compute_distances(g, dec)
    ell = dec.leader
    b_star = dist.b_star
    timeout = {(u, v): b_star + dist.d_to[v] for u, v in g.arcs}
    owner = {a: dec.component_of_arc(a) for a in g.arcs}
    created = {a: (0 if dec.is_bottleneck_arc(a) else dist.d_sub[a[0]]) for a in g.arcs}
    acts = []
    for b in dec.bottlenecks:
        acts.append(TimedAction(0, b, "pair"))
        for a in g.out_arcs(b):
            if dec.is_bottleneck_arc(a):
                acts.append(TimedAction(0, b, "create", arc=a, hashlock_owner=b, timeout=timeout[a]))
    incoming = g.in_arcs(ell)
    acts.append(TimedAction(b_star, ell, "verify", arcs=incoming, own_arcs=incoming))
    acts.append(TimedAction(b_star, ell, "claim", arcs=incoming))
    for b in dec.bottlenecks[1:]:
        home = dec.home[b]
        inc = g.in_arcs(b)
        home_in = tuple(a for a in inc if a[0] in home)
        par_in = tuple(a for a in inc if a[0] not in home)
        par_out = tuple(a for a in g.out_arcs(b) if a[1] not in home)
        t = dist.d_sub[b]
        if not home_in or not par_in:
            raise ScheduleError(f"leader {b} lacks incoming arcs in one of its components")
        acts.append(TimedAction(t, b, "verify", arcs=inc, own_arcs=home_in, uniform_arcs=par_in))
        for a in par_out:
            acts.append(TimedAction(t, b, "create", arc=a, hashlock_owner=owner[a],
                                    timeout=timeout[a], hashlock_from=par_in))
        tc = b_star + dist.d_to[b]
        acts.append(TimedAction(tc, b, "claim", arcs=inc, secret_from=par_out, own_arcs=home_in))
    for u in g.vertices:
        if u in dec.home:
            continue
        inc, out = g.in_arcs(u), g.out_arcs(u)
        t = dist.d_sub[u]
        acts.append(TimedAction(t, u, "verify", arcs=inc, uniform_arcs=inc))
        for a in out:
            acts.append(TimedAction(t, u, "create", arc=a, hashlock_owner=owner[a],
                                    timeout=timeout[a], hashlock_from=inc))
        acts.append(TimedAction(b_star + dist.d_to[u], u, "claim", arcs=inc, secret_from=out))
    return _assemble(g, "rdp", ell, acts, owner, timeout, created, dec, dist, b_star)


def compile_naive(g: SwapDigraph, leader: str) -> Schedule:
    """Single-hashlock timetable forced onto an arbitrary strongly connected digraph.

    Arcs closing a cycle in a lexicographic depth-first search from ``leader``
    are ignored when computing creation times and distances, so the program
    stays live, and each follower only verifies incoming contracts scheduled
    before its own creation step.  On a bottleneck digraph with ``leader`` as
    bottleneck this coincides with :func:`compile_bdp`.
    """
    if not g.arcs or not is_strongly_connected(g):
        raise NotStronglyConnected("swap digraph must be strongly connected")
    back = set()
    state = {}

    def dfs(u):
        state[u] = "open"
        for w in g.out_nbrs[u]:
            if w not in state:
                dfs(w)
            elif state[w] == "open":
                back.add((u, w))
        state[u] = "done"

    dfs(leader)
    kept = [a for a in g.sorted_arcs if a not in back or a[1] == leader]
    # leader split: its incoming arcs end at a separate sink
    d_from = {leader: 0}
    order = _topo([v for v in g.vertices if v != leader], [a for a in kept if leader not in a])
    for v in order:
        preds = [u for u, w in kept if w == v]
        d_from[v] = max(d_from[u] for u in preds) + 1
    d_star = max(d_from[u] for u, w in kept if w == leader) + 1
    d_to = {leader: 0}
    for v in reversed(order):
        succs = [w for u, w in kept if u == v]
        if not succs:
            raise ScheduleError(f"{v} has no usable outgoing arc")
        d_to[v] = max(d_to[w] for w in succs) + 1
    timeout = {(u, v): d_star + d_to[v] for u, v in g.arcs}
    created = {(u, v): d_from[u] for u, v in g.arcs}
    owner = {a: leader for a in g.arcs}
    acts = [TimedAction(0, leader, "pair")]
    for a in g.out_arcs(leader):
        acts.append(TimedAction(0, leader, "create", arc=a, hashlock_owner=leader, timeout=timeout[a]))
    incoming = g.in_arcs(leader)
    acts.append(TimedAction(d_star, leader, "verify", arcs=incoming, own_arcs=incoming))
    acts.append(TimedAction(d_star, leader, "claim", arcs=incoming))
    for u in g.vertices:
        if u == leader:
            continue
        t = d_from[u]
        inc = tuple(a for a in g.in_arcs(u) if created[a] < t)
        out = g.out_arcs(u)
        acts.append(TimedAction(t, u, "verify", arcs=inc, uniform_arcs=inc))
        for a in out:
            acts.append(TimedAction(t, u, "create", arc=a, hashlock_owner=leader,
                                    timeout=timeout[a], hashlock_from=inc))
        acts.append(TimedAction(d_star + d_to[u], u, "claim", arcs=g.in_arcs(u), secret_from=out))
    return _assemble(g, "naive", leader, acts, owner, timeout, created, None, None, d_star)


def _topo(nodes, arcs):
    indeg = {v: 0 for v in nodes}
    for _, w in arcs:
        indeg[w] += 1
    ready = sorted(v for v in nodes if indeg[v] == 0)
    out = []
    while ready:
        v = ready.pop(0)
        out.append(v)
        for u, w in arcs:
            if u == v:
                indeg[w] -= 1
                if indeg[w] == 0:
                    ready.append(w)
        ready.sort()
    if len(out) != len(nodes):
        raise ScheduleError("depth-first pruning left a cycle")
    return out


def build_schedule(g: SwapDigraph, protocol: str = "rdp", leader: str | None = None) -> Schedule:
    if protocol == "rdp":
        return compile_rdp(g, reuniclus_decompose(g, root=leader))
    if protocol == "bdp":
        if leader is None:
            leader = min(bottleneck_vertices(g), default=None)
            if leader is None:
                raise ScheduleError("digraph has no bottleneck vertex")
        return compile_bdp(g, leader)
    if protocol == "naive":
        return compile_naive(g, leader if leader is not None else g.vertices[0])
    raise ValueError(f"unknown protocol {protocol!r}")


def with_timeout(s: Schedule, arc: Arc, timeout: int) -> Schedule:
    """Copy of ``s`` with one contract's timeout changed everywhere it appears."""
    per_party = {
        p: tuple(replace(a, timeout=timeout) if a.kind == "create" and a.arc == arc else a for a in acts)
        for p, acts in s.per_party.items()
    }
    return replace(s, per_party=per_party, timeout={**s.timeout, arc: timeout})


def with_create_time(s: Schedule, arc: Arc, time: int) -> Schedule:
    """Copy of ``s`` with one contract created at a different step."""
    per_party = {
        p: tuple(replace(a, time=time) if a.kind == "create" and a.arc == arc else a for a in acts)
        for p, acts in s.per_party.items()
    }
    return replace(s, per_party=per_party, create_time={**s.create_time, arc: time})


# ---------------------------------------------------------------------------
# invariants


@dataclass
class ScheduleReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {"ok": self.ok, "violations": list(self.violations)}


def validate_schedule_invariants(g: SwapDigraph, dec: ReuniclusDecomposition | None, s: Schedule) -> ScheduleReport:
    rep = ScheduleReport()
    bad = rep.violations
    arcs = set(g.arcs)
    for name, table in (("hashlock owner", s.hashlock_owner), ("timeout", s.timeout), ("creation time", s.create_time)):
        if set(table) != arcs:
            bad.append(f"{name} table does not cover every arc exactly once")
            return rep
    own, tau, made = s.hashlock_owner, s.timeout, s.create_time
    for a in g.sorted_arcs:
        if made[a] >= tau[a]:
            bad.append(f"{a}: creation step {made[a]} is not before timeout {tau[a]}")

    # creation times increase / timeouts decrease across every non-seller-protected hop
    for v in g.vertices:
        for a_in in g.in_arcs(v):
            for a_out in g.out_arcs(v):
                if own[a_out] == v:
                    continue
                if not made[a_in] < made[a_out]:
                    bad.append(f"creation order {a_in}@{made[a_in]} -> {a_out}@{made[a_out]} not increasing")
                if not tau[a_in] > tau[a_out]:
                    bad.append(f"timeouts {a_in}:{tau[a_in]} -> {a_out}:{tau[a_out]} not decreasing")

    # every cycle holds a contract protected by its seller
    loose = SwapDigraph(g.vertices, frozenset(a for a in g.arcs if own[a] != a[0]))
    if not is_acyclic(loose):
        bad.append("some cycle has no contract protected by its seller")

    for v in g.vertices:
        inc, out = g.in_arcs(v), g.out_arcs(v)
        in_by = {own[a] for a in inc}
        out_by = {own[a] for a in out}
        if in_by != out_by:
            bad.append(f"{v}: protectors of incoming {sorted(in_by)} differ from outgoing {sorted(out_by)}")
        others = (in_by | out_by) - {v}
        if len(others) > 1:
            bad.append(f"{v}: contracts protected by several other parties {sorted(others)}")
        for x in others:
            hi = max((tau[a] for a in out if own[a] == x), default=None)
            lo = min(tau[a] for a in inc)
            if hi is not None and hi >= lo:
                bad.append(f"{v}: outgoing timeout {hi} protected by {x} is not below incoming timeout {lo}")
        mine_in = [tau[a] for a in inc if own[a] == v]
        mine_out = [tau[a] for a in out if own[a] == v]
        if (mine_in or mine_out) and not (mine_in and mine_out and min(mine_in) < min(mine_out)):
            bad.append(f"{v}: no own-protected incoming timeout below all own-protected outgoing ones")

    # conforming parties claim exactly at the incoming timeout
    for v in g.vertices:
        claims = {a: act.time for act in s.per_party[v] if act.kind == "claim" for a in act.arcs}
        for a in g.in_arcs(v):
            if claims.get(a) != tau[a]:
                bad.append(f"{v} claims {a} at {claims.get(a)} but its timeout is {tau[a]}")

    pairs = [act.party for act in s.actions() if act.kind == "pair"]
    if len(pairs) != len(set(pairs)):
        bad.append("a party creates more than one secret pair")
    if set(pairs) != set(own.values()):
        bad.append(f"secret pairs {sorted(set(pairs))} differ from protecting parties {sorted(set(own.values()))}")

    if dec is not None and len(dec.bottlenecks) > 1:
        for b in dec.bottlenecks[1:]:
            t_up = max(made[a] for a in g.out_arcs(b) if a[1] not in dec.home[b])
            below = {b, *dec.descendants(b)}
            inner = [made[a] for a in g.arcs if own[a] in below]
            if inner and not all(t < t_up for t in inner):
                bad.append(f"leader {b} creates parent-side contracts at {t_up}, not after its subtree")
    return rep
