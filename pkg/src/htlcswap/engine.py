"""Discrete-time execution of parties trading through hashed timelock contracts.

Each step runs in phases: control (aborts), secrets (pair creation and
sharing), creations, claims, expiry.  Agents decide at the start of a step
from the state left by the previous one, so anything learned during step t
becomes usable at t+1.  Illegal attempts are recorded as rejected events.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Mapping

from .swapgraph import Arc, SwapDigraph

PHASES = ("control", "secrets", "create", "claim", "expiry")
_PHASE_RANK = {p: i for i, p in enumerate(PHASES)}


def secret_of(party: str) -> str:
    return f"s:{party}"


def hash_secret(secret: str) -> str:
    """Symbolic one-way function; injective because it wraps the token verbatim."""
    return f"H({secret})"


class Contract:
    __slots__ = ("arc", "hashlock", "timeout", "state", "since", "at", "preimage")

    def __init__(self, arc, hashlock, timeout, since):
        self.arc = arc
        self.hashlock = hashlock
        self.timeout = timeout
        self.state = "escrowed"
        self.since = since
        self.at = None
        self.preimage = None

    def to_json(self):
        return {
            "arc": list(self.arc),
            "hashlock": self.hashlock,
            "timeout": self.timeout,
            "state": self.state,
            "since": self.since,
            "at": self.at,
            "preimage": self.preimage,
        }


@dataclass
class WorldState:
    graph: SwapDigraph
    clock: int = 0
    contracts: dict = field(default_factory=dict)
    knowledge: dict = field(default_factory=dict)  # party -> {secret: step acquired}
    pairs: dict = field(default_factory=dict)  # hashlock -> owner
    aborted: set = field(default_factory=set)

    def knows(self, party: str, secret: str, before: int) -> bool:
        got = self.knowledge[party].get(secret)
        return got is not None and got < before

    def known_secrets(self, party: str) -> list[str]:
        return sorted(self.knowledge[party])

    def holder(self, arc: Arc) -> str:
        c = self.contracts.get(arc)
        if c is None or c.state == "expired":
            return arc[0]
        if c.state == "claimed":
            return arc[1]
        return "escrow"

    def to_json(self) -> dict:
        return {
            "clock": self.clock,
            "contracts": [self.contracts[a].to_json() for a in sorted(self.contracts)],
            "holders": {f"{u}->{v}": self.holder((u, v)) for u, v in self.graph.sorted_arcs},
            "knowledge": {p: sorted(k) for p, k in sorted(self.knowledge.items())},
            "aborted": sorted(self.aborted),
        }


@dataclass(frozen=True)
class Event:
    step: int
    phase: str
    party: str
    event: str
    arc: Arc | None = None
    detail: Mapping | None = None

    def to_json(self) -> dict:
        return {
            "step": self.step,
            "phase": self.phase,
            "party": self.party,
            "event": self.event,
            "arc": list(self.arc) if self.arc else None,
            "detail": dict(self.detail) if self.detail else {},
        }


@dataclass
class Trace:
    events: list
    final: WorldState
    horizon: int

    def transferred(self) -> frozenset[Arc]:
        return frozenset(a for a, c in self.final.contracts.items() if c.state == "claimed")

    def of_kind(self, kind: str) -> list[Event]:
        return [e for e in self.events if e.event == kind]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e.to_json(), sort_keys=False) + "\n" for e in self.events)

    def digest(self) -> str:
        return hashlib.sha256(self.to_jsonl().encode()).hexdigest()


def _reject(events, t, phase, party, kind, arc, reason):
    events.append(Event(t, phase, party, "rejected", arc, {"attempt": kind, "reason": reason}))


def run(g: SwapDigraph, behaviors: Mapping, horizon: int | None = None) -> Trace:
    """Execute one run; ``behaviors`` maps every party to a Behavior.

    With ``horizon=None`` the run lasts until two steps past the latest
    timeout any behavior may use.  Contracts still escrowed afterwards are
    returned to their sellers, so every asset ends with its seller or buyer.
    """
    if set(behaviors) != set(g.vertices):
        missing = sorted(set(g.vertices) - set(behaviors))
        extra = sorted(set(behaviors) - set(g.vertices))
        raise ValueError(f"behaviors must cover the parties exactly (missing {missing}, extra {extra})")
    if horizon is None:
        horizon = max(b.horizon_hint() for b in behaviors.values())
    world = WorldState(g, knowledge={v: {} for v in g.vertices})
    agents = [(v, behaviors[v].agent()) for v in g.vertices]
    events: list[Event] = []
    arcs = g.arcs
    contracts = world.contracts
    knowledge = world.knowledge

    for t in range(horizon + 1):
        world.clock = t
        plans = [(v, a.decide(t, world)) for v, a in agents]
        buckets = {p: [] for p in PHASES}
        for v, acts in plans:
            for act in acts:
                kind = act[0]
                phase = "control" if kind == "abort" else "secrets" if kind in ("pair", "share") else kind
                if phase not in buckets:
                    _reject(events, t, "control", v, kind, None, "unknown action")
                    continue
                buckets[phase].append((v, act))

        for v, act in buckets["control"]:
            if v not in world.aborted:
                world.aborted.add(v)
                events.append(Event(t, "control", v, "abort", None, {"reason": act[1] if len(act) > 1 else ""}))

        for v, act in buckets["secrets"]:
            if act[0] == "pair":
                s = secret_of(v)
                h = hash_secret(s)
                if h in world.pairs:
                    _reject(events, t, "secrets", v, "pair", None, "party already created its secret pair")
                    continue
                world.pairs[h] = v
                knowledge[v][s] = t
                events.append(Event(t, "secrets", v, "pair", None, {"hashlock": h}))
            else:
                _, to, s = act
                if to not in knowledge or to == v:
                    _reject(events, t, "secrets", v, "share", None, f"bad recipient {to!r}")
                elif s not in knowledge[v]:
                    _reject(events, t, "secrets", v, "share", None, "secret not known to sender")
                else:
                    knowledge[to].setdefault(s, t)
                    events.append(Event(t, "secrets", v, "share", None, {"to": to, "secret": s}))

        for v, act in buckets["create"]:
            _, arc, h, tau = act
            if arc not in arcs:
                _reject(events, t, "create", v, "create", arc, "not an arc of the swap digraph")
            elif arc[0] != v:
                _reject(events, t, "create", v, "create", arc, "only the seller may create")
            elif arc in contracts:
                _reject(events, t, "create", v, "create", arc, "contract already created")
            elif h not in world.pairs:
                _reject(events, t, "create", v, "create", arc, "hashlock belongs to no secret pair")
            else:
                contracts[arc] = Contract(arc, h, tau, t)
                events.append(Event(t, "create", v, "create", arc, {"hashlock": h, "timeout": tau}))

        for v, act in buckets["claim"]:
            _, arc, s = act
            c = contracts.get(arc)
            if arc not in arcs or arc[1] != v:
                _reject(events, t, "claim", v, "claim", arc, "only the buyer may claim")
            elif c is None or c.state != "escrowed":
                _reject(events, t, "claim", v, "claim", arc, "no escrowed contract")
            elif t > c.timeout:
                _reject(events, t, "claim", v, "claim", arc, "timeout passed")
            elif hash_secret(s) != c.hashlock:
                _reject(events, t, "claim", v, "claim", arc, "wrong preimage")
            elif not world.knows(v, s, t):
                _reject(events, t, "claim", v, "claim", arc, "preimage not known before this step")
            else:
                c.state, c.at, c.preimage = "claimed", t, s
                knowledge[arc[0]].setdefault(s, t)
                events.append(Event(t, "claim", v, "claim", arc, {"secret": s}))

        for arc in sorted(contracts):
            c = contracts[arc]
            if c.state == "escrowed" and c.timeout <= t:
                c.state, c.at = "expired", t + 1
                events.append(Event(t + 1, "expiry", arc[0], "refund", arc, {"timeout": c.timeout}))

    for arc in sorted(contracts):
        c = contracts[arc]
        if c.state == "escrowed":
            c.state, c.at = "expired", horizon + 1
            events.append(Event(horizon + 1, "expiry", arc[0], "refund", arc, {"timeout": c.timeout, "drained": True}))
    world.clock = horizon + 1
    return Trace(events, world, horizon)
