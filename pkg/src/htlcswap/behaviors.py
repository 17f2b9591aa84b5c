"""Party strategies: the conforming program plus composable deviations."""

from __future__ import annotations

import itertools
import json
import random
from collections import defaultdict
from dataclasses import asdict, dataclass, fields

from .engine import hash_secret, secret_of
from .schedule import Schedule


# deviation primitives ------------------------------------------------------

@dataclass(frozen=True)
class FollowUntil:
    """Run the conforming program only at steps before ``t``."""
    t: int


@dataclass(frozen=True)
class NeverCreate:
    arc: tuple


@dataclass(frozen=True)
class DelayCreate:
    arc: tuple
    delta: int


@dataclass(frozen=True)
class WrongTimeout:
    arc: tuple
    timeout: int


@dataclass(frozen=True)
class WrongHashlock:
    """Lock ``arc`` with the hashlock of ``owner``'s secret (own one counts as fresh)."""
    arc: tuple
    owner: str


@dataclass(frozen=True)
class ShareSecret:
    """Send every secret known at step ``at`` to party ``to``."""
    to: str
    at: int


@dataclass(frozen=True)
class ClaimEagerly:
    """Claim ``arc`` at the first step a matching preimage is known."""
    arc: tuple


@dataclass(frozen=True)
class WithholdClaim:
    arc: tuple


@dataclass(frozen=True)
class ClaimAt:
    """Try to claim ``arc`` at step ``at`` with any matching known preimage."""
    arc: tuple
    at: int


@dataclass(frozen=True)
class Scripted:
    """A raw engine action at a fixed step: pair, share, create, claim or abort."""
    step: int
    action: str
    args: tuple = ()


PRIMITIVES = {
    cls.__name__: cls
    for cls in (FollowUntil, NeverCreate, DelayCreate, WrongTimeout, WrongHashlock,
                ShareSecret, ClaimEagerly, WithholdClaim, ClaimAt)
}


def deviation_primitives() -> dict[str, tuple[str, ...]]:
    """Name -> argument names of every deviation primitive."""
    return {name: tuple(f.name for f in fields(cls)) for name, cls in PRIMITIVES.items()}


# behaviors -----------------------------------------------------------------

@dataclass(frozen=True)
class Behavior:
    party: str
    schedule: Schedule
    deviations: tuple = ()
    claim_early: bool = False

    @property
    def conforming(self) -> bool:
        return not self.deviations

    def horizon_hint(self) -> int:
        latest = self.schedule.max_timeout()
        for d in self.deviations:
            if isinstance(d, WrongTimeout):
                latest = max(latest, d.timeout)
            elif isinstance(d, DelayCreate):
                latest = max(latest, self.schedule.create_time[d.arc] + d.delta)
            elif isinstance(d, (ShareSecret, ClaimAt)):
                latest = max(latest, d.at)
            elif isinstance(d, Scripted):
                latest = max(latest, d.step)
        return latest + 2

    def agent(self) -> "_Agent":
        return _Agent(self)

    def with_deviations(self, *devs) -> "Behavior":
        return Behavior(self.party, self.schedule, self.deviations + tuple(devs), self.claim_early)


def conforming_behavior(schedule: Schedule, party: str, claim_early: bool = False) -> Behavior:
    if party not in schedule.per_party:
        raise KeyError(f"{party!r} is not a party of the schedule")
    return Behavior(party, schedule, (), claim_early)


def conforming_all(schedule: Schedule, claim_early: bool = False) -> dict[str, Behavior]:
    return {p: conforming_behavior(schedule, p, claim_early) for p in schedule.graph.vertices}


def with_deviations(schedule: Schedule, deviations) -> dict[str, Behavior]:
    """All parties conforming except for ``(party, deviation)`` pairs."""
    per = defaultdict(list)
    for p, d in deviations:
        per[p].append(d)
    return {p: Behavior(p, schedule, tuple(per.get(p, ()))) for p in schedule.graph.vertices}


class _Agent:
    """Mutable interpreter for one run; reads only the party's own contracts and knowledge."""

    def __init__(self, b: Behavior):
        self.me = b.party
        self.s = b.schedule
        self.claim_early = b.claim_early
        self.program = defaultdict(list)
        for act in b.schedule.per_party[b.party]:
            self.program[act.time].append(act)
        self.stop_at = None
        self.never, self.withhold, self.eager = set(), set(), set()
        self.delay, self.timeout, self.lock = {}, {}, {}
        self.at_step = defaultdict(list)
        for d in b.deviations:
            if isinstance(d, FollowUntil):
                self.stop_at = d.t if self.stop_at is None else min(self.stop_at, d.t)
            elif isinstance(d, NeverCreate):
                self.never.add(d.arc)
            elif isinstance(d, DelayCreate):
                self.delay[d.arc] = d.delta
            elif isinstance(d, WrongTimeout):
                self.timeout[d.arc] = d.timeout
            elif isinstance(d, WrongHashlock):
                self.lock[d.arc] = d.owner
            elif isinstance(d, ClaimEagerly):
                self.eager.add(d.arc)
            elif isinstance(d, WithholdClaim):
                self.withhold.add(d.arc)
            elif isinstance(d, ShareSecret):
                self.at_step[d.at].append(d)
            elif isinstance(d, ClaimAt):
                self.at_step[d.at].append(d)
            elif isinstance(d, Scripted):
                self.at_step[d.step].append(d)
            else:
                raise TypeError(f"unknown deviation {d!r}")
        self.active = True
        self.paired = False
        self.pending = defaultdict(list)
        self.claim_acts = [a for a in b.schedule.per_party[b.party] if a.kind == "claim"]
        self.claims_done = False
        self.ready_for_early = False

    def _pair(self, out):
        if not self.paired:
            self.paired = True
            out.append(("pair",))

    def _verify(self, act, contracts):
        for arc in act.arcs:
            c = contracts.get(arc)
            if c is None or c.state != "escrowed":
                return f"incoming contract {arc[0]}->{arc[1]} missing"
            if c.timeout != self.s.timeout[arc]:
                return f"incoming contract {arc[0]}->{arc[1]} has timeout {c.timeout}"
        mine = hash_secret(secret_of(self.me))
        for arc in act.own_arcs:
            if contracts[arc].hashlock != mine:
                return f"incoming contract {arc[0]}->{arc[1]} not locked by own hashlock"
        if len({contracts[a].hashlock for a in act.uniform_arcs}) > 1:
            return "incoming hashlocks differ"
        return None

    def _claims(self, act, t, world, out):
        contracts = world.contracts
        mine = secret_of(self.me)
        if act.secret_from:
            learned = sorted({contracts[a].preimage for a in act.secret_from
                              if a in contracts and contracts[a].state == "claimed" and contracts[a].at < t})
            if not learned:
                out.append(("abort", "no outgoing contract was claimed"))
                self.active = False
                return
        else:
            learned = [mine]
        for arc in act.arcs:
            if arc in self.withhold:
                continue
            c = contracts.get(arc)
            if c is None or c.state != "escrowed":
                continue
            for s in ([mine] if arc in act.own_arcs else learned):
                if hash_secret(s) == c.hashlock:
                    out.append(("claim", arc, s))
                    break

    def _learned(self, world, t):
        return sorted(s for s, got in world.knowledge[self.me].items() if got < t)

    def _claim_known(self, arc, t, world, out):
        c = world.contracts.get(arc)
        if c is None or c.state != "escrowed":
            return
        for s in self._learned(world, t):
            if hash_secret(s) == c.hashlock:
                out.append(("claim", arc, s))
                return

    def decide(self, t, world):
        out = []
        contracts = world.contracts
        if self.active and (self.stop_at is None or t < self.stop_at):
            for act in self.program.get(t, ()):
                if act.kind == "pair":
                    self._pair(out)
                elif act.kind == "verify":
                    why = self._verify(act, contracts)
                    if why:
                        out.append(("abort", why))
                        self.active = False
                        break
                    self.ready_for_early = True
                elif act.kind == "create":
                    arc = act.arc
                    if arc in self.never:
                        continue
                    owner = self.lock.get(arc)
                    if owner is not None:
                        if owner == self.me:
                            self._pair(out)
                        h = hash_secret(secret_of(owner))
                    elif act.hashlock_from:
                        src = [contracts[a] for a in act.hashlock_from if a in contracts]
                        if not src:
                            continue
                        h = src[0].hashlock
                    else:
                        h = hash_secret(secret_of(self.me))
                    tau = self.timeout.get(arc, act.timeout)
                    if arc in self.delay:
                        self.pending[t + self.delay[arc]].append(("create", arc, h, tau))
                    else:
                        out.append(("create", arc, h, tau))
                elif act.kind == "claim" and not self.claims_done:
                    self._claims(act, t, world, out)
            if self.program.get(t) and any(a.kind == "claim" for a in self.program[t]):
                self.claims_done = True
            elif self.claim_early and self.ready_for_early and not self.claims_done:
                if any(contracts.get(a) is not None and contracts[a].state == "claimed"
                       for act in self.claim_acts for a in act.secret_from):
                    for act in self.claim_acts:
                        self._claims(act, t, world, out)
                    self.claims_done = True
        out.extend(self.pending.pop(t, ()))
        for arc in sorted(self.eager):
            self._claim_known(arc, t, world, out)
        for d in self.at_step.get(t, ()):
            if isinstance(d, ShareSecret):
                out.extend(("share", d.to, s) for s in self._learned(world, t))
            elif isinstance(d, ClaimAt):
                self._claim_known(d.arc, t, world, out)
            else:
                out.append((d.action, *d.args))
        return out


# adversary spaces ------------------------------------------------------------

def deviation_catalog(schedule: Schedule, party: str, horizon: int | None = None,
                      share_targets=()) -> list:
    """Finite set of single deviations available to ``party``.

    Timeout substitutions range over the timeouts of the instance plus one
    larger value, hashlock substitutions over the existing protectors plus
    the party itself.  ``FollowUntil`` cut points are the party's own action
    steps since stopping between them is indistinguishable.
    """
    g = schedule.graph
    if horizon is None:
        horizon = schedule.max_timeout() + 1
    times = sorted({0} | {a.time for a in schedule.per_party[party]})
    taus = sorted(set(schedule.timeout.values()) | {schedule.max_timeout() + 1})
    owners = sorted(schedule.protectors | {party})
    cat: list = [FollowUntil(t) for t in times]
    for arc in g.out_arcs(party):
        cat.append(NeverCreate(arc))
        start = schedule.create_time[arc]
        cat.extend(DelayCreate(arc, d) for d in range(1, horizon - start + 1))
        cat.extend(WrongTimeout(arc, x) for x in taus if x != schedule.timeout[arc])
        cat.extend(WrongHashlock(arc, o) for o in owners if o != schedule.hashlock_owner[arc])
    for to in sorted(share_targets):
        if to != party:
            cat.extend(ShareSecret(to, t) for t in range(horizon + 1))
    for arc in g.in_arcs(party):
        cat.append(ClaimEagerly(arc))
        cat.append(WithholdClaim(arc))
        cat.extend(ClaimAt(arc, t) for t in range(horizon + 1))
    return cat


def coalition_catalog(schedule: Schedule, coalition, horizon: int | None = None) -> list:
    members = sorted(coalition)
    return [(p, d) for p in members for d in deviation_catalog(schedule, p, horizon, members)]


def adversary_space(schedule: Schedule, coalition, budget: int, horizon: int | None = None):
    """Every set of at most ``budget`` distinct coalition deviations, smallest first."""
    cat = coalition_catalog(schedule, coalition, horizon)
    for k in range(budget + 1):
        yield from itertools.combinations(cat, k)


def random_adversary(schedule: Schedule, seed: int, coalition, budget: int) -> dict[str, Behavior]:
    rng = random.Random(seed)
    cat = coalition_catalog(schedule, coalition)
    k = rng.randint(0, min(budget, len(cat)))
    return with_deviations(schedule, rng.sample(cat, k))


# script files ----------------------------------------------------------------

def _encode_args(d) -> dict:
    return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(d).items()}


def behaviors_to_script(behaviors: dict) -> list[dict]:
    rows = []
    for p in sorted(behaviors):
        b = behaviors[p]
        if b.conforming:
            rows.append({"party": p, "conforming": True} | ({"claim_early": True} if b.claim_early else {}))
        for d in b.deviations:
            if isinstance(d, Scripted):
                rows.append({"party": p, "step": d.step, "action": d.action, "args": list(d.args)})
            else:
                rows.append({"party": p, "action": type(d).__name__, "args": _encode_args(d)})
    return rows


def _decode_value(v):
    return tuple(_decode_value(x) for x in v) if isinstance(v, list) else v


def behaviors_from_script(schedule: Schedule, rows: list) -> dict[str, Behavior]:
    """Parse a behavior script; parties without entries conform."""
    per = defaultdict(list)
    early = set()
    parties = set(schedule.graph.vertices)
    for i, row in enumerate(rows):
        if not isinstance(row, dict) or "party" not in row:
            raise ValueError(f"entry {i}: expected an object with a 'party' field")
        p = row["party"]
        if p not in parties:
            raise ValueError(f"entry {i}: unknown party {p!r}")
        if row.get("conforming"):
            if row.get("claim_early"):
                early.add(p)
            continue
        action = row.get("action")
        args = row.get("args", {})
        if "step" in row:
            per[p].append(Scripted(int(row["step"]), action, _decode_value(list(args))))
        elif action in PRIMITIVES:
            try:
                per[p].append(PRIMITIVES[action](**{k: _decode_value(v) for k, v in args.items()}))
            except TypeError as e:
                raise ValueError(f"entry {i}: bad arguments for {action}: {e}") from None
        else:
            raise ValueError(f"entry {i}: unknown action {action!r}")
    return {p: Behavior(p, schedule, tuple(per.get(p, ())), p in early) for p in schedule.graph.vertices}


def load_script(schedule: Schedule, text: str) -> dict[str, Behavior]:
    return behaviors_from_script(schedule, json.loads(text))
