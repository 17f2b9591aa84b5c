"""Outcome classes for parties and coalitions."""

from __future__ import annotations

from dataclasses import dataclass

from .swapgraph import Arc, SwapDigraph

DEAL, NO_DEAL, DISCOUNT, FREE_RIDE, UNDERWATER = "Deal", "NoDeal", "Discount", "FreeRide", "Underwater"
CLASSES = (DEAL, NO_DEAL, DISCOUNT, FREE_RIDE, UNDERWATER)


class UnresolvedContracts(ValueError):
    pass


@dataclass(frozen=True)
class Outcome:
    subject: frozenset
    incoming: frozenset
    outgoing: frozenset
    transferred_in: frozenset
    transferred_out: frozenset

    @property
    def klass(self) -> str:
        return outcome_class(self.incoming, self.outgoing, self.transferred_in, self.transferred_out)

    @property
    def acceptable(self) -> bool:
        return self.klass != UNDERWATER

    def to_json(self) -> dict:
        return {
            "subject": sorted(self.subject),
            "in": [list(a) for a in sorted(self.transferred_in)],
            "out": [list(a) for a in sorted(self.transferred_out)],
            "class": self.klass,
            "acceptable": self.acceptable,
        }


def outcome_class(incoming, outgoing, got, gave) -> str:
    all_in = got == incoming
    if all_in and gave == outgoing:
        return DEAL
    if not got and not gave:
        return NO_DEAL
    if all_in:
        return DISCOUNT
    if got and not gave:
        return FREE_RIDE
    return UNDERWATER


def boundary(g: SwapDigraph, parties) -> tuple[frozenset, frozenset]:
    c = frozenset(parties)
    inc = frozenset(a for a in g.arcs if a[0] not in c and a[1] in c)
    out = frozenset(a for a in g.arcs if a[0] in c and a[1] not in c)
    return inc, out


def outcome_from_transfers(g: SwapDigraph, parties, transferred) -> Outcome:
    inc, out = boundary(g, parties)
    moved = frozenset(transferred)
    return Outcome(frozenset(parties), inc, out, inc & moved, out & moved)


def classify(trace, parties) -> Outcome:
    if isinstance(parties, str):
        parties = (parties,)
    if any(c.state == "escrowed" for c in trace.final.contracts.values()):
        raise UnresolvedContracts("trace ends with escrowed contracts")
    return outcome_from_transfers(trace.final.graph, parties, trace.transferred())


def classify_all(trace) -> dict[str, Outcome]:
    return {v: classify(trace, (v,)) for v in trace.final.graph.vertices}


def dominates(a: Outcome, b: Outcome) -> bool:
    """Weak dominance: receives at least as much and gives up no more, strictly differing."""
    if a.subject != b.subject:
        raise ValueError("outcomes concern different parties")
    return (a.transferred_in >= b.transferred_in and a.transferred_out <= b.transferred_out
            and (a.transferred_in, a.transferred_out) != (b.transferred_in, b.transferred_out))
