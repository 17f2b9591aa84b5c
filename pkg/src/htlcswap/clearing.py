"""Turn offer/want orders into a swap digraph."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass

from .swapgraph import NotReuniclus, SwapDigraph, is_strongly_connected, reuniclus_decompose

STAGES = ("unbalanced", "parallel-arc", "not-strongly-connected", "not-reuniclus")


class ClearingRejected(ValueError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage
        self.message = message


@dataclass(frozen=True)
class Order:
    party: str
    offers: tuple[str, ...] = ()
    wants: tuple[str, ...] = ()

    def __post_init__(self):
        if not isinstance(self.party, str) or not self.party:
            raise ValueError("order party must be a nonempty string")
        for tag in self.offers + self.wants:
            if not isinstance(tag, str) or not tag:
                raise ValueError(f"order of {self.party}: asset tags must be nonempty strings")


@dataclass(frozen=True)
class Clearing:
    graph: SwapDigraph
    assets: dict  # arc -> tag

    def to_json(self) -> dict:
        return {
            "parties": list(self.graph.vertices),
            "arcs": [{"seller": u, "buyer": v, "asset": self.assets[(u, v)]} for u, v in self.graph.sorted_arcs],
        }


def parse_orders(text: str) -> list[Order]:
    rows = json.loads(text)
    if not isinstance(rows, list):
        raise ValueError("orders file must hold a JSON list")
    out = []
    for i, r in enumerate(rows):
        try:
            out.append(Order(r["party"], tuple(r.get("offers", ())), tuple(r.get("wants", ()))))
        except (KeyError, TypeError) as e:
            raise ValueError(f"order {i}: {e}") from None
    return out


def _matchings(slots, used):
    """Lexicographic backtracking over (tag, seller, buyer candidates) slots."""
    if not slots:
        yield {}
        return
    (tag, seller, buyers), rest = slots[0], slots[1:]
    for b in sorted(set(buyers)):
        if b == seller or (seller, b) in used:
            continue
        left = list(buyers)
        left.remove(b)
        used.add((seller, b))
        nxt = [(t, s, left if t == tag else bs) for t, s, bs in rest]
        for m in _matchings(nxt, used):
            yield {(seller, b): tag, **m}
        used.discard((seller, b))


def clear(orders, max_candidates: int = 10000) -> Clearing:
    """Match offered asset instances to wants, one arc per seller/buyer pair.

    Candidate matchings are tried in lexicographic order and the first one
    giving a reuniclus digraph is returned.  Rejection names the furthest
    stage that no candidate got past.
    """
    orders = list(orders)
    parties = sorted({o.party for o in orders})
    if len(parties) != len(orders):
        raise ValueError("each party may submit only one order")
    offered, wanted = Counter(), Counter()
    for o in orders:
        offered.update(o.offers)
        wanted.update(o.wants)
    for tag in sorted(set(offered) | set(wanted)):
        if offered[tag] != wanted[tag]:
            raise ClearingRejected("unbalanced", f"asset {tag!r} offered {offered[tag]} times, wanted {wanted[tag]}")
    slots = []
    for tag in sorted(offered):
        sellers = sorted(p for o in orders for p in [o.party] * o.offers.count(tag))
        buyers = sorted(p for o in orders for p in [o.party] * o.wants.count(tag))
        slots.extend((tag, s, buyers) for s in sellers)
    # each tag's slots share one buyer pool that shrinks as it is consumed
    furthest = 1
    reason = "every matching needs two assets between one ordered pair of parties or a self-trade"
    for tried, m in enumerate(_matchings(slots, set())):
        if tried >= max_candidates:
            break
        g = SwapDigraph.from_arcs(m, parties)
        if not m or not is_strongly_connected(g):
            if furthest < 2:
                furthest, reason = 2, "no matching yields a strongly connected swap digraph"
            continue
        try:
            reuniclus_decompose(g)
        except NotReuniclus as e:
            furthest, reason = 3, f"no matching yields a reuniclus swap digraph ({e})"
            continue
        return Clearing(g, dict(m))
    raise ClearingRejected(STAGES[furthest], reason)
