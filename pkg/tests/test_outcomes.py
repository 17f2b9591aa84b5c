from hypothesis import given, strategies as st

from htlcswap.behaviors import conforming_all
from htlcswap.engine import run
from htlcswap.outcomes import (
    CLASSES,
    Outcome,
    UnresolvedContracts,
    classify,
    dominates,
    outcome_class,
    outcome_from_transfers,
)
from htlcswap.schedule import compile_rdp
from htlcswap.swapgraph import parse_digraph

import pytest

STAR = parse_digraph("x v\ny v\nv x\nv y\n")


def party(got, gave):
    return outcome_from_transfers(STAR, ["v"], set(got) | set(gave))


def test_free_ride_example():
    o = party([("x", "v")], [])
    assert o.klass == "FreeRide" and o.acceptable


def test_underwater_example():
    o = party([("x", "v")], [("v", "x")])
    assert o.klass == "Underwater" and not o.acceptable


def test_table():
    inc, out = [("x", "v"), ("y", "v")], [("v", "x"), ("v", "y")]
    assert party(inc, out).klass == "Deal"
    assert party([], []).klass == "NoDeal"
    assert party(inc, out[:1]).klass == "Discount"
    assert party(inc, []).klass == "Discount"  # all in, nothing out: Discount wins over FreeRide
    assert party([], out[:1]).klass == "Underwater"


def test_all_transferred_is_deal_for_every_coalition(digon_chain):
    tr = run(digon_chain, conforming_all(compile_rdp(digon_chain)))
    for c in (["a"], ["b"], ["c"], ["a", "b"], ["b", "c"], ["a", "c"], ["a", "b", "c"]):
        assert classify(tr, c).klass == "Deal"


def test_coalition_boundary(digon_chain):
    o = outcome_from_transfers(digon_chain, ["a", "b"], digon_chain.arcs)
    assert o.incoming == {("c", "b")} and o.outgoing == {("b", "c")}


def test_dominance_examples():
    inc, out = [("x", "v"), ("y", "v")], [("v", "x"), ("v", "y")]
    deal, discount = party(inc, out), party(inc, out[:1])
    assert dominates(discount, deal) and not dominates(deal, discount)
    free = party(inc[:1], [])
    assert not dominates(deal, free) and not dominates(free, deal)
    assert dominates(party([], []), party([], out[:1]))
    assert not dominates(deal, deal)


def test_dominance_requires_same_subject():
    a = outcome_from_transfers(STAR, ["v"], [])
    b = outcome_from_transfers(STAR, ["x"], [])
    with pytest.raises(ValueError):
        dominates(a, b)


def test_unresolved_trace_rejected(digon_chain):
    from htlcswap.engine import Contract
    tr = run(digon_chain, conforming_all(compile_rdp(digon_chain)))
    tr.final.contracts[("a", "b")] = Contract(("a", "b"), "h", 9, 0)
    with pytest.raises(UnresolvedContracts):
        classify(tr, "a")


def test_json_shape():
    assert set(party([], []).to_json()) == {"subject", "in", "out", "class", "acceptable"}


arcs_in = [("x", "v"), ("y", "v")]
arcs_out = [("v", "x"), ("v", "y")]


@given(st.sets(st.sampled_from(arcs_in)), st.sets(st.sampled_from(arcs_out)))
def test_partition_and_acceptability(got, gave):
    inc, out = frozenset(arcs_in), frozenset(arcs_out)
    k = outcome_class(inc, out, frozenset(got), frozenset(gave))
    assert k in CLASSES
    hits = [
        got == inc and gave == out,
        not got and not gave,
        got == inc and gave < out,
        bool(got) and not gave and got != inc,
    ]
    # the class table, with Deal/NoDeal/Discount taking precedence
    assert sum(hits) <= 1 or (got == inc and not gave)
    assert (k != "Underwater") == (got == inc or not gave)


@given(st.sets(st.sampled_from(arcs_in + arcs_out)))
def test_singleton_coalition_matches_party(moved):
    o = outcome_from_transfers(STAR, ["v"], moved)
    assert o.subject == {"v"}
    assert o.transferred_in == {a for a in moved if a[1] == "v"}
