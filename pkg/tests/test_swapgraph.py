import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import BIDIRECTED_TRIANGLE, DIGON_CHAIN, NON_REUNICLUS, THREE_CYCLE
from htlcswap.enumeration import random_reuniclus, random_strongly_connected
from htlcswap.swapgraph import (
    GraphFormatError,
    NotReuniclus,
    NotStronglyConnected,
    ReuniclusDecomposition,
    SwapDigraph,
    admissible_roots,
    articulation_vertices,
    blocks,
    bottleneck_vertices,
    brute_force_reuniclus_oracle,
    compute_distances,
    format_digraph,
    is_bottleneck_digraph,
    is_reuniclus,
    is_strongly_connected,
    parse_digraph,
    recurrence_violations,
    reuniclus_decompose,
    single_component,
    validate_decomposition,
)


# parsing -------------------------------------------------------------------

def test_parse_ignores_comments_and_blank_lines():
    g = parse_digraph("# header\n\na b  # trailing\nb a\n")
    assert g.arcs == {("a", "b"), ("b", "a")}
    assert g.vertices == ("a", "b")


@pytest.mark.parametrize("text", ["a b\nb\n", "a a\n", "a b\na b\n", "a b c\n"])
def test_parse_rejects_bad_input(text):
    with pytest.raises(GraphFormatError):
        parse_digraph(text)


def test_format_round_trip(digon_chain):
    assert parse_digraph(format_digraph(digon_chain)) == digon_chain


def test_from_arcs_rejects_self_loop():
    with pytest.raises(GraphFormatError):
        SwapDigraph.from_arcs([("a", "a")])


# connectivity and bottlenecks ------------------------------------------------

def test_strong_connectivity(three_cycle):
    assert is_strongly_connected(three_cycle)
    assert not is_strongly_connected(parse_digraph("a b\nb c\n"))


def test_bottlenecks_of_cycle_are_all_vertices(three_cycle):
    assert bottleneck_vertices(three_cycle) == {"l", "a", "b"}


def test_digon_chain_bottleneck_is_middle(digon_chain):
    assert bottleneck_vertices(digon_chain) == {"b"}
    assert is_bottleneck_digraph(digon_chain)
    assert articulation_vertices(digon_chain) == {"b"}
    assert sorted(map(sorted, blocks(digon_chain))) == [["a", "b"], ["b", "c"]]


def test_fixture_has_no_bottleneck(non_reuniclus):
    assert bottleneck_vertices(non_reuniclus) == frozenset()


def test_bottlenecks_need_strong_connectivity():
    with pytest.raises(NotStronglyConnected):
        bottleneck_vertices(parse_digraph("a b\nb c\n"))


# decomposition ---------------------------------------------------------------

def test_digon_chain_decomposition(digon_chain):
    dec = reuniclus_decompose(digon_chain)
    assert dec.leader == "a"
    assert dec.parent == {"b": "a"}
    assert dec.home == {"a": {"a", "b"}, "b": {"b", "c"}}
    assert validate_decomposition(digon_chain, dec) == []


def test_digon_chain_rooted_at_b_is_single_level(digon_chain):
    dec = reuniclus_decompose(digon_chain, root="b")
    assert dec.bottlenecks == ("b",)
    assert dec.parent == {}


def test_non_reuniclus_fixture_rejected(non_reuniclus):
    assert not is_reuniclus(non_reuniclus)
    assert not brute_force_reuniclus_oracle(non_reuniclus)
    with pytest.raises(NotReuniclus, match="no bottleneck"):
        reuniclus_decompose(non_reuniclus)


def test_bidirected_triangle_is_not_reuniclus():
    g = parse_digraph(BIDIRECTED_TRIANGLE)
    assert not is_reuniclus(g)
    assert not brute_force_reuniclus_oracle(g)


def test_root_must_be_admissible(digon_chain):
    assert admissible_roots(digon_chain) == ["a", "b", "c"]
    g = parse_digraph(THREE_CYCLE)
    with pytest.raises(NotReuniclus):
        reuniclus_decompose(g, root="zz")


def test_invalid_decomposition_reported(digon_chain):
    bad = ReuniclusDecomposition(("a",), (frozenset("abc"),), {})
    assert validate_decomposition(digon_chain, bad)


def test_decomposition_json_round_trip(digon_chain):
    dec = reuniclus_decompose(digon_chain)
    assert ReuniclusDecomposition.from_json(dec.to_json()) == dec


def test_component_of_arc(digon_chain):
    dec = reuniclus_decompose(digon_chain)
    assert {a: dec.component_of_arc(a) for a in digon_chain.arcs} == {
        ("a", "b"): "a", ("b", "a"): "a", ("b", "c"): "b", ("c", "b"): "b"}


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**9), st.integers(2, 5))
def test_recognizer_matches_oracle_on_random_digraphs(seed, n):
    g = random_strongly_connected(random.Random(seed), n)
    assert is_reuniclus(g) == brute_force_reuniclus_oracle(g)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**9), st.integers(2, 7))
def test_generated_reuniclus_graphs_are_accepted(seed, n):
    g = random_reuniclus(random.Random(seed), n)
    assert len(g) == n
    for root in admissible_roots(g):
        dec = reuniclus_decompose(g, root=root)
        assert validate_decomposition(g, dec) == []


# distances -------------------------------------------------------------------

def _simple_paths(g, src, dst):
    """Lengths of all simple paths src -> dst (a cycle when src == dst)."""
    out = []

    def walk(v, seen, k):
        for w in g.out_nbrs[v]:
            if w == dst:
                out.append(k + 1)
            elif w not in seen:
                walk(w, seen | {w}, k + 1)

    walk(src, {src}, 0)
    return out


def test_three_cycle_distances(three_cycle):
    t = compute_distances(three_cycle, single_component(three_cycle, "l"))
    assert t.d_star == 3
    assert dict(t.d_from) == {"l": 0, "a": 1, "b": 2}
    assert dict(t.d_to) == {"l": 0, "a": 2, "b": 1}


def test_digon_distances(digon):
    t = compute_distances(digon, single_component(digon, "l"))
    assert t.d_star == 2
    assert dict(t.d_to) == {"l": 0, "v": 1}


def test_digon_chain_sub_distances(digon_chain):
    dec = reuniclus_decompose(digon_chain)
    t = compute_distances(digon_chain, dec)
    assert t.b_star == 3
    assert dict(t.d_sub_arc) == {("a", "b"): 0, ("b", "c"): 0, ("c", "b"): 1, ("b", "a"): 2}
    assert dict(t.d_sub) == {"a": 3, "b": 2, "c": 1}
    assert dict(t.d_to) == {"a": 0, "b": 1, "c": 2}
    assert recurrence_violations(digon_chain, dec, t) == []


def _bottleneck_graph(seed, n):
    rng = random.Random(seed)
    while True:
        g = random_strongly_connected(rng, n)
        bots = sorted(bottleneck_vertices(g))
        if bots:
            return g, rng.choice(bots)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9), st.integers(2, 6))
def test_bottleneck_distances_are_longest_simple_paths(seed, n):
    g, leader = _bottleneck_graph(seed, n)
    t = compute_distances(g, single_component(g, leader))
    assert t.d_star == max(_simple_paths(g, leader, leader))
    for v in g.vertices:
        if v == leader:
            continue
        assert t.d_to[v] == max(_simple_paths(g, v, leader))
        assert t.d_from[v] == max(_simple_paths(g, leader, v))


def _constrained_longest(g, dec, v):
    """Longest path ending at v that starts at a leader below v's component and
    revisits only its start.  An arc from a leader into its own home component
    may only open the path, matching the zero base case of the recurrence."""
    anchor = dec.parent.get(v, v) if v in dec.home else dec.components_of(v)[0]
    starts = [anchor] + dec.descendants(anchor)
    best = -1

    def walk(u, start, seen, back, k):
        nonlocal best
        if u == v and k > 0:
            best = max(best, k)
        for w in g.out_nbrs[u]:
            if k > 0 and u in dec.home and w in dec.home[u]:
                continue
            if w == start and not back:
                walk(w, start, seen, True, k + 1)
            elif w not in seen:
                walk(w, start, seen | {w}, back, k + 1)

    for b in starts:
        walk(b, b, {b}, False, 0)
    return best


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9), st.integers(3, 7))
def test_sub_distances_match_path_definition(seed, n):
    g = random_reuniclus(random.Random(seed), n)
    dec = reuniclus_decompose(g)
    t = compute_distances(g, dec)
    assert recurrence_violations(g, dec, t) == []
    for v in g.vertices:
        assert t.d_sub[v] == _constrained_longest(g, dec, v), v
    assert t.b_star == t.d_sub[dec.leader]
    for v in g.vertices:
        if v != dec.leader:
            assert t.d_to[v] == max(_simple_paths(g, v, dec.leader))


def test_recurrence_checker_flags_tampering(digon_chain):
    dec = reuniclus_decompose(digon_chain)
    t = compute_distances(digon_chain, dec)
    bad = type(t)(t.d_from, {**t.d_to, "c": 5}, t.d_star, t.d_sub_arc, t.d_sub, t.b_star)
    assert recurrence_violations(digon_chain, dec, bad)
