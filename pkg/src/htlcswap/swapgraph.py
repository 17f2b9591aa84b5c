"""Swap digraphs and their structural analyses.

A swap digraph has one vertex per party and one arc ``(seller, buyer)`` per
asset transfer.  This module recognizes reuniclus digraphs (strongly connected
digraphs that split into induced bottleneck components glued along a control
tree) and computes the longest-path distances that drive every timetable.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property
from graphlib import CycleError, TopologicalSorter
from typing import Iterable, Mapping

import networkx as nx

Arc = tuple[str, str]


class GraphFormatError(ValueError):
    """Malformed graph text, self-loop or duplicate arc."""


class NotStronglyConnected(ValueError):
    pass


class NotReuniclus(ValueError):
    """The digraph admits no reuniclus decomposition."""


class InvalidDecomposition(ValueError):
    pass


@dataclass(frozen=True)
class SwapDigraph:
    vertices: tuple[str, ...]
    arcs: frozenset[Arc]

    def __post_init__(self):
        if len(set(self.vertices)) != len(self.vertices):
            raise GraphFormatError("duplicate vertex identifiers")
        vs = set(self.vertices)
        for u, v in self.arcs:
            if u == v:
                raise GraphFormatError(f"self-loop on {u!r}")
            if u not in vs or v not in vs:
                raise GraphFormatError(f"arc ({u}, {v}) uses an unknown vertex")

    @classmethod
    def from_arcs(cls, arcs: Iterable[Arc], vertices: Iterable[str] = ()) -> "SwapDigraph":
        arcs = [tuple(a) for a in arcs]
        seen = set()
        for a in arcs:
            if a in seen:
                raise GraphFormatError(f"duplicate arc {a}")
            seen.add(a)
        vs = set(vertices)
        for u, v in arcs:
            vs.update((u, v))
        return cls(tuple(sorted(vs)), frozenset(arcs))

    @cached_property
    def out_nbrs(self) -> dict[str, tuple[str, ...]]:
        out = {v: [] for v in self.vertices}
        for u, v in self.arcs:
            out[u].append(v)
        return {v: tuple(sorted(ns)) for v, ns in out.items()}

    @cached_property
    def in_nbrs(self) -> dict[str, tuple[str, ...]]:
        inn = {v: [] for v in self.vertices}
        for u, v in self.arcs:
            inn[v].append(u)
        return {v: tuple(sorted(ns)) for v, ns in inn.items()}

    def in_arcs(self, v: str) -> tuple[Arc, ...]:
        return tuple((u, v) for u in self.in_nbrs[v])

    def out_arcs(self, v: str) -> tuple[Arc, ...]:
        return tuple((v, w) for w in self.out_nbrs[v])

    @cached_property
    def sorted_arcs(self) -> tuple[Arc, ...]:
        return tuple(sorted(self.arcs))

    def induced(self, vertices: Iterable[str]) -> "SwapDigraph":
        vs = set(vertices)
        return SwapDigraph(
            tuple(sorted(vs)),
            frozenset((u, v) for u, v in self.arcs if u in vs and v in vs),
        )

    def without(self, vertex: str) -> "SwapDigraph":
        return self.induced(v for v in self.vertices if v != vertex)

    def to_networkx(self) -> nx.DiGraph:
        d = nx.DiGraph()
        d.add_nodes_from(self.vertices)
        d.add_edges_from(self.sorted_arcs)
        return d

    def __len__(self):
        return len(self.vertices)


def parse_digraph(text: str) -> SwapDigraph:
    """Parse the edge-list format: one ``seller buyer`` pair per line.

    ``#`` starts a comment; blank lines are ignored.
    """
    arcs = []
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphFormatError(f"line {lineno}: expected '<seller> <buyer>', got {raw!r}")
        u, v = parts
        if u == v:
            raise GraphFormatError(f"line {lineno}: self-loop on {u!r}")
        if (u, v) in seen:
            raise GraphFormatError(f"line {lineno}: duplicate arc {u} -> {v}")
        seen.add((u, v))
        arcs.append((u, v))
    return SwapDigraph.from_arcs(arcs)


def format_digraph(g: SwapDigraph) -> str:
    return "".join(f"{u} {v}\n" for u, v in g.sorted_arcs)


def _reach(adj: Mapping[str, Iterable[str]], start: str) -> set[str]:
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for w in adj[u]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


def is_strongly_connected(g: SwapDigraph) -> bool:
    if not g.vertices:
        return False
    root = g.vertices[0]
    n = len(g.vertices)
    return len(_reach(g.out_nbrs, root)) == n and len(_reach(g.in_nbrs, root)) == n


def is_acyclic(g: SwapDigraph) -> bool:
    return nx.is_directed_acyclic_graph(g.to_networkx())


def _require_sc(g: SwapDigraph) -> None:
    if not g.arcs or not is_strongly_connected(g):
        raise NotStronglyConnected("swap digraph must be strongly connected with at least one arc")


def bottleneck_vertices(g: SwapDigraph) -> frozenset[str]:
    """Vertices lying on every cycle, i.e. whose removal leaves ``g`` acyclic."""
    _require_sc(g)
    d = g.to_networkx()
    out = set()
    for v in g.vertices:
        h = d.copy()
        h.remove_node(v)
        if nx.is_directed_acyclic_graph(h):
            out.add(v)
    return frozenset(out)


def is_bottleneck_digraph(g: SwapDigraph) -> bool:
    return bool(g.arcs) and is_strongly_connected(g) and bool(bottleneck_vertices(g))


def articulation_vertices(g: SwapDigraph) -> frozenset[str]:
    """Articulation vertices of the underlying undirected graph."""
    return frozenset(nx.articulation_points(g.to_networkx().to_undirected()))


def blocks(g: SwapDigraph) -> list[frozenset[str]]:
    """Biconnected components (vertex sets) of the underlying undirected graph."""
    und = g.to_networkx().to_undirected()
    return sorted((frozenset(b) for b in nx.biconnected_components(und)), key=sorted)


# ---------------------------------------------------------------------------
# Reuniclus decomposition


@dataclass(frozen=True)
class ReuniclusDecomposition:
    """Bottlenecks ``b_1..b_p`` (``b_1`` is the main leader), their home
    components and the control tree as a child -> parent map."""

    bottlenecks: tuple[str, ...]
    components: tuple[frozenset[str], ...]
    parent: Mapping[str, str] = field(default_factory=dict)

    @property
    def leader(self) -> str:
        return self.bottlenecks[0]

    @cached_property
    def home(self) -> dict[str, frozenset[str]]:
        return dict(zip(self.bottlenecks, self.components))

    @cached_property
    def children(self) -> dict[str, tuple[str, ...]]:
        kids = {b: [] for b in self.bottlenecks}
        for c, p in self.parent.items():
            kids[p].append(c)
        return {b: tuple(sorted(k)) for b, k in kids.items()}

    def component_of_arc(self, arc: Arc) -> str:
        """Bottleneck of the unique component holding both endpoints."""
        u, v = arc
        for b, comp in zip(self.bottlenecks, self.components):
            if u in comp and v in comp:
                return b
        raise InvalidDecomposition(f"arc {arc} lies in no component")

    def components_of(self, vertex: str) -> tuple[str, ...]:
        return tuple(b for b, comp in zip(self.bottlenecks, self.components) if vertex in comp)

    def is_bottleneck_arc(self, arc: Arc) -> bool:
        """Arc leaving a leader into its own home component."""
        u, v = arc
        return u in self.home and v in self.home[u]

    def descendants(self, b: str) -> list[str]:
        out, stack = [], list(self.children[b])
        while stack:
            c = stack.pop()
            out.append(c)
            stack.extend(self.children[c])
        return sorted(out)

    def to_json(self) -> dict:
        return {
            "bottlenecks": list(self.bottlenecks),
            "components": [sorted(c) for c in self.components],
            "parent": dict(sorted(self.parent.items())),
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "ReuniclusDecomposition":
        return cls(
            tuple(data["bottlenecks"]),
            tuple(frozenset(c) for c in data["components"]),
            dict(data.get("parent", {})),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def single_component(g: SwapDigraph, leader: str) -> ReuniclusDecomposition:
    return ReuniclusDecomposition((leader,), (frozenset(g.vertices),), {})


def validate_decomposition(g: SwapDigraph, dec: ReuniclusDecomposition) -> list[str]:
    """Check ``dec`` against the definition; returns a list of violations."""
    errs = []
    bs = dec.bottlenecks
    if len(set(bs)) != len(bs):
        errs.append("bottleneck vertices are not distinct")
    if len(dec.components) != len(bs):
        errs.append("one component per bottleneck is required")
        return errs
    vs = set(g.vertices)
    for b, comp in zip(bs, dec.components):
        if not comp <= vs:
            errs.append(f"component of {b} has unknown vertices")
            continue
        if b not in comp:
            errs.append(f"{b} is not in its home component")
            continue
        sub = g.induced(comp)
        if not sub.arcs or not is_strongly_connected(sub):
            errs.append(f"component of {b} is not strongly connected")
        elif not is_acyclic(sub.without(b)):
            errs.append(f"{b} is not a bottleneck of its component")
    # control tree: single root b_1, acyclic parent map over the bottlenecks
    if set(dec.parent) != set(bs[1:]) or any(p not in dec.home for p in dec.parent.values()):
        errs.append("parent map must cover exactly the non-root bottlenecks")
    else:
        for b in bs:
            seen, x = set(), b
            while x in dec.parent:
                if x in seen:
                    errs.append("control tree has a cycle")
                    break
                seen.add(x)
                x = dec.parent[x]
            else:
                if x != bs[0]:
                    errs.append(f"{b} does not descend from the root")
                continue
            break
    # overlap rule
    for (i, bi), (j, bj) in itertools.combinations(enumerate(bs), 2):
        shared = dec.components[i] & dec.components[j]
        if dec.parent.get(bj) == bi:
            want = {bj}
        elif dec.parent.get(bi) == bj:
            want = {bi}
        else:
            want = set()
        if shared != want:
            errs.append(f"components of {bi} and {bj} share {sorted(shared)}, expected {sorted(want)}")
    covered = {}
    for b, comp in zip(bs, dec.components):
        for a in g.arcs:
            if a[0] in comp and a[1] in comp:
                covered.setdefault(a, []).append(b)
    for a in g.sorted_arcs:
        if len(covered.get(a, ())) != 1:
            errs.append(f"arc {a} is covered by {covered.get(a, [])}")
    return errs


def _root_candidates(blks, cuts, bots):
    """Yield (leader, leader-of-block map) for every admissible control-tree root.

    The block-cut tree is rooted either at a cut vertex (which then leads every
    adjacent block) or at a block led by one of its non-cut bottlenecks.  Every
    other block must be led by its parent cut vertex.
    """
    adj_cut = {c: [i for i, b in enumerate(blks) if c in b] for c in cuts}

    def orient(kind, node):
        lead = {}
        frontier = [(kind, node, None)]
        while frontier:
            kind, node, par = frontier.pop()
            if kind == "cut":
                for i in adj_cut[node]:
                    if i != par:
                        if node not in bots[i]:
                            return None
                        lead[i] = node
                        frontier.append(("block", i, node))
            else:
                for c in sorted(blks[node] & cuts):
                    if c != par:
                        frontier.append(("cut", c, node))
        return lead

    for c in sorted(cuts):
        lead = orient("cut", c)
        if lead is not None:
            yield c, lead
    for i, b in enumerate(blks):
        free = sorted(bots[i] - cuts)
        if not free:
            continue
        lead = orient("block", i)
        if lead is not None:
            for c in free:
                yield c, {**lead, i: c}


def _check_block_bottlenecks(g, blks):
    bots = []
    for b in blks:
        sub = g.induced(b)
        bots.append(frozenset(v for v in b if is_acyclic(sub.without(v))))
    return bots


def admissible_roots(g: SwapDigraph) -> list[str]:
    """All vertices that can serve as main leader of some decomposition."""
    _require_sc(g)
    blks = blocks(g)
    bots = _check_block_bottlenecks(g, blks)
    if not all(bots):
        return []
    return sorted({c for c, _ in _root_candidates(blks, articulation_vertices(g), bots)})


def reuniclus_decompose(g: SwapDigraph, root: str | None = None) -> ReuniclusDecomposition:
    """Recognize a reuniclus digraph and return its decomposition.

    Works on the block-cut tree of the underlying undirected graph: each block
    must have a bottleneck, and some rooting of the tree must let every
    non-root block be led by the cut vertex above it.  The main leader is
    ``root`` if given, else the lexicographically smallest admissible one.
    """
    _require_sc(g)
    blks = blocks(g)
    cuts = articulation_vertices(g)
    bots = _check_block_bottlenecks(g, blks)
    for b, bb in zip(blks, bots):
        if not bb:
            raise NotReuniclus(f"block {{{', '.join(sorted(b))}}} has no bottleneck vertex")
    choice = None
    for c, lead in _root_candidates(blks, cuts, bots):
        if c == root:
            choice = (c, lead)
            break
        if root is None and (choice is None or c < choice[0]):
            choice = (c, lead)
    if choice is None:
        if root is not None:
            raise NotReuniclus(f"{root!r} cannot be the main leader of any decomposition")
        raise NotReuniclus("no rooting of the block-cut tree has a bottleneck leader for every block")
    leader, lead = choice

    members: dict[str, set[str]] = {}
    for i, c in lead.items():
        members.setdefault(c, set()).update(blks[i])
    # parent of a non-root leader c: leader of the unique block holding c that c does not lead
    parent = {}
    for c in members:
        if c == leader:
            continue
        above = [lead[i] for i, b in enumerate(blks) if c in b and lead[i] != c]
        if len(above) != 1:
            raise InvalidDecomposition(f"leader {c} has {len(above)} parent blocks")
        parent[c] = above[0]
    order = [leader]
    kids = {c: sorted(k for k, p in parent.items() if p == c) for c in members}
    for c in order:
        order.extend(kids[c])
    dec = ReuniclusDecomposition(
        tuple(order), tuple(frozenset(members[c]) for c in order), parent
    )
    return dec


def is_reuniclus(g: SwapDigraph) -> bool:
    try:
        reuniclus_decompose(g)
    except (NotReuniclus, NotStronglyConnected):
        return False
    return True


# ---------------------------------------------------------------------------
# Definition-checking oracle.  Deliberately shares no code with the recognizer.


def _bf_reach(arcs, start):
    seen, stack = {start}, [start]
    while stack:
        u = stack.pop()
        for a, b in arcs:
            if a == u and b not in seen:
                seen.add(b)
                stack.append(b)
    return seen


def _bf_strong(vs, arcs):
    vs = list(vs)
    if len(vs) < 2:
        return False
    rev = [(b, a) for a, b in arcs]
    return _bf_reach(arcs, vs[0]) >= set(vs) and _bf_reach(rev, vs[0]) >= set(vs)


def _bf_acyclic(vs, arcs):
    vs = set(vs)
    arcs = [(a, b) for a, b in arcs if a in vs and b in vs]
    indeg = {v: 0 for v in vs}
    for _, b in arcs:
        indeg[b] += 1
    queue = [v for v in vs if indeg[v] == 0]
    removed = 0
    while queue:
        u = queue.pop()
        removed += 1
        for a, b in arcs:
            if a == u:
                indeg[b] -= 1
                if indeg[b] == 0:
                    queue.append(b)
    return removed == len(vs)


def brute_force_reuniclus_oracle(g: SwapDigraph, max_vertices: int = 7) -> bool:
    """Exhaustive search for components, bottlenecks and a control tree.

    Components are chosen as vertex sets covering the lowest uncovered arc;
    the overlap rule then forces the parent relation, which must form a
    single rooted tree.
    """
    if len(g.vertices) > max_vertices:
        raise ValueError(f"oracle limited to {max_vertices} vertices, got {len(g.vertices)}")
    vs = list(g.vertices)
    arcs = sorted(g.arcs)
    if not arcs or not _bf_strong(vs, arcs):
        return False

    def induced_arcs(s):
        return [a for a in arcs if a[0] in s and a[1] in s]

    def bottlenecks_of(s):
        ia = induced_arcs(s)
        if not _bf_strong(s, ia):
            return []
        return [b for b in sorted(s) if _bf_acyclic(s - {b}, ia)]

    def tree_ok(comps, leads):
        p = len(comps)
        if len(set(leads)) != p:
            return False
        parent = {}
        for i, j in itertools.combinations(range(p), 2):
            shared = comps[i] & comps[j]
            if not shared:
                continue
            if shared == {leads[j]}:
                child, par = j, i
            elif shared == {leads[i]}:
                child, par = i, j
            else:
                return False
            if child in parent:
                return False
            parent[child] = par
        if sum(1 for i in range(p) if i not in parent) != 1:
            return False
        for i in range(p):
            seen, x = set(), i
            while x in parent:
                if x in seen:
                    return False
                seen.add(x)
                x = parent[x]
        return True

    def search(comps, covered):
        rest = [a for a in arcs if a not in covered]
        if not rest:
            for leads in itertools.product(*(bottlenecks_of(c) for c in comps)):
                if tree_ok(comps, list(leads)):
                    return True
            return False
        u, v = rest[0]
        others = [w for w in vs if w not in (u, v)]
        for k in range(len(others) + 1):
            for extra in itertools.combinations(others, k):
                s = frozenset((u, v, *extra))
                ia = induced_arcs(s)
                if any(a in covered for a in ia):
                    continue
                if any(len(s & c) > 1 for c in comps):
                    continue
                if not bottlenecks_of(s):
                    continue
                if search(comps + [s], covered | set(ia)):
                    return True
        return False

    return search([], set())


# ---------------------------------------------------------------------------
# Distances


@dataclass(frozen=True)
class DistanceTable:
    d_from: Mapping[str, int]
    d_to: Mapping[str, int]
    d_star: int
    d_sub_arc: Mapping[Arc, int]
    d_sub: Mapping[str, int]
    b_star: int

    def to_json(self) -> dict:
        return {
            "d_from": dict(sorted(self.d_from.items())),
            "d_to": dict(sorted(self.d_to.items())),
            "D_star": self.d_star,
            "d_sub": dict(sorted(self.d_sub.items())),
            "d_sub_arc": {f"{u}->{v}": d for (u, v), d in sorted(self.d_sub_arc.items())},
            "B_star": self.b_star,
        }


def _longest_from_sources(nodes, succ, sources):
    """Longest path length from any source to every node of a DAG."""
    ts = TopologicalSorter({n: () for n in nodes})
    for u, ws in succ.items():
        for w in ws:
            ts.add(w, u)
    try:
        order = list(ts.static_order())
    except CycleError as exc:
        raise RuntimeError("split-vertex graph is cyclic") from exc
    dist = {n: (0 if n in sources else None) for n in nodes}
    for u in order:
        if dist[u] is None:
            continue
        for w in succ.get(u, ()):
            if dist[w] is None or dist[w] < dist[u] + 1:
                dist[w] = dist[u] + 1
    return dist, order


def _split_dag(g: SwapDigraph, dec: ReuniclusDecomposition):
    """Split every leader into a home-out node and a rest node."""
    leaders = set(dec.bottlenecks)

    def tail(arc):
        u = arc[0]
        if u in leaders:
            return (u, "home") if dec.is_bottleneck_arc(arc) else (u, "rest")
        return (u, "")

    def head(arc):
        v = arc[1]
        return (v, "rest") if v in leaders else (v, "")

    nodes = set()
    for v in g.vertices:
        if v in leaders:
            nodes.update({(v, "home"), (v, "rest")})
        else:
            nodes.add((v, ""))
    succ = {n: [] for n in nodes}
    for a in g.sorted_arcs:
        succ[tail(a)].append(head(a))
    return nodes, succ, tail, head


def compute_distances(g: SwapDigraph, dec: ReuniclusDecomposition) -> DistanceTable:
    errs = validate_decomposition(g, dec)
    if errs:
        raise InvalidDecomposition("; ".join(errs))
    leaders = set(dec.bottlenecks)
    ell = dec.leader
    nodes, succ, tail, head = _split_dag(g, dec)

    def vnode(v):
        return (v, "rest") if v in leaders else (v, "")

    # constrained distance from some descendant leader (sources = home nodes)
    sources = {(b, "home") for b in leaders}
    sub, order = _longest_from_sources(nodes, succ, sources)
    d_sub = {v: sub[vnode(v)] for v in g.vertices}
    d_sub_arc = {a: (0 if dec.is_bottleneck_arc(a) else d_sub[a[0]]) for a in g.arcs}

    # maximum distance to the main leader
    to = {n: None for n in nodes}
    to[(ell, "rest")] = 0
    for u in reversed(order):
        if u == (ell, "rest"):
            continue
        best = None
        for w in succ[u]:
            if to[w] is not None and (best is None or to[w] + 1 > best):
                best = to[w] + 1
        to[u] = best
    if any(to[vnode(v)] is None for v in g.vertices):
        raise RuntimeError("some vertex cannot reach the main leader")
    d_to = {v: to[vnode(v)] for v in g.vertices}

    # maximum distance from the main leader, component by component
    d_from = {ell: 0}
    for b, comp in zip(dec.bottlenecks, dec.components):
        local = _within_component_from(g, comp, b)
        for v in comp:
            if v != b:
                d_from[v] = d_from[b] + local[v]
    d_star = max(d_from[z] for z in g.in_nbrs[ell]) + 1
    return DistanceTable(d_from, d_to, d_star, d_sub_arc, d_sub, d_sub[ell])


def _within_component_from(g, comp, b):
    """Longest simple path from ``b`` to each vertex inside one bottleneck component."""
    nodes = {v for v in comp if v != b} | {"__src__"}
    succ = {n: [] for n in nodes}
    for u, v in g.arcs:
        if u in comp and v in comp and v != b:
            succ["__src__" if u == b else u].append(v)
    dist, _ = _longest_from_sources(nodes, succ, {"__src__"})
    return dist


def recurrence_violations(g: SwapDigraph, dec: ReuniclusDecomposition, t: DistanceTable) -> list[str]:
    """Re-check the three distance recurrences pointwise."""
    errs = []
    leaders = set(dec.bottlenecks)
    ell = dec.leader
    if t.d_from[ell] != 0 or t.d_to[ell] != 0:
        errs.append("leader distances must be zero")
    for y in g.vertices:
        if y in leaders:
            continue
        want = max(t.d_from[z] for z in g.in_nbrs[y]) + 1
        if t.d_from[y] != want:
            errs.append(f"d_from({y})={t.d_from[y]} but recurrence gives {want}")
        want = max(t.d_to[z] for z in g.out_nbrs[y]) + 1
        if t.d_to[y] != want:
            errs.append(f"d_to({y})={t.d_to[y]} but recurrence gives {want}")
    for b in dec.bottlenecks[1:]:
        par = dec.home[dec.parent[b]]
        want = max(t.d_to[z] for z in g.out_nbrs[b] if z in par) + 1
        if t.d_to[b] != want:
            errs.append(f"d_to({b})={t.d_to[b]} but parent-side recurrence gives {want}")
    if t.d_star != max(t.d_from[z] for z in g.in_nbrs[ell]) + 1:
        errs.append("D* does not match the longest cycle through the leader")
    for a in g.sorted_arcs:
        u = a[0]
        if dec.is_bottleneck_arc(a):
            if t.d_sub_arc[a] != 0:
                errs.append(f"bottleneck edge {a} must have d_sub 0")
            continue
        want = max(t.d_sub_arc[(x, u)] for x in g.in_nbrs[u]) + 1
        if t.d_sub_arc[a] != want or t.d_sub[u] != want:
            errs.append(f"d_sub{a}={t.d_sub_arc[a]} but recurrence gives {want}")
    if t.b_star != max(t.d_sub_arc[(x, ell)] for x in g.in_nbrs[ell]) + 1:
        errs.append("B* does not match d_sub of the main leader")
    return errs
