"""Small-digraph enumeration up to isomorphism, and random instance generators."""

from __future__ import annotations

import itertools
import random
import string

import networkx as nx
import numpy as np

from .swapgraph import SwapDigraph, is_strongly_connected

NAMES = string.ascii_lowercase


def _pairs(n):
    return [(i, j) for i in range(n) for j in range(n) if i != j]


def _decode(code: int, n: int) -> SwapDigraph:
    arcs = [(NAMES[i], NAMES[j]) for k, (i, j) in enumerate(_pairs(n)) if code >> k & 1]
    return SwapDigraph.from_arcs(arcs, NAMES[:n])


def _strong_masks(n: int) -> np.ndarray:
    pairs = _pairs(n)
    masks = np.arange(1 << len(pairs), dtype=np.int64)
    rows = [np.zeros_like(masks) for _ in range(n)]
    for k, (i, j) in enumerate(pairs):
        rows[i] |= ((masks >> k) & 1) << j
    reach = [rows[i] | (1 << i) for i in range(n)]
    for _ in range(n):
        nxt = []
        for i in range(n):
            acc = reach[i].copy()
            for j in range(n):
                acc |= np.where((reach[i] >> j) & 1, rows[j], 0)
            nxt.append(acc)
        reach = nxt
    full = (1 << n) - 1
    ok = np.ones_like(masks, dtype=bool)
    for i in range(n):
        ok &= reach[i] == full
    return masks[ok]


def canonical_code(g: SwapDigraph) -> tuple[int, int]:
    """(n, minimal adjacency code over all vertex relabelings)."""
    n = len(g.vertices)
    idx = {v: i for i, v in enumerate(g.vertices)}
    pos = {p: k for k, p in enumerate(_pairs(n))}
    best = None
    for perm in itertools.permutations(range(n)):
        code = 0
        for u, v in g.arcs:
            code |= 1 << pos[(perm[idx[u]], perm[idx[v]])]
        if best is None or code < best:
            best = code
    return n, best


def strongly_connected_digraphs(n: int) -> list[SwapDigraph]:
    """Every strongly connected digraph on ``n`` vertices, one per isomorphism class.

    Classes are represented by the adjacency code minimized over all vertex
    permutations; vertices are named ``a``, ``b``, ...
    """
    if n < 2:
        return []
    if n > 5:
        raise ValueError("exhaustive enumeration is limited to n <= 5")
    pairs = _pairs(n)
    pos = {p: k for k, p in enumerate(pairs)}
    masks = _strong_masks(n)
    canon = None
    for perm in itertools.permutations(range(n)):
        img = np.zeros_like(masks)
        for k, (i, j) in enumerate(pairs):
            img |= ((masks >> k) & 1) << pos[(perm[i], perm[j])]
        canon = img if canon is None else np.minimum(canon, img)
    return [_decode(int(c), n) for c in np.unique(canon)]


def count_strongly_connected_bruteforce(n: int) -> int:
    """Independent count: labelled enumeration, BFS reachability, isomorphism tests."""
    pairs = _pairs(n)
    reps: list[nx.DiGraph] = []
    for bits in itertools.product((0, 1), repeat=len(pairs)):
        arcs = [p for p, b in zip(pairs, bits) if b]
        if not _bfs_strong(n, arcs):
            continue
        d = nx.DiGraph(arcs)
        if not any(nx.is_isomorphic(d, r) for r in reps):
            reps.append(d)
    return len(reps)


def _bfs_strong(n, arcs):
    if n < 2:
        return False
    out = [[] for _ in range(n)]
    back = [[] for _ in range(n)]
    for i, j in arcs:
        out[i].append(j)
        back[j].append(i)
    for adj in (out, back):
        seen, stack = {0}, [0]
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        if len(seen) != n:
            return False
    return True


def random_strongly_connected(rng: random.Random, n: int, p: float | None = None) -> SwapDigraph:
    names = NAMES[:n]
    while True:
        q = p if p is not None else rng.uniform(0.25, 0.75)
        arcs = [(u, v) for u in names for v in names if u != v and rng.random() < q]
        g = SwapDigraph.from_arcs(arcs, names)
        if arcs and is_strongly_connected(g):
            return g


def _random_bottleneck(rng, leader, others):
    """Random bottleneck digraph on ``[leader] + others`` with ``leader`` on every cycle."""
    order = list(others)
    rng.shuffle(order)
    arcs = set()
    for i, v in enumerate(order):
        preds = [leader] + order[:i]
        arcs.add((rng.choice(preds), v))
        succs = order[i + 1 :] + [leader]
        arcs.add((v, rng.choice(succs)))
        for w in order[i + 1 :]:
            if rng.random() < 0.3:
                arcs.add((v, w))
        if rng.random() < 0.3:
            arcs.add((leader, v))
        if rng.random() < 0.3:
            arcs.add((v, leader))
    return arcs


def random_reuniclus(rng: random.Random, n: int) -> SwapDigraph:
    """Random reuniclus digraph with exactly ``n`` vertices.

    Builds bottleneck components of random size and glues each new one at a
    vertex that so far belongs to a single component and leads none.
    """
    labels = list(NAMES[:n])
    rng.shuffle(labels)
    fresh = iter(labels)
    first = next(fresh)
    size = rng.randint(2, n)
    members = [first] + [next(fresh) for _ in range(size - 1)]
    arcs = set(_random_bottleneck(rng, first, members[1:]))
    used = size
    leaders = {first}
    glue_count = {v: 1 for v in members}
    while used < n:
        size = rng.randint(2, n - used + 1)
        spots = sorted(v for v, c in glue_count.items() if c == 1 and v not in leaders)
        if not spots:
            spots = sorted(v for v, c in glue_count.items() if c == 1)
        b = rng.choice(spots)
        new = [next(fresh) for _ in range(size - 1)]
        arcs |= _random_bottleneck(rng, b, new)
        leaders.add(b)
        glue_count[b] += 1
        for v in new:
            glue_count[v] = 1
        used += size - 1
    return SwapDigraph.from_arcs(sorted(arcs), labels)
