"""Canonical forms for rooted neighborhoods.

A Pattern is hashable and equal exactly when the rooted balls are isomorphic
as multigraphs with involution (loop kinds and edge multiplicities count).
Trees get a linear-time recursive form; everything else goes through color
refinement plus a minimal-encoding search over the residual symmetry.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass

from .core import Ball, SerreGraph, ball, tree_ball


@dataclass(frozen=True)
class Pattern:
    radius: int
    nv: int
    ne: int
    is_tree: bool
    key: tuple


def _rank(vals):
    idx = {c: i for i, c in enumerate(sorted(set(vals)))}
    return [idx[c] for c in vals]


def _refine(n, seed, nbr):
    colors = _rank(seed)
    while True:
        new = _rank([(colors[v], tuple(sorted(colors[w] for w in nbr[v])))
                     for v in range(n)])
        if new == colors:
            return colors
        colors = new


def _ahu_string(g: SerreGraph, dist) -> str:
    children = [[] for _ in range(g.nv)]
    for e in range(g.ne):
        u, w = g.src[e], g.dst[e]
        if dist[w] == dist[u] + 1:
            children[u].append(w)

    def canon(v):
        return "(" + "".join(sorted(canon(c) for c in children[v])) + ")"

    return canon(0)


def _canonical_records(g: SerreGraph, dist) -> tuple:
    """Minimal per-position encoding over all orderings that sort the stable
    coloring. Root occupies position 0 because its distance color is unique.
    """
    n = g.nv
    hl = [g.half_loop_count(v) for v in range(n)]
    fl = [g.full_loop_pairs(v) for v in range(n)]
    nbr = [[g.dst[e] for e in g.out_edges(v) if g.dst[e] != v] for v in range(n)]
    seed = [(dist[v], g.degree(v), hl[v], fl[v]) for v in range(n)]
    colors = _refine(n, seed, nbr)
    mult = [Counter(ws) for ws in nbr]
    cells = defaultdict(list)
    for v in range(n):
        cells[colors[v]].append(v)
    cell_sizes = [len(cells[c]) for c in sorted(cells)]
    cell_of_slot = []
    for c in sorted(cells):
        cell_of_slot += [c] * len(cells[c])

    best = None
    pos_of = {}
    used = set()
    acc = []

    def record(v):
        links = sorted((pos_of[w], cnt) for w, cnt in mult[v].items() if w in pos_of)
        return (hl[v], fl[v], tuple(links))

    def rec(t):
        nonlocal best
        if t == n:
            cand = tuple(acc)
            if best is None or cand < best:
                best = cand
            return
        for v in cells[cell_of_slot[t]]:
            if v in used:
                continue
            acc.append(record(v))
            if best is None or tuple(acc) <= best[: t + 1]:
                used.add(v)
                pos_of[v] = t
                rec(t + 1)
                del pos_of[v]
                used.discard(v)
            acc.pop()

    rec(0)
    assert best is not None
    return (tuple(cell_sizes), best)


def pattern_of_ball(b: Ball) -> Pattern:
    g = b.graph
    tree = b.is_tree
    if tree:
        key = ("t", b.radius, _ahu_string(g, b.dist))
    else:
        key = ("g", b.radius, _canonical_records(g, b.dist))
    return Pattern(radius=b.radius, nv=g.nv, ne=g.ne, is_tree=tree, key=key)


def pattern(g: SerreGraph, root: int, r: int) -> Pattern:
    return pattern_of_ball(ball(g, root, r))


def tree_pattern(d: int, r: int) -> Pattern:
    """Pattern of the radius-r ball in the d-regular tree."""
    rg = tree_ball(d, r)
    return pattern_of_ball(ball(rg.graph, rg.root, r))
