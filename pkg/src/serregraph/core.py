"""Multigraphs with an explicit edge involution.

Every directed edge id e has a partner inv(e) with source and target
swapped. A half-loop is an id with inv(e) == e; it contributes 1 to the
degree of its vertex. A full loop is stored as two mutually inverse ids and
contributes 2. Keeping the involution explicit makes loops, covers, and
non-backtracking conditions unambiguous.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np


class SerreGraph:
    """Immutable multigraph given by parallel edge arrays.

    src[e], dst[e], inv[e] index directed edges 0..ne-1. The constructor
    checks index ranges only; structural coherence of the involution is the
    job of validate(), so that deliberately broken graphs can be built and
    reported on.
    """

    __slots__ = ("nv", "src", "dst", "inv", "name", "_out", "_deg")

    def __init__(self, nv, src, dst, inv, name=None):
        self.nv = int(nv)
        self.src = tuple(src)
        self.dst = tuple(dst)
        self.inv = tuple(inv)
        self.name = name
        ne = len(self.src)
        if len(self.dst) != ne or len(self.inv) != ne:
            raise ValueError("src, dst, inv must have equal length")
        for e in range(ne):
            if not (0 <= self.src[e] < self.nv and 0 <= self.dst[e] < self.nv):
                raise ValueError(f"edge {e} endpoint out of range")
            if not 0 <= self.inv[e] < ne:
                raise ValueError(f"edge {e} involution id out of range")
        out = [[] for _ in range(self.nv)]
        for e in range(ne):
            out[self.src[e]].append(e)
        self._out = tuple(tuple(es) for es in out)
        self._deg = tuple(len(es) for es in out)

    @property
    def ne(self):
        return len(self.src)

    def out_edges(self, v):
        return self._out[v]

    def degree(self, v):
        return self._deg[v]

    @property
    def degrees(self):
        return self._deg

    def is_half_loop(self, e):
        return self.inv[e] == e

    def half_loop_count(self, v):
        return sum(1 for e in self._out[v] if self.inv[e] == e)

    def full_loop_pairs(self, v):
        return sum(1 for e in self._out[v] if self.inv[e] != e and self.dst[e] == v) // 2

    def __repr__(self):
        tag = f" {self.name!r}" if self.name else ""
        return f"<SerreGraph{tag} nv={self.nv} ne={self.ne}>"


@dataclass(frozen=True)
class RootedGraph:
    graph: SerreGraph
    root: int

    def __post_init__(self):
        if not 0 <= self.root < self.graph.nv:
            raise ValueError("root out of range")


@dataclass(frozen=True)
class Walk:
    """Directed-edge sequence; the vertex sequence is derived on demand."""

    start: int
    edges: tuple[int, ...] = ()

    def __len__(self):
        return len(self.edges)

    def vertices(self, g: SerreGraph) -> list[int]:
        vs = [self.start]
        for e in self.edges:
            if g.src[e] != vs[-1]:
                raise ValueError(f"edge {e} does not continue the walk")
            vs.append(g.dst[e])
        return vs

    def is_closed(self, g: SerreGraph) -> bool:
        vs = self.vertices(g)
        return vs[0] == vs[-1]


@dataclass
class ValidationReport:
    ok: bool
    regular_degree: int | None
    degrees: tuple[int, ...]
    problems: list[str] = field(default_factory=list)


def validate(g: SerreGraph) -> ValidationReport:
    """Check the involution axioms and report the degree structure."""
    problems = []
    for e in range(g.ne):
        f = g.inv[e]
        if g.inv[f] != e:
            problems.append(f"edge {e}: inv(inv) = {g.inv[f]} != {e}")
        if g.src[f] != g.dst[e] or g.dst[f] != g.src[e]:
            problems.append(f"edge {e}: inverse {f} does not swap endpoints")
    degs = g.degrees
    regular = degs[0] if g.nv and all(x == degs[0] for x in degs) else None
    return ValidationReport(ok=not problems, regular_degree=regular,
                            degrees=degs, problems=problems)


def require_regular(g: SerreGraph) -> int:
    rep = validate(g)
    if not rep.ok:
        raise ValueError("invalid graph: " + "; ".join(rep.problems[:3]))
    if rep.regular_degree is None:
        raise ValueError(f"graph is not regular: degrees {set(rep.degrees)}")
    return rep.regular_degree


# -- constructors ----------------------------------------------------------


def from_edges(nv, pairs, half_loops=(), name=None) -> SerreGraph:
    """Build from undirected data.

    pairs: (u, v) tuples; u == v makes a full loop (two inverse ids).
    half_loops: vertices receiving one self-inverse id each (repeats allowed).
    """
    src, dst, inv = [], [], []
    for u, v in pairs:
        e = len(src)
        src += [u, v]
        dst += [v, u]
        inv += [e + 1, e]
    for v in half_loops:
        e = len(src)
        src.append(v)
        dst.append(v)
        inv.append(e)
    return SerreGraph(nv, src, dst, inv, name=name)


def complete_graph(m):
    return from_edges(m, [(i, j) for i in range(m) for j in range(i + 1, m)], name=f"K{m}")


def cycle_graph(m):
    return from_edges(m, [(i, (i + 1) % m) for i in range(m)], name=f"C{m}")


def petersen():
    outer = [(i, (i + 1) % 5) for i in range(5)]
    spokes = [(i, i + 5) for i in range(5)]
    inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
    return from_edges(10, outer + spokes + inner, name="Petersen")


def prism(m):
    """Circular ladder C_m x K_2, 3-regular."""
    edges = [(i, (i + 1) % m) for i in range(m)]
    edges += [(m + i, m + (i + 1) % m) for i in range(m)]
    edges += [(i, m + i) for i in range(m)]
    return from_edges(2 * m, edges, name=f"prism{m}")


def rose(r):
    """Single vertex with r full loop pairs (2r-regular)."""
    return from_edges(1, [(0, 0)] * r, name=f"rose{r}")


def half_loop_rose(h):
    """Single vertex with h half-loops (h-regular)."""
    return from_edges(1, [], half_loops=[0] * h, name=f"hrose{h}")


def tree_ball(d, r) -> RootedGraph:
    """Radius-r ball of the infinite d-regular tree, rooted at 0."""
    pairs = []
    nv = 1
    frontier = [0]
    for depth in range(r):
        nxt = []
        for v in frontier:
            kids = d if depth == 0 else d - 1
            for _ in range(kids):
                pairs.append((v, nv))
                nxt.append(nv)
                nv += 1
        frontier = nxt
    return RootedGraph(from_edges(nv, pairs, name=f"T{d}ball{r}"), 0)


def triangle_tree_ball(r) -> RootedGraph:
    """Radius-r ball of the 3-regular graph in which every vertex lies on
    exactly one triangle and carries one bridge edge (triangles joined in a
    tree pattern). Interior vertices get both; boundary growth is truncated.
    """
    pairs = []
    nv = 1
    has_triangle = {0: False}
    has_bridge = {0: False}
    depth = {0: 0}
    queue = deque([0])

    def fresh(dep, triangle, bridge):
        nonlocal nv
        w = nv
        nv += 1
        has_triangle[w] = triangle
        has_bridge[w] = bridge
        depth[w] = dep
        queue.append(w)
        return w

    while queue:
        v = queue.popleft()
        if depth[v] >= r:
            continue
        if not has_triangle[v]:
            a = fresh(depth[v] + 1, True, False)
            b = fresh(depth[v] + 1, True, False)
            pairs += [(v, a), (v, b), (a, b)]
            has_triangle[v] = True
        if not has_bridge[v]:
            w = fresh(depth[v] + 1, False, True)
            pairs.append((v, w))
            has_bridge[v] = True
    return RootedGraph(from_edges(nv, pairs, name=f"triangletree{r}"), 0)


def disjoint_union(a: SerreGraph, b: SerreGraph, name=None) -> SerreGraph:
    off_v, off_e = a.nv, a.ne
    src = list(a.src) + [v + off_v for v in b.src]
    dst = list(a.dst) + [v + off_v for v in b.dst]
    inv = list(a.inv) + [e + off_e for e in b.inv]
    return SerreGraph(a.nv + b.nv, src, dst, inv, name=name)


def adjacency(g: SerreGraph) -> np.ndarray:
    """Dense multiplicity matrix; A[u, v] = number of directed edges u -> v.

    A half-loop adds 1 to the diagonal, a full loop pair adds 2. Row sums
    equal degrees.
    """
    A = np.zeros((g.nv, g.nv), dtype=np.int64)
    for e in range(g.ne):
        A[g.src[e], g.dst[e]] += 1
    return A


# -- traversal helpers -----------------------------------------------------


def distances_from(g: SerreGraph, v: int, cap: int | None = None) -> dict[int, int]:
    dist = {v: 0}
    q = deque([v])
    while q:
        u = q.popleft()
        if cap is not None and dist[u] >= cap:
            continue
        for e in g.out_edges(u):
            w = g.dst[e]
            if w not in dist:
                dist[w] = dist[u] + 1
                q.append(w)
    return dist


def is_connected(g: SerreGraph) -> bool:
    if g.nv == 0:
        return True
    return len(distances_from(g, 0)) == g.nv


def connected_components(g: SerreGraph) -> list[list[int]]:
    seen = set()
    comps = []
    for v in range(g.nv):
        if v in seen:
            continue
        comp = sorted(distances_from(g, v))
        seen.update(comp)
        comps.append(comp)
    return comps


def is_tree(g: SerreGraph) -> bool:
    """Connected, loop-free (both kinds), and exactly nv-1 undirected edges."""
    if any(g.inv[e] == e for e in range(g.ne)):
        return False
    if any(g.src[e] == g.dst[e] for e in range(g.ne)):
        return False
    return is_connected(g) and g.ne == 2 * (g.nv - 1)


def induced_subgraph(g: SerreGraph, vertices) -> tuple[SerreGraph, list[int]]:
    """Subgraph on the given vertices with all edges between them.

    Returns (subgraph, new_to_old). Edge involution is preserved because an
    edge and its inverse have the same endpoint set.
    """
    new_to_old = list(vertices)
    old_to_new = {v: i for i, v in enumerate(new_to_old)}
    keep = [e for e in range(g.ne) if g.src[e] in old_to_new and g.dst[e] in old_to_new]
    eid = {e: i for i, e in enumerate(keep)}
    src = [old_to_new[g.src[e]] for e in keep]
    dst = [old_to_new[g.dst[e]] for e in keep]
    inv = [eid[g.inv[e]] for e in keep]
    return SerreGraph(len(new_to_old), src, dst, inv, name=g.name), new_to_old


@dataclass
class Ball:
    """Induced radius-r neighborhood, relabeled so the root is vertex 0."""

    graph: SerreGraph
    root: int
    radius: int
    new_to_old: list[int]
    dist: tuple[int, ...]  # distance from root per new vertex id

    @property
    def is_tree(self):
        return is_tree(self.graph)

    def pattern(self):
        from .patterns import pattern_of_ball

        return pattern_of_ball(self)


def ball(g: SerreGraph, root: int, r: int) -> Ball:
    if r < 0:
        raise ValueError("radius must be >= 0")
    dist = distances_from(g, root, cap=r)
    order = sorted(dist, key=lambda v: (dist[v], v))
    sub, new_to_old = induced_subgraph(g, order)
    return Ball(graph=sub, root=0, radius=r, new_to_old=new_to_old,
                dist=tuple(dist[v] for v in new_to_old))


# -- regularization and tree completion ------------------------------------


def add_half_loops_to_regularize(g: SerreGraph, d: int) -> SerreGraph:
    degs = g.degrees
    if degs and max(degs) > d:
        raise ValueError(f"max degree {max(degs)} exceeds target {d}")
    src, dst, inv = list(g.src), list(g.dst), list(g.inv)
    for v in range(g.nv):
        for _ in range(d - degs[v]):
            e = len(src)
            src.append(v)
            dst.append(v)
            inv.append(e)
    return SerreGraph(g.nv, src, dst, inv, name=g.name)


def split_full_loops(g: SerreGraph) -> SerreGraph:
    """Replace every full loop pair by two half-loops.

    This is the normalization that leaves the random walk unchanged; it is
    never applied implicitly because cycle classification distinguishes the
    two loop kinds.
    """
    inv = list(g.inv)
    for e in range(g.ne):
        if g.src[e] == g.dst[e] and g.inv[e] != e:
            inv[e] = e
    return SerreGraph(g.nv, g.src, g.dst, inv, name=g.name)


def tree_m_ball(g: SerreGraph, m: int, root: int, r: int) -> Ball:
    """Radius-r ball of the graph completed to degree m with glued trees.

    Original vertices keep their induced edges; every vertex of degree k < m
    grows m-k fresh branches whose interior vertices have degree m. Added
    vertices form a forest hanging off the original graph.
    """
    degs = g.degrees
    if degs and max(degs) > m:
        raise ValueError(f"max degree {max(degs)} exceeds m={m}")
    base = ball(g, root, r)
    src = list(base.graph.src)
    dst = list(base.graph.dst)
    inv = list(base.graph.inv)
    nv = base.graph.nv
    dist = list(base.dist)

    def add_edge(u, v):
        e = len(src)
        src.extend((u, v))
        dst.extend((v, u))
        inv.extend((e + 1, e))

    frontier = []  # (vertex, missing-children count)
    for v in range(base.graph.nv):
        old = base.new_to_old[v]
        if dist[v] < r:
            deficit = m - g.degree(old)
            if deficit > 0:
                frontier.append((v, deficit, dist[v]))
    while frontier:
        v, kids, dv = frontier.pop()
        if dv >= r:
            continue
        for _ in range(kids):
            w = nv
            nv += 1
            dist.append(dv + 1)
            add_edge(v, w)
            if dv + 1 < r:
                frontier.append((w, m - 1, dv + 1))
    graph = SerreGraph(nv, src, dst, inv, name=f"tree{m}({g.name or 'G'})")
    new_to_old = base.new_to_old + [-1] * (nv - base.graph.nv)
    return Ball(graph=graph, root=0, radius=r, new_to_old=new_to_old, dist=tuple(dist))


# -- permutation groups: Cayley graphs and Schreier quotients ---------------


def _perm_inverse(p):
    q = [0] * len(p)
    for i, x in enumerate(p):
        q[x] = i
    return tuple(q)


def _involution_pairing(gens):
    """Pair generator indices so paired permutations are mutual inverses.

    Self-paired indices must be involutions. Raises if the multiset of
    generators is not closed under inversion.
    """
    gens = [tuple(p) for p in gens]
    pair = [None] * len(gens)
    for i, p in enumerate(gens):
        if pair[i] is not None:
            continue
        pinv = _perm_inverse(p)
        if pinv == p:
            pair[i] = i
            continue
        for j in range(i + 1, len(gens)):
            if pair[j] is None and gens[j] == pinv:
                pair[i], pair[j] = j, i
                break
        else:
            raise ValueError(f"generator {i} has no inverse in the set")
    return pair


def cayley_graph(gens, name=None) -> SerreGraph:
    """Cayley graph on 0..N-1 from right-multiplication permutations.

    Each generator index contributes one out-edge per vertex; the edge for
    index i at x ends at gens[i][x] and its inverse carries the paired index.
    """
    gens = [tuple(p) for p in gens]
    if not gens:
        raise ValueError("need at least one generator")
    n = len(gens[0])
    for p in gens:
        if sorted(p) != list(range(n)):
            raise ValueError("generators must be permutations of range(N)")
        if p == tuple(range(n)):
            raise ValueError("identity is not allowed as a generator")
    pair = _involution_pairing(gens)
    k = len(gens)
    src, dst, inv = [], [], []
    for x in range(n):
        for i in range(k):
            src.append(x)
            dst.append(gens[i][x])
            inv.append(gens[i][x] * k + pair[i])
    return SerreGraph(n, src, dst, inv, name=name or "Cayley")


@dataclass
class SchreierResult:
    graph: SerreGraph
    cayley: SerreGraph
    coset_of: tuple[int, ...]       # element -> quotient vertex
    subgroup_order: int
    cover_verified: bool
    trivial_coset_loops: int        # loop edge ids at the image of identity


def schreier_quotient(gens, s_index: int) -> SchreierResult:
    """Quotient of the Cayley graph by the left action of the cyclic group
    generated by one chosen generator.

    Vertices are right cosets <s>g; each generator index induces one edge per
    coset, with multiplicities kept, so the Cayley graph covers the quotient
    |<s>|-to-1. The identity coset always carries a loop labeled by s.
    """
    gens = [tuple(p) for p in gens]
    n = len(gens[0])
    if not 0 <= s_index < len(gens):
        raise ValueError("s_index out of range")
    pair = _involution_pairing(gens)
    # right-multiplication table R[x] for every element x, by BFS from id=0
    R = {0: tuple(range(n))}
    q = deque([0])
    while q:
        x = q.popleft()
        for g in gens:
            y = g[x]
            if y not in R:
                R[y] = tuple(g[z] for z in R[x])
                q.append(y)
    if len(R) != n:
        raise ValueError("generators do not generate the group")
    s = gens[s_index]
    # <s> as an element set: orbit of the identity under right mult by s
    H = [0]
    cur = s[0]
    while cur != 0:
        H.append(cur)
        cur = s[cur]
    coset_of = [None] * n
    reps = []
    for x in range(n):
        if coset_of[x] is None:
            cid = len(reps)
            reps.append(x)
            Rx = R[x]
            for h in H:
                coset_of[Rx[h]] = cid
    nq = len(reps)
    k = len(gens)
    src, dst, inv = [], [], []
    for c in range(nq):
        x = reps[c]
        for i in range(k):
            src.append(c)
            dst.append(coset_of[gens[i][x]])
            inv.append(coset_of[gens[i][x]] * k + pair[i])
    quotient = SerreGraph(nq, src, dst, inv, name="Schreier")
    cay = cayley_graph(gens, name="Cayley")

    # covering verification: the edge map (x, i) -> (coset(x), i) must
    # preserve endpoints and involution, and be a bijection on out-edges at
    # every vertex
    ok = True
    for x in range(n):
        imgs = set()
        for i in range(k):
            e_cov = x * k + i
            e_q = coset_of[x] * k + i
            if coset_of[cay.dst[e_cov]] != quotient.dst[e_q]:
                ok = False
            ic = cay.inv[e_cov]
            if coset_of[cay.src[ic]] * k + ic % k != quotient.inv[e_q]:
                ok = False
            imgs.add(e_q)
        if len(imgs) != quotient.degree(coset_of[x]):
            ok = False
    loops0 = sum(1 for e in quotient.out_edges(0) if quotient.dst[e] == 0)
    return SchreierResult(graph=quotient, cayley=cay, coset_of=tuple(coset_of),
                          subgroup_order=len(H), cover_verified=ok,
                          trivial_coset_loops=loops0)
