"""Supercritical site percolation windows and cover sphere growth.

A window draws one seeded open mask, cuts out the connected cluster of the
central origin, and hands it over as a SerreGraph. Regularized to degree 4
with half-loops, the cluster's universal cover has sphere sizes equal to
non-backtracking path counts from the root; the tail of |S_n|^(1/n) is the
finite stand-in for the lower growth of the infinite cluster's cover.

Finite windows clip the infinite cluster. Counts at radius n are unbiased
only while the metric ball stays off the window border, so every growth
estimate carries a boundary_clean flag instead of silently mixing clipped
and clean radii.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .core import SerreGraph, add_half_loops_to_regularize

__all__ = [
    "PercolationWindow",
    "percolate",
    "cover_sphere_sizes",
    "GrowthEstimate",
    "lower_growth_estimate",
    "window_growth",
]


@dataclass(frozen=True)
class PercolationWindow:
    """Open mask plus the origin cluster as an induced lattice subgraph.

    border_distance is the cluster-metric distance from the origin to the
    nearest cluster vertex on the window edge, None when the cluster stays
    interior (then it is the whole lattice component, nothing was cut).
    """

    width: int
    height: int
    p: float
    seed: int
    open_mask: np.ndarray
    cluster: SerreGraph
    cluster_root: int
    coords: tuple[tuple[int, int], ...]
    border_distance: int | None

    @property
    def origin(self) -> tuple[int, int]:
        return (self.width // 2, self.height // 2)

    @property
    def cluster_size(self) -> int:
        return self.cluster.nv

    @property
    def density(self) -> float:
        return self.cluster.nv / (self.width * self.height)

    @property
    def reaches_boundary(self) -> bool:
        return self.border_distance is not None

    def boundary_clean(self, n: int) -> bool:
        """True when no radius-n count can feel the window cut."""
        return self.border_distance is None or n < self.border_distance


def percolate(width: int, height: int, p: float, seed) -> PercolationWindow:
    """Seeded window, open i.i.d. with probability p, origin cluster by BFS.

    One PCG64 stream drives the whole mask, so windows at the same seed and
    growing p are coupled through shared uniforms: raising p only ever adds
    open vertices, and the cluster never shrinks.
    """
    if width < 1 or height < 1:
        raise ValueError("window must be at least 1x1")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    rng = np.random.Generator(np.random.PCG64(seed))
    mask = rng.random((width, height)) < p
    ox, oy = width // 2, height // 2

    if not mask[ox, oy]:
        empty = SerreGraph(0, (), (), (), name=f"percolation-cluster p={p}")
        return PercolationWindow(width, height, p, seed, mask, empty, -1, (), None)

    index = np.full((width, height), -1, dtype=np.int64)
    coords: list[tuple[int, int]] = []
    dist: list[int] = []
    index[ox, oy] = 0
    coords.append((ox, oy))
    dist.append(0)
    queue = deque([(ox, oy)])
    while queue:
        x, y = queue.popleft()
        dxy = dist[index[x, y]] + 1
        for nx, ny in ((x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)):
            if 0 <= nx < width and 0 <= ny < height and mask[nx, ny] and index[nx, ny] < 0:
                index[nx, ny] = len(coords)
                coords.append((nx, ny))
                dist.append(dxy)
                queue.append((nx, ny))

    src: list[int] = []
    dst: list[int] = []
    inv: list[int] = []
    for v, (x, y) in enumerate(coords):
        for nx, ny in ((x + 1, y), (x, y + 1)):  # each lattice edge once
            if nx < width and ny < height and index[nx, ny] >= 0:
                w = int(index[nx, ny])
                e = len(src)
                src += [v, w]
                dst += [w, v]
                inv += [e + 1, e]
    cluster = SerreGraph(len(coords), src, dst, inv, name=f"percolation-cluster p={p}")

    border = None
    for v, (x, y) in enumerate(coords):
        if x in (0, width - 1) or y in (0, height - 1):
            if border is None or dist[v] < border:
                border = dist[v]
    return PercolationWindow(
        width, height, p, seed, mask, cluster, 0, tuple(coords), border
    )


def cover_sphere_sizes(
    g: SerreGraph, root: int, nmax: int, traverse_half_loops: bool = False
) -> list[int]:
    """|S_n| of the universal cover for n <= nmax: non-backtracking paths.

    Cover vertices at distance n over the root's lift are exactly the
    reduced length-n paths out of the root. Half-loops are their own
    reversal; stepping them is off by default because regularization
    half-loops do not move in the cover (the rule that keeps tree inputs
    and regularized clusters on the same footing), on demand they count as
    steps with d-1 continuations each.

    Counts run in uint64 while the d(d-1)^(n-1) cap fits, then in plain
    integers.
    """
    if not 0 <= root < g.nv:
        raise ValueError("root out of range")
    if nmax < 0:
        raise ValueError("nmax must be >= 0")
    sizes = [1]
    if nmax == 0:
        return sizes
    d = max(g.degrees) if g.nv else 0
    allowed = [traverse_half_loops or g.inv[e] != e for e in range(g.ne)]
    start = [e for e in g.out_edges(root) if allowed[e]]
    if d <= 1 or d * (d - 1) ** (nmax - 1) < 2 ** 64:
        src = np.asarray(g.src, dtype=np.int64) if g.ne else np.zeros(0, np.int64)
        dst = np.asarray(g.dst, dtype=np.int64) if g.ne else np.zeros(0, np.int64)
        inv = np.asarray(g.inv, dtype=np.int64) if g.ne else np.zeros(0, np.int64)
        blocked = ~np.asarray(allowed, dtype=bool) if g.ne else np.zeros(0, bool)
        cur = np.zeros(g.ne, dtype=np.uint64)
        for e in start:
            cur[e] += np.uint64(1)
        for n in range(1, nmax + 1):
            sizes.append(int(cur.sum()))
            if n == nmax:
                break
            inflow = np.zeros(g.nv, dtype=np.uint64)
            np.add.at(inflow, dst, cur)
            cur = inflow[src] - cur[inv]
            cur[blocked] = 0
        return sizes
    cur_l = [0] * g.ne
    for e in start:
        cur_l[e] += 1
    for n in range(1, nmax + 1):
        sizes.append(sum(cur_l))
        if n == nmax:
            break
        inflow_l = [0] * g.nv
        for e in range(g.ne):
            inflow_l[g.dst[e]] += cur_l[e]
        cur_l = [
            inflow_l[g.src[e]] - cur_l[g.inv[e]] if allowed[e] else 0
            for e in range(g.ne)
        ]
    return sizes


def _log_big(x: int) -> float:
    bits = x.bit_length()
    if bits <= 1000:
        return math.log(x)
    shift = bits - 53
    return math.log(x >> shift) + shift * math.log(2)


@dataclass(frozen=True)
class GrowthEstimate:
    """Tail minimum of |S_n|^(1/n) as the finite proxy for lower growth."""

    value: float
    tail_start: int
    rates: tuple[float, ...]
    boundary_clean: bool


def lower_growth_estimate(
    sizes, tail_fraction: float = 0.25, *, boundary_clean: bool = True
) -> GrowthEstimate:
    """min over the last ceil(tail_fraction * nmax) radii of |S_n|^(1/n).

    sizes[0] is |S_0| = 1 and takes no part; a sphere that died gives rate
    0, which then floors the estimate, as a truncated or thin cluster
    should.
    """
    sizes = list(sizes)
    if len(sizes) < 2:
        raise ValueError("need sphere sizes out to radius 1 at least")
    if not 0 < tail_fraction <= 1:
        raise ValueError("tail_fraction must lie in (0, 1]")
    rates = tuple(
        math.exp(_log_big(s) / n) if s > 0 else 0.0
        for n, s in enumerate(sizes[1:], start=1)
    )
    nmax = len(rates)
    tail_start = nmax - math.ceil(tail_fraction * nmax) + 1
    value = min(rates[tail_start - 1 :])
    return GrowthEstimate(value, tail_start, rates, boundary_clean)


def window_growth(
    window: PercolationWindow, nmax: int, tail_fraction: float = 0.25
) -> GrowthEstimate:
    """Regularize the cluster to degree 4 and estimate its cover growth."""
    if window.cluster_root < 0:
        raise ValueError("origin closed: empty cluster has no cover")
    reg = add_half_loops_to_regularize(window.cluster, 4)
    sizes = cover_sphere_sizes(reg, window.cluster_root, nmax)
    return lower_growth_estimate(
        sizes, tail_fraction, boundary_clean=window.boundary_clean(nmax)
    )
