"""Independent brute-force implementations used for cross-checking.

Nothing here shares code with the partitioned engine path; clarity over
speed.  Full-graph routines are meant for n <= 2^20.
"""

from __future__ import annotations

import numpy as np

from .rmat import EdgeList

ORACLE_MAX_N = 1 << 20


def _adjacency(g: EdgeList):
    order = np.argsort(g.src, kind="stable")
    dst_sorted = g.dst[order]
    counts = np.bincount(g.src, minlength=g.n)
    offsets = np.zeros(g.n + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    return offsets, dst_sorted


def _expand(offsets, dst_sorted, frontier):
    starts = offsets[frontier]
    counts = offsets[frontier + 1] - starts
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    ends = np.cumsum(counts)
    pos = np.arange(total, dtype=np.int64) - np.repeat(ends - counts, counts)
    return dst_sorted[np.repeat(starts, counts) + pos]


def bfs_levels(g: EdgeList, source: int) -> np.ndarray:
    """Textbook frontier BFS hop distances; -1 for unreached vertices."""
    if g.n > ORACLE_MAX_N:
        raise ValueError(f"oracle capped at n <= {ORACLE_MAX_N}")
    if not (0 <= source < g.n):
        raise ValueError(f"source {source} out of range [0, {g.n})")
    offsets, dst_sorted = _adjacency(g)
    levels = np.full(g.n, -1, dtype=np.int32)
    levels[source] = 0
    frontier = np.array([source], dtype=np.int64)
    level = 0
    while len(frontier):
        nbrs = np.unique(_expand(offsets, dst_sorted, frontier))
        nbrs = nbrs[levels[nbrs] < 0]
        levels[nbrs] = level + 1
        frontier = nbrs
        level += 1
    return levels


def oracle_distribute(u: int, v: int, degrees, theta: int, shape):
    """Line-by-line transcription of the edge distributor for one edge.

    Returns (rank, gpu, kind) with kind in {nn, nd, dn, dd}.
    """
    p_rank, p_gpu = shape.p_rank, shape.p_gpu

    def P(x):
        return x % p_rank

    def G(x):
        return (x // p_rank) % p_gpu

    u_normal = degrees[u] <= theta
    v_normal = degrees[v] <= theta
    if u_normal:
        rank, gpu = P(u), G(u)
    elif v_normal:
        rank, gpu = P(v), G(v)
    elif degrees[u] < degrees[v]:
        rank, gpu = P(u), G(u)
    elif degrees[u] > degrees[v]:
        rank, gpu = P(v), G(v)
    else:
        w = min(u, v)
        rank, gpu = P(w), G(w)
    kind = ("n" if u_normal else "d") + ("n" if v_normal else "d")
    return int(rank), int(gpu), kind


def oracle_dobfs_inspections(g: EdgeList, source: int, factor0: float = 0.5,
                             factor1: float = 0.0) -> tuple[int, np.ndarray]:
    """Single-processor DOBFS inspection count with the same switching rule.

    Returns (inspections, levels).  The graph must be symmetric so that the
    out-adjacency doubles as the parent list for backward pulls.
    """
    offsets, dst_sorted = _adjacency(g)
    degrees = np.diff(offsets)
    levels = np.full(g.n, -1, dtype=np.int32)
    levels[source] = 0
    frontier = np.array([source], dtype=np.int64)
    frontier = frontier[degrees[frontier] > 0]
    direction = "forward"
    inspections = 0
    level = 0
    while len(frontier):
        fv = int(degrees[frontier].sum())
        unvisited = np.flatnonzero((levels < 0) & (degrees > 0))
        q = len(frontier)
        s = len(unvisited)
        bv = float("inf") if q == 0 else s * (q + s) / q
        if direction == "forward" and fv > factor0 * bv:
            direction = "backward"
        elif direction == "backward" and fv < factor1 * bv:
            direction = "forward"
        if direction == "forward":
            inspections += fv
            nbrs = np.unique(_expand(offsets, dst_sorted, frontier))
            new = nbrs[levels[nbrs] < 0]
        else:
            starts = offsets[unvisited]
            counts = degrees[unvisited]
            total = int(counts.sum())
            ends = np.cumsum(counts)
            seg_starts = ends - counts
            pos = np.arange(total, dtype=np.int64) - np.repeat(seg_starts, counts)
            parents = dst_sorted[np.repeat(starts, counts) + pos]
            hit = levels[parents] == level
            hit_pos = np.where(hit, pos, np.repeat(counts, counts))
            first_hit = np.minimum.reduceat(hit_pos, seg_starts) if total else counts
            found = first_hit < counts
            inspections += int(np.where(found, first_hit + 1, counts).sum())
            new = unvisited[found]
        levels[new] = level + 1
        frontier = new[degrees[new] > 0]
        level += 1
    return inspections, levels


def simulate_backward_scan(num_sources: int, out_degree: int, a: float,
                           seed: int = 0) -> float:
    """Monte-Carlo mean parent checks per source with hit probability a.

    Each source scans parents until the first one flagged newly visited
    (independent Bernoulli(a) flags), up to out_degree checks on a miss.
    """
    rng = np.random.default_rng(seed)
    flags = rng.random((num_sources, out_degree)) < a
    any_hit = flags.any(axis=1)
    first = np.argmax(flags, axis=1)
    checks = np.where(any_hit, first + 1, out_degree)
    return float(checks.mean())
