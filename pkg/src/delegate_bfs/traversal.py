"""Per-worker local traversal steps and the direction decision.

Desk-scale substitute for the GPU kernels: sequential numpy passes per
worker, with edge-inspection counters standing in for kernel timing.
Backward passes account for early exit exactly (inspections up to and
including the first hit parent) even though the arrays are gathered whole.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .storage import CsrSubgraph

UNREACHED = np.int32(-1)

FORWARD = "forward"
BACKWARD = "backward"

DO_KINDS = ("dd", "dn", "nd")

# Paper-tuned switch-out factors for the dd, dn, nd subgraphs; switching back
# to forward is off by default (factor1 = 0 never triggers on RMAT-style runs).
DEFAULT_FACTOR0 = {"dd": 0.5, "dn": 0.05, "nd": 1e-7}
DEFAULT_FACTOR1 = {"dd": 0.0, "dn": 0.0, "nd": 0.0}


@dataclass
class DirectionState:
    kind: str
    factor0: float
    factor1: float
    direction: str = FORWARD
    allow_switch_back: bool = True


@dataclass
class WorkloadEstimate:
    fv: float = 0.0
    u_size: float = 0.0
    q: float = 0.0
    s: float = 0.0

    @property
    def bv(self) -> float:
        return estimate_backward_workload(self.u_size, self.q, self.s)

    def merge(self, other: "WorkloadEstimate") -> None:
        self.fv += other.fv
        self.u_size += other.u_size
        self.q += other.q
        self.s += other.s


def previsit(inputs: np.ndarray, degrees: np.ndarray, levels: np.ndarray,
             level: int) -> tuple[np.ndarray, int]:
    """Clean a frontier: dedupe, drop visited and zero-degree vertices.

    Newly seen inputs get their level label here.  Returns the queue and the
    forward workload (sum of subgraph out-degrees over the queue).
    """
    cand = np.unique(np.asarray(inputs, dtype=np.int64))
    if len(cand) == 0:
        return cand, 0
    lv = levels[cand]
    fresh = cand[(lv < 0) | (lv == level)]
    levels[fresh] = level
    queue = fresh[degrees[fresh] > 0]
    fv = int(degrees[queue].sum())
    return queue, fv


def gather_neighbors(csr: CsrSubgraph, queue: np.ndarray) -> tuple[np.ndarray, int]:
    """All destination ids reachable from queue rows, plus inspection count."""
    if len(queue) == 0:
        return np.empty(0, dtype=csr.col_indices.dtype), 0
    starts = csr.row_offsets[queue]
    counts = csr.row_offsets[queue + 1] - starts
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=csr.col_indices.dtype), 0
    ends = np.cumsum(counts)
    pos = np.arange(total, dtype=np.int64) - np.repeat(ends - counts, counts)
    idx = np.repeat(starts, counts) + pos
    return csr.col_indices[idx], total


def visit_forward(csr: CsrSubgraph, queue: np.ndarray,
                  dest_levels: np.ndarray | None = None,
                  dedupe: bool = True) -> tuple[np.ndarray, int]:
    """Forward push: expand the queue; keep only unreached destinations.

    With dest_levels=None (nn destinations, state unknown locally) all
    destinations are returned for routing; pass dedupe=False there so the
    outbox sees one record per inspected edge, as on the wire.
    """
    dests, inspections = gather_neighbors(csr, queue)
    if len(dests) == 0:
        return dests.astype(np.int64), inspections
    dests = dests.astype(np.int64)
    if dedupe:
        dests = np.unique(dests)
    if dest_levels is not None:
        dests = dests[dest_levels[dests] < 0]
    return dests, inspections


def visit_backward(reverse_csr: CsrSubgraph, sources: np.ndarray,
                   parent_levels: np.ndarray,
                   frontier_level: int) -> tuple[np.ndarray, int]:
    """Backward pull with early exit.

    For each unvisited source, scan its parent list; the first parent whose
    level equals frontier_level claims the source, and inspections count up
    to and including that parent (or the whole list on a miss).
    """
    sources = np.asarray(sources, dtype=np.int64)
    if len(sources) == 0:
        return sources, 0
    starts = reverse_csr.row_offsets[sources]
    counts = reverse_csr.row_offsets[sources + 1] - starts
    nonempty = counts > 0
    sources, starts, counts = sources[nonempty], starts[nonempty], counts[nonempty]
    if len(sources) == 0:
        return sources, 0
    total = int(counts.sum())
    ends = np.cumsum(counts)
    seg_starts = ends - counts
    pos = np.arange(total, dtype=np.int64) - np.repeat(seg_starts, counts)
    parents = reverse_csr.col_indices[np.repeat(starts, counts) + pos].astype(np.int64)
    hit = parent_levels[parents] == frontier_level
    hit_pos = np.where(hit, pos, np.repeat(counts, counts))
    first_hit = np.minimum.reduceat(hit_pos, seg_starts)
    found = first_hit < counts
    inspections = int(np.where(found, first_hit + 1, counts).sum())
    return sources[found], inspections


def estimate_backward_workload(u_size: float, q: float, s: float) -> float:
    """Expected parent checks: |U| * (q + s) / q; infinite with no frontier."""
    if q < 0 or s < 0:
        raise ValueError("q and s must be nonnegative")
    if q == 0:
        return math.inf
    return u_size * (q + s) / q


def decide_direction(est: WorkloadEstimate, ds: DirectionState) -> str:
    """Hysteresis rule: leave forward when FV > factor0*BV, return when
    FV < factor1*BV.  Updates and returns the state's direction."""
    if ds.kind not in DO_KINDS:
        raise ValueError(f"direction optimization undefined for kind {ds.kind!r}")
    bv = est.bv
    if ds.direction == FORWARD:
        if math.isfinite(bv) and est.fv > ds.factor0 * bv:
            ds.direction = BACKWARD
    else:
        if ds.allow_switch_back and est.fv < ds.factor1 * bv:
            ds.direction = FORWARD
    return ds.direction
