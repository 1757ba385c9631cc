"""BSP driver: iteration loop, termination, result assembly, TEPS.

One iteration = ingest inboxes -> previsit -> per-kind visits (direction
chosen independently by each worker for each kind from its local workload
estimate) -> delegate mask reduction + normal vertex exchange at the
barrier -> apply local updates.  Direction choices never change results,
only the inspection counters.
"""

from __future__ import annotations

import hashlib
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import comm, oracle, traversal
from .comm import CommStats, DelegateMask, Outbox
from .partition import PartitionedGraph
from .rmat import EdgeList
from .traversal import (BACKWARD, DO_KINDS, FORWARD, DirectionState,
                        WorkloadEstimate)

MODES = ("bfs", "dobfs")


class EmptyReportError(RuntimeError):
    """Every benchmark run was discarded (S <= 1)."""


@dataclass
class BfsOptions:
    mode: str = "dobfs"
    source: int = 0
    factor0: dict = field(default_factory=lambda: dict(traversal.DEFAULT_FACTOR0))
    factor1: dict = field(default_factory=lambda: dict(traversal.DEFAULT_FACTOR1))
    local_all2all: bool = False
    uniquify: bool = False
    allow_switch_back: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")


@dataclass
class BfsRun:
    levels: np.ndarray
    iterations: int
    per_iteration: list
    inspections: dict          # {kind: {forward: int, backward: int}}
    comm_stats: CommStats
    b_measured: float
    elapsed: float
    teps: float
    levels_digest: str
    m_prime: int | None = None

    @property
    def total_inspections(self) -> int:
        return sum(v["forward"] + v["backward"] for v in self.inspections.values())

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "per_iteration": self.per_iteration,
            "inspections": self.inspections,
            "total_inspections": self.total_inspections,
            "comm": self.comm_stats.to_dict(),
            "b_measured": self.b_measured,
            "m_prime": self.m_prime,
            "elapsed": self.elapsed,
            "teps": self.teps,
            "levels_digest": self.levels_digest,
        }


def levels_digest(levels: np.ndarray) -> str:
    data = np.ascontiguousarray(levels, dtype="<i4").tobytes()
    return hashlib.blake2b(data, digest_size=8).hexdigest()


def compute_teps(m: int, elapsed: float) -> float:
    """Traversal rate over the undoubled edge count, per Graph500 convention."""
    if elapsed <= 0:
        raise ValueError("elapsed must be positive")
    return (m / 2) / elapsed


def run_reference_bfs(g: EdgeList, source: int) -> np.ndarray:
    """Sequential BFS hop distances on the undirected multigraph (oracle)."""
    return oracle.bfs_levels(g, source)


def run_bfs(pg: PartitionedGraph, opts: BfsOptions) -> BfsRun:
    t0 = time.perf_counter()
    shape = pg.shape
    p = shape.p
    cls = pg.classification
    d = cls.d
    n = pg.n
    if not (0 <= opts.source < n):
        raise ValueError(f"source {opts.source} out of range [0, {n})")

    workers = pg.workers
    deg = [
        {k: w.subgraph(k).degrees() for k in ("nn", "nd", "dn", "dd")}
        for w in workers
    ]
    normal_levels = [np.full(w.n_local, -1, dtype=np.int32) for w in workers]
    delegate_levels = np.full(d, -1, dtype=np.int32)
    del_id_map = cls.delegate_id_map()

    dirstate = [
        {k: DirectionState(kind=k, factor0=opts.factor0[k],
                           factor1=opts.factor1[k],
                           allow_switch_back=opts.allow_switch_back)
         for k in DO_KINDS}
        for _ in range(p)
    ]
    forced_forward = opts.mode == "bfs"

    new_normals = [np.empty(0, dtype=np.int64) for _ in range(p)]
    new_delegates = np.empty(0, dtype=np.int64)
    inboxes = [(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int32))
               for _ in range(p)]

    src_delegate = del_id_map[opts.source]
    if src_delegate >= 0:
        delegate_levels[src_delegate] = 0
        new_delegates = np.array([src_delegate], dtype=np.int64)
    else:
        owner = opts.source % p
        local = opts.source // p
        normal_levels[owner][local] = 0
        new_normals[owner] = np.array([local], dtype=np.int64)

    comm_stats = CommStats()
    per_iteration = []
    inspections = {k: {"forward": 0, "backward": 0} for k in ("nn", "nd", "dn", "dd")}

    level = 0
    while True:
        # -- ingest inboxes (records carry this iteration's frontier level)
        frontier_n = []
        for w in range(p):
            gids, lvls = inboxes[w]
            cand = np.concatenate([new_normals[w], gids // p]) if len(gids) \
                else new_normals[w]
            if len(gids):
                locs = gids // p
                fresh = normal_levels[w][locs] < 0
                normal_levels[w][locs[fresh]] = lvls[fresh]
            frontier_n.append(cand)

        # -- previsit per worker per kind; each worker decides its own
        #    directions from its local workload estimates
        queues = []
        ests = []
        directions = []
        for w in range(p):
            qn_nn, fv_nn = traversal.previsit(frontier_n[w], deg[w]["nn"],
                                              normal_levels[w], level)
            qn_nd, fv_nd = traversal.previsit(frontier_n[w], deg[w]["nd"],
                                              normal_levels[w], level)
            qd_dn, fv_dn = traversal.previsit(new_delegates, deg[w]["dn"],
                                              delegate_levels, level)
            qd_dd, fv_dd = traversal.previsit(new_delegates, deg[w]["dd"],
                                              delegate_levels, level)
            queues.append({"nn": qn_nn, "nd": qn_nd, "dn": qd_dn, "dd": qd_dd})

            unvisited_delegate = delegate_levels < 0
            u_nd_sources = workers[w].nd_source_list
            u_nd = int((normal_levels[w][u_nd_sources] < 0).sum()) if len(u_nd_sources) else 0
            u_dn_mask = int((workers[w].dn_source_mask & unvisited_delegate).sum())
            u_dd_mask = int((workers[w].dd_source_mask & unvisited_delegate).sum())

            est = {
                "nn": WorkloadEstimate(fv=fv_nn),
                "nd": WorkloadEstimate(fv=fv_nd, u_size=u_dn_mask,
                                       q=len(qn_nd), s=u_nd),
                "dn": WorkloadEstimate(fv=fv_dn, u_size=u_nd,
                                       q=len(qd_dn), s=u_dn_mask),
                "dd": WorkloadEstimate(fv=fv_dd, u_size=u_dd_mask,
                                       q=len(qd_dd), s=u_dd_mask),
            }
            ests.append(est)
            dirs = {"nn": FORWARD}
            for k in DO_KINDS:
                if forced_forward:
                    dirs[k] = FORWARD
                else:
                    dirs[k] = traversal.decide_direction(est[k], dirstate[w][k])
            directions.append(dirs)

        # -- visits
        masks = [DelegateMask.empty(d) for _ in range(p)]
        outboxes = [Outbox(w, p) for w in range(p)]
        local_new = [[] for _ in range(p)]
        iter_insp = {k: 0 for k in ("nn", "nd", "dn", "dd")}
        for w in range(p):
            wg = workers[w]
            # nn: always forward; destinations are global ids routed to owners
            dests, insp = traversal.visit_forward(wg.nn, queues[w]["nn"],
                                                  dedupe=False)
            iter_insp["nn"] += insp
            inspections["nn"]["forward"] += insp
            if len(dests):
                owners = dests % p
                self_mask = owners == w
                if self_mask.any():
                    local_new[w].append(dests[self_mask] // p)
                remote = dests[~self_mask]
                remote_owners = owners[~self_mask]
                for dw in np.unique(remote_owners):
                    sel = remote_owners == dw
                    gids = remote[sel]
                    outboxes[w].add(int(dw), gids,
                                    np.full(len(gids), level + 1, dtype=np.int32))

            # nd: discovers delegates (forward) / pulls via dn csr (backward)
            if directions[w]["nd"] == FORWARD:
                found, insp = traversal.visit_forward(wg.nd, queues[w]["nd"],
                                                      dest_levels=delegate_levels)
                inspections["nd"]["forward"] += insp
            else:
                srcs = np.flatnonzero(wg.dn_source_mask & (delegate_levels < 0))
                found, insp = traversal.visit_backward(wg.dn, srcs,
                                                       normal_levels[w], level)
                inspections["nd"]["backward"] += insp
            iter_insp["nd"] += insp
            masks[w].set_bits(found)

            # dn: discovers local normals (forward) / pulls via nd csr (backward)
            if directions[w]["dn"] == FORWARD:
                found, insp = traversal.visit_forward(wg.dn, queues[w]["dn"],
                                                      dest_levels=normal_levels[w])
                inspections["dn"]["forward"] += insp
            else:
                srcs = wg.nd_source_list
                srcs = srcs[normal_levels[w][srcs] < 0] if len(srcs) else srcs
                found, insp = traversal.visit_backward(wg.nd, srcs,
                                                       delegate_levels, level)
                inspections["dn"]["backward"] += insp
            iter_insp["dn"] += insp
            if len(found):
                local_new[w].append(found)

            # dd: delegate to delegate
            if directions[w]["dd"] == FORWARD:
                found, insp = traversal.visit_forward(wg.dd, queues[w]["dd"],
                                                      dest_levels=delegate_levels)
                inspections["dd"]["forward"] += insp
            else:
                srcs = np.flatnonzero(wg.dd_source_mask & (delegate_levels < 0))
                found, insp = traversal.visit_backward(wg.dd, srcs,
                                                       delegate_levels, level)
                inspections["dd"]["backward"] += insp
            iter_insp["dd"] += insp
            masks[w].set_bits(found)

        # -- barrier: delegate mask reduction + normal vertex exchange
        reduced, mask_bytes = comm.reduce_delegate_masks(masks, shape)
        new_delegates = np.flatnonzero(reduced & (delegate_levels < 0))
        delegate_levels[new_delegates] = level + 1

        xr = comm.exchange_normal_vertices(outboxes, shape,
                                           local_all2all=opts.local_all2all,
                                           do_uniquify=opts.uniquify)
        inboxes = xr.inboxes
        comm_stats.mask_bytes.append(mask_bytes)
        comm_stats.normal_bytes.append(xr.bytes_accounted)
        comm_stats.message_count.append(xr.messages)
        comm_stats.pair_count.append(xr.pair_capacity)

        # -- apply local updates
        any_local = False
        for w in range(p):
            if local_new[w]:
                cand = np.unique(np.concatenate(local_new[w]))
                fresh = cand[normal_levels[w][cand] < 0]
                normal_levels[w][fresh] = level + 1
                new_normals[w] = fresh
                any_local = any_local or len(fresh) > 0
            else:
                new_normals[w] = np.empty(0, dtype=np.int64)

        per_iteration.append({
            "iteration": level,
            "directions": {k: [directions[w][k] for w in range(p)]
                           for k in ("nn", "nd", "dn", "dd")},
            "inspections": iter_insp,
            "fv": {k: sum(e[k].fv for e in ests) for k in ("nn", "nd", "dn", "dd")},
            "bv": {k: [None if not math.isfinite(e[k].bv) else e[k].bv
                       for e in ests]
                   for k in DO_KINDS},
            "mask_bytes": mask_bytes,
            "normal_bytes": xr.bytes_accounted,
        })
        level += 1
        inbox_pending = any(len(g) for g, _ in inboxes)
        if not any_local and len(new_delegates) == 0 and not inbox_pending:
            break

    # -- assemble global hop distances
    levels = np.full(n, -1, dtype=np.int32)
    for w in range(p):
        if workers[w].n_local:
            gids = np.arange(workers[w].n_local, dtype=np.int64) * p + w
            levels[gids] = normal_levels[w]
    levels[cls.delegate_global_ids] = delegate_levels

    backward_delegate_insp = (inspections["nd"]["backward"]
                              + inspections["dd"]["backward"])
    b_measured = backward_delegate_insp / (d * p) if d else 0.0
    elapsed = time.perf_counter() - t0
    return BfsRun(
        levels=levels,
        iterations=level,
        per_iteration=per_iteration,
        inspections=inspections,
        comm_stats=comm_stats,
        b_measured=b_measured,
        elapsed=elapsed,
        teps=compute_teps(pg.m, elapsed),
        levels_digest=levels_digest(levels),
    )


def benchmark(pg: PartitionedGraph, sources, opts: BfsOptions) -> dict:
    """Run BFS from each source, discard trivial runs (S <= 1), and report
    geometric-mean TEPS with totals per phase."""
    import dataclasses

    runs = []
    for s in sources:
        run = run_bfs(pg, dataclasses.replace(opts, source=int(s)))
        if run.iterations > 1:
            runs.append((int(s), run))
    if not runs:
        raise EmptyReportError("all runs discarded (every source trivial)")
    teps = np.array([r.teps for _, r in runs])
    geomean = float(np.exp(np.log(teps).mean()))
    return {
        "num_runs": len(runs),
        "num_discarded": len(list(sources)) - len(runs),
        "geomean_teps": geomean,
        "runs": [
            {
                "source": s,
                "iterations": r.iterations,
                "teps": r.teps,
                "total_inspections": r.total_inspections,
                "mask_bytes": r.comm_stats.total_mask_bytes,
                "normal_bytes": r.comm_stats.total_normal_bytes,
                "s_prime": r.comm_stats.s_prime,
                "levels_digest": r.levels_digest,
            }
            for s, r in runs
        ],
    }
