"""Degree separation and edge distribution onto a simulated GPU cluster.

Vertices with out-degree above the threshold theta become delegates,
replicated on every worker; everything else stays a normal vertex owned by
worker (v mod p).  Each edge goes to exactly one (rank, gpu) worker:

    P(v) = v mod p_rank,  G(v) = (v / p_rank) mod p_gpu
    u normal                     -> rank P(u), gpu G(u)
    elif v normal                -> rank P(v), gpu G(v)
    elif od(u) < od(v)           -> rank P(u), gpu G(u)
    elif od(u) > od(v)           -> rank P(v), gpu G(v)
    else                         -> home of min(u, v)

Note worker_index(v) = P(v) + p_rank * G(v) = v mod p, so the local id of an
owned normal vertex is simply v div p: dense, invertible, no lookup tables.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .rmat import EdgeList
from .storage import KINDS, CsrSubgraph

KIND_CODES = {"nn": 0, "nd": 1, "dn": 2, "dd": 3}

DPG_MAGIC = b"DPG1"
DPG_VERSION = 1


class CapacityError(OverflowError):
    """A local id does not fit in 32 bits."""


class BucketViolation(ValueError):
    """Structured failure from bucket verification."""

    def __init__(self, message, worker=None, edge=None):
        super().__init__(message)
        self.worker = worker
        self.edge = edge


@dataclass(frozen=True)
class ClusterShape:
    p_rank: int
    p_gpu: int

    def __post_init__(self):
        if self.p_rank < 1 or self.p_gpu < 1:
            raise ValueError("p_rank and p_gpu must be positive")

    @property
    def p(self) -> int:
        return self.p_rank * self.p_gpu

    def worker_of(self, v):
        """Owner worker index of normal vertex v (= v mod p)."""
        return v % self.p

    def rank_gpu(self, worker: int) -> tuple[int, int]:
        return worker % self.p_rank, worker // self.p_rank

    @classmethod
    def parse(cls, text: str) -> "ClusterShape":
        """Parse 'nodes x ranks x gpus' (e.g. 2x2x2) or 'ranks x gpus'."""
        parts = [int(x) for x in text.lower().split("x")]
        if len(parts) == 3:
            nodes, ranks, gpus = parts
            return cls(p_rank=nodes * ranks, p_gpu=gpus)
        if len(parts) == 2:
            return cls(p_rank=parts[0], p_gpu=parts[1])
        raise ValueError(f"bad shape {text!r}; expected NxRxG or RxG")


@dataclass
class VertexClassification:
    theta: int
    out_degree: np.ndarray | None
    delegate_global_ids: np.ndarray  # ascending global ids, index = delegate id
    n: int

    @property
    def d(self) -> int:
        return len(self.delegate_global_ids)

    @property
    def is_delegate(self) -> np.ndarray:
        flags = np.zeros(self.n, dtype=bool)
        flags[self.delegate_global_ids] = True
        return flags

    def delegate_id_map(self) -> np.ndarray:
        """Dense map global id -> delegate id, -1 for normal vertices."""
        ids = np.full(self.n, -1, dtype=np.int64)
        ids[self.delegate_global_ids] = np.arange(self.d, dtype=np.int64)
        return ids


def compute_out_degrees(g: EdgeList) -> np.ndarray:
    return np.bincount(g.src, minlength=g.n).astype(np.int64)


def classify_vertices(degrees: np.ndarray, theta: int,
                      shape: ClusterShape | None = None) -> VertexClassification:
    if theta < 0:
        raise ValueError("theta must be >= 0")
    delegate_ids = np.flatnonzero(degrees > theta).astype(np.int64)
    return VertexClassification(
        theta=theta,
        out_degree=np.asarray(degrees, dtype=np.int64),
        delegate_global_ids=delegate_ids,
        n=len(degrees),
    )


@dataclass
class EdgeBuckets:
    """Distributed edges, grouped by (worker, kind), endpoints still global."""

    shape: ClusterShape
    src: np.ndarray
    dst: np.ndarray
    worker: np.ndarray
    kind_code: np.ndarray
    _order: np.ndarray = field(repr=False, default=None)
    _bounds: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self._order is None:
            group = self.worker.astype(np.int64) * 4 + self.kind_code
            self._order = np.argsort(group, kind="stable")
            counts = np.bincount(group, minlength=self.shape.p * 4)
            self._bounds = np.concatenate([[0], np.cumsum(counts)])

    @property
    def m(self) -> int:
        return len(self.src)

    def edges(self, worker: int, kind: str) -> tuple[np.ndarray, np.ndarray]:
        g = worker * 4 + KIND_CODES[kind]
        sel = self._order[self._bounds[g]:self._bounds[g + 1]]
        return self.src[sel], self.dst[sel]

    def bucket_size(self, worker: int, kind: str) -> int:
        g = worker * 4 + KIND_CODES[kind]
        return int(self._bounds[g + 1] - self._bounds[g])

    def edges_per_worker(self) -> np.ndarray:
        return np.bincount(self.worker, minlength=self.shape.p)


def distribute_edges(g: EdgeList, cls: VertexClassification,
                     shape: ClusterShape) -> EdgeBuckets:
    """Route every edge to a worker per the distributor rule; tag its kind."""
    u, v = g.src, g.dst
    is_del = cls.is_delegate
    du, dv = is_del[u], is_del[v]
    deg = cls.out_degree
    p = shape.p

    home_u = u % p
    home_v = v % p
    lower_u = deg[u] < deg[v]
    higher_u = deg[u] > deg[v]
    tie_u = ~lower_u & ~higher_u & (u <= v)
    dd_to_u = lower_u | tie_u
    worker = np.where(
        ~du, home_u,
        np.where(~dv, home_v, np.where(dd_to_u, home_u, home_v)),
    )
    kind_code = (du.astype(np.int8) << 1) | dv.astype(np.int8)
    return EdgeBuckets(shape=shape, src=u.copy(), dst=v.copy(),
                       worker=worker.astype(np.int64), kind_code=kind_code)


@dataclass
class BucketReport:
    symmetric_ok: bool
    bounds_ok: bool
    max_edges: int
    min_edges: int
    mean_edges: float
    violations: list

    @property
    def balance_spread(self) -> float:
        """(max - min) / mean edges per worker; 0 when empty."""
        return (self.max_edges - self.min_edges) / self.mean_edges if self.mean_edges else 0.0

    @property
    def ok(self) -> bool:
        return self.symmetric_ok and self.bounds_ok


def verify_buckets(buckets: EdgeBuckets, cls: VertexClassification,
                   shape: ClusterShape, strict: bool = False) -> BucketReport:
    """Check the symmetry, bounded-size, and balance claims of the distributor.

    Symmetry: on each worker, nd+dn+dd edges are closed under reversal.
    Bounds: distinct normal endpoints of non-nn edges plus nn sources are all
    owned locals (<= ceil(n/p) of them); distinct delegates <= d.
    """
    violations = []
    n, p = cls.n, shape.p
    cap = -(-n // p)
    for w in range(p):
        sym_src, sym_dst = [], []
        for kind in ("nd", "dn", "dd"):
            s, t = buckets.edges(w, kind)
            sym_src.append(s)
            sym_dst.append(t)
        s = np.concatenate(sym_src)
        t = np.concatenate(sym_dst)
        fwd = np.lexsort((t, s))
        rev = np.lexsort((s, t))
        if not (np.array_equal(s[fwd], t[rev]) and np.array_equal(t[fwd], s[rev])):
            # name one offending edge: an (s, t) whose reverse is missing
            fwd_pairs = set(zip(s.tolist(), t.tolist()))
            for a, b in fwd_pairs:
                if (b, a) not in fwd_pairs:
                    violations.append(("symmetry", w, (a, b)))
                    break
            else:
                violations.append(("symmetry", w, None))

        nn_s, nn_t = buckets.edges(w, "nn")
        nd_s, _ = buckets.edges(w, "nd")
        _, dn_t = buckets.edges(w, "dn")
        local_normals = np.unique(np.concatenate([nn_s, nd_s, dn_t]))
        if len(local_normals) > cap:
            violations.append(("normal-bound", w, None))
        misowned = local_normals[local_normals % p != w]
        if len(misowned):
            violations.append(("ownership", w, int(misowned[0])))
        delegates = np.concatenate([
            buckets.edges(w, "dn")[0], buckets.edges(w, "dd")[0],
            buckets.edges(w, "dd")[1], buckets.edges(w, "nd")[1],
        ])
        if len(np.unique(delegates)) > cls.d:
            violations.append(("delegate-bound", w, None))

    per_worker = buckets.edges_per_worker()
    report = BucketReport(
        symmetric_ok=not any(v[0] == "symmetry" for v in violations),
        bounds_ok=not any(v[0] in ("normal-bound", "delegate-bound", "ownership")
                          for v in violations),
        max_edges=int(per_worker.max()),
        min_edges=int(per_worker.min()),
        mean_edges=float(per_worker.mean()),
        violations=violations,
    )
    if strict and not report.ok:
        kind, w, edge = violations[0]
        raise BucketViolation(f"{kind} violated on worker {w} (edge {edge})",
                              worker=w, edge=edge)
    return report


@dataclass
class WorkerGraph:
    """Everything one simulated worker holds: four CSRs plus backward aids."""

    index: int
    n_local: int
    nn: CsrSubgraph
    nd: CsrSubgraph
    dn: CsrSubgraph
    dd: CsrSubgraph
    nd_source_list: np.ndarray   # local normal ids with outgoing nd edges
    dn_source_mask: np.ndarray   # bool[d]: delegate has dn edges here
    dd_source_mask: np.ndarray   # bool[d]: delegate has dd edges here

    def subgraph(self, kind: str) -> CsrSubgraph:
        return getattr(self, kind)


@dataclass
class PartitionedGraph:
    shape: ClusterShape
    classification: VertexClassification
    workers: list
    n: int
    m: int
    kind_totals: dict

    @property
    def num_nn_edges(self) -> int:
        return self.kind_totals["nn"]


def _build_csr(rows, cols, num_rows, col_dtype) -> CsrSubgraph:
    order = np.argsort(rows, kind="stable")
    counts = np.bincount(rows, minlength=num_rows) if len(rows) else np.zeros(num_rows, dtype=np.int64)
    offsets = np.zeros(num_rows + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    return CsrSubgraph(kind="nn", row_offsets=offsets,
                       col_indices=cols[order].astype(col_dtype))


def build_partitioned_graph(buckets: EdgeBuckets, cls: VertexClassification,
                            shape: ClusterShape) -> PartitionedGraph:
    """Assemble per-worker CSR subgraphs with locally renumbered 32-bit ids."""
    n, p, d = cls.n, shape.p, cls.d
    if -(-n // p) >= 2 ** 32 or d >= 2 ** 32:
        raise CapacityError("local id space exceeds 32 bits")
    del_id = cls.delegate_id_map()
    workers = []
    kind_totals = {k: 0 for k in KINDS}
    for w in range(p):
        n_local = (n - w + p - 1) // p if w < n else 0
        subs = {}
        for kind in KINDS:
            s, t = buckets.edges(w, kind)
            kind_totals[kind] += len(s)
            rows = (s // p) if kind in ("nn", "nd") else del_id[s]
            if kind == "nn":
                cols, dtype = t, np.int64
            elif kind == "dn":
                cols, dtype = t // p, np.uint32
            else:
                cols, dtype = del_id[t], np.uint32
            num_rows = n_local if kind in ("nn", "nd") else d
            csr = _build_csr(rows, cols, num_rows, dtype)
            csr.kind = kind
            subs[kind] = csr
        nd_sources = np.flatnonzero(np.diff(subs["nd"].row_offsets) > 0).astype(np.int64)
        dn_mask = np.diff(subs["dn"].row_offsets) > 0
        dd_mask = np.diff(subs["dd"].row_offsets) > 0
        workers.append(WorkerGraph(
            index=w, n_local=n_local,
            nn=subs["nn"], nd=subs["nd"], dn=subs["dn"], dd=subs["dd"],
            nd_source_list=nd_sources, dn_source_mask=dn_mask,
            dd_source_mask=dd_mask,
        ))
    return PartitionedGraph(shape=shape, classification=cls, workers=workers,
                            n=n, m=buckets.m, kind_totals=kind_totals)


def partition_graph(g: EdgeList, theta: int, shape: ClusterShape,
                    verify: bool = False) -> PartitionedGraph:
    """Classification + distribution + CSR build in one call."""
    degrees = compute_out_degrees(g)
    cls = classify_vertices(degrees, theta, shape)
    buckets = distribute_edges(g, cls, shape)
    if verify:
        verify_buckets(buckets, cls, shape, strict=True)
    return build_partitioned_graph(buckets, cls, shape)


def reconstruct_edges(pg: PartitionedGraph) -> EdgeList:
    """Invert partitioning: global edge multiset from all workers' CSRs."""
    p = pg.shape.p
    del_ids = pg.classification.delegate_global_ids
    srcs, dsts = [], []
    for w in pg.workers:
        for kind in KINDS:
            csr = w.subgraph(kind)
            deg = csr.degrees()
            row_ids = np.repeat(np.arange(csr.num_rows, dtype=np.int64), deg)
            if kind in ("nn", "nd"):
                s = row_ids * p + w.index
            else:
                s = del_ids[row_ids]
            t = csr.col_indices.astype(np.int64)
            if kind == "dn":
                t = t * p + w.index
            elif kind in ("nd", "dd"):
                t = del_ids[t]
            srcs.append(s)
            dsts.append(t)
    src = np.concatenate(srcs) if srcs else np.empty(0, dtype=np.int64)
    dst = np.concatenate(dsts) if dsts else np.empty(0, dtype=np.int64)
    return EdgeList(src, dst, pg.n, symmetric=True)


def _write_array(f, arr: np.ndarray, dtype) -> None:
    data = np.ascontiguousarray(arr, dtype=dtype)
    f.write(struct.pack("<Q", len(data)))
    f.write(data.tobytes())


def _read_array(f, dtype) -> np.ndarray:
    (count,) = struct.unpack("<Q", f.read(8))
    itemsize = np.dtype(dtype).itemsize
    return np.frombuffer(f.read(count * itemsize), dtype=dtype).copy()


def save_partitioned_graph(pg: PartitionedGraph, directory) -> None:
    """One file per worker: DPG1 format.

    Layout per file (little-endian): magic "DPG1", u32 version, u64 n, u64 m,
    u32 p_rank, u32 p_gpu, i64 theta, u64 d, u32 worker index, u64 n_local;
    then four CSRs in nn/nd/dn/dd order (each: u64-counted row_offsets i64,
    u64-counted col_indices, i64 for nn and u32 otherwise); then the delegate
    global-id map (u64-counted i64), the nd source list (i64), and the dn/dd
    source masks (packed bits, u64-counted u8).
    """
    import os

    os.makedirs(directory, exist_ok=True)
    cls = pg.classification
    for w in pg.workers:
        path = os.path.join(directory, f"worker_{w.index:05d}.dpg")
        with open(path, "wb") as f:
            f.write(DPG_MAGIC)
            f.write(struct.pack("<IQQIIqQIQ", DPG_VERSION, pg.n, pg.m,
                                pg.shape.p_rank, pg.shape.p_gpu, cls.theta,
                                cls.d, w.index, w.n_local))
            for kind in KINDS:
                csr = w.subgraph(kind)
                _write_array(f, csr.row_offsets, np.int64)
                _write_array(f, csr.col_indices,
                             np.int64 if kind == "nn" else np.uint32)
            _write_array(f, cls.delegate_global_ids, np.int64)
            _write_array(f, w.nd_source_list, np.int64)
            _write_array(f, np.packbits(w.dn_source_mask), np.uint8)
            _write_array(f, np.packbits(w.dd_source_mask), np.uint8)


def load_partitioned_graph(directory) -> PartitionedGraph:
    import os

    files = sorted(f for f in os.listdir(directory) if f.endswith(".dpg"))
    if not files:
        raise FileNotFoundError(f"no .dpg worker files in {directory}")
    workers = []
    meta = None
    kind_totals = {k: 0 for k in KINDS}
    for name in files:
        with open(os.path.join(directory, name), "rb") as f:
            if f.read(4) != DPG_MAGIC:
                raise ValueError(f"{name}: bad magic")
            version, n, m, p_rank, p_gpu, theta, d, index, n_local = struct.unpack(
                "<IQQIIqQIQ", f.read(struct.calcsize("<IQQIIqQIQ")))
            if version != DPG_VERSION:
                raise ValueError(f"{name}: unsupported version {version}")
            subs = {}
            for kind in KINDS:
                offsets = _read_array(f, np.int64)
                cols = _read_array(f, np.int64 if kind == "nn" else np.uint32)
                subs[kind] = CsrSubgraph(kind=kind, row_offsets=offsets,
                                         col_indices=cols)
                kind_totals[kind] += subs[kind].num_edges
            del_ids = _read_array(f, np.int64)
            nd_sources = _read_array(f, np.int64)
            dn_mask = np.unpackbits(_read_array(f, np.uint8))[:d].astype(bool)
            dd_mask = np.unpackbits(_read_array(f, np.uint8))[:d].astype(bool)
            meta = (n, m, p_rank, p_gpu, theta, del_ids)
            workers.append(WorkerGraph(
                index=index, n_local=n_local,
                nn=subs["nn"], nd=subs["nd"], dn=subs["dn"], dd=subs["dd"],
                nd_source_list=nd_sources, dn_source_mask=dn_mask,
                dd_source_mask=dd_mask,
            ))
    n, m, p_rank, p_gpu, theta, del_ids = meta
    shape = ClusterShape(p_rank=p_rank, p_gpu=p_gpu)
    cls = VertexClassification(theta=theta, out_degree=None,
                               delegate_global_ids=del_ids, n=n)
    return PartitionedGraph(shape=shape, classification=cls, workers=workers,
                            n=n, m=m, kind_totals=kind_totals)
