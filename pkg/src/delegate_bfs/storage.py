"""CSR subgraph container and the memory accounting model.

The accounting reports *semantic* widths (4-byte offsets and local/delegate
ids, 8-byte global nn destinations), matching the per-kind cost model; a
second field reports actual resident bytes of the backing arrays, which use
wider offset types for convenience.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

KINDS = ("nn", "nd", "dn", "dd")


@dataclass
class CsrSubgraph:
    """One of the four per-worker subgraphs in CSR form.

    Row-id semantics: nn/nd rows are local normal ids, dn/dd rows are global
    dense delegate ids.  Column semantics: nn columns are 64-bit global
    vertex ids; nd/dd columns are delegate ids; dn columns are local normal
    ids.
    """

    kind: str
    row_offsets: np.ndarray
    col_indices: np.ndarray

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown subgraph kind {self.kind!r}")
        if len(self.row_offsets) == 0 or self.row_offsets[-1] != len(self.col_indices):
            raise ValueError("row_offsets do not close over col_indices")
        if np.any(np.diff(self.row_offsets) < 0):
            raise ValueError("row_offsets must be non-decreasing")

    @property
    def num_rows(self) -> int:
        return len(self.row_offsets) - 1

    @property
    def num_edges(self) -> int:
        return len(self.col_indices)

    def degrees(self) -> np.ndarray:
        return np.diff(self.row_offsets)

    def neighbors(self, row: int) -> np.ndarray:
        return self.col_indices[self.row_offsets[row]:self.row_offsets[row + 1]]


@dataclass
class MemoryReport:
    offsets_bytes: dict
    indices_bytes: dict
    total_bytes: int
    resident_bytes: int
    edge_list_bytes: int
    plain_csr_bytes: int

    @property
    def ratio_vs_edge_list(self) -> float:
        return self.total_bytes / self.edge_list_bytes if self.edge_list_bytes else 0.0

    @property
    def ratio_vs_plain_csr(self) -> float:
        return self.total_bytes / self.plain_csr_bytes if self.plain_csr_bytes else 0.0

    def to_dict(self) -> dict:
        return {
            "offsets_bytes": self.offsets_bytes,
            "indices_bytes": self.indices_bytes,
            "total_bytes": self.total_bytes,
            "resident_bytes": self.resident_bytes,
            "edge_list_bytes": self.edge_list_bytes,
            "plain_csr_bytes": self.plain_csr_bytes,
            "ratio_vs_edge_list": self.ratio_vs_edge_list,
            "ratio_vs_plain_csr": self.ratio_vs_plain_csr,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def memory_footprint(pg) -> MemoryReport:
    """Model byte counts for a PartitionedGraph.

    Aggregate identity: offsets total 8n + 8*d*p, index total 4m + 4|E_nn|
    (nn columns at 8 bytes, everything else 4; nn/nd offsets 4 bytes per
    local normal row, dn/dd offsets 4 bytes per delegate row).
    """
    offsets = {k: 0 for k in KINDS}
    indices = {k: 0 for k in KINDS}
    resident = 0
    d = pg.classification.d
    for w in pg.workers:
        for kind in KINDS:
            csr = w.subgraph(kind)
            rows = w.n_local if kind in ("nn", "nd") else d
            offsets[kind] += 4 * rows
            width = 8 if kind == "nn" else 4
            indices[kind] += width * csr.num_edges
            resident += csr.row_offsets.nbytes + csr.col_indices.nbytes
    total = sum(offsets.values()) + sum(indices.values())
    n, m = pg.n, pg.m
    return MemoryReport(
        offsets_bytes=offsets,
        indices_bytes=indices,
        total_bytes=total,
        resident_bytes=resident,
        edge_list_bytes=16 * m,
        plain_csr_bytes=8 * n + 8 * m,
    )
