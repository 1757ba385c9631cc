"""Simulated two-tier communication with exact volume accounting.

Transport is an in-memory buffer swap at the BSP barrier.  Wire accounting
follows the analytic model (bits for delegate masks, 4 bytes per normal
vertex record), independent of the in-memory record layout; resident record
bytes are reported separately.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class RoutingError(ValueError):
    """A record was addressed to a worker that does not own the vertex."""


class StructuralError(ValueError):
    """Mask length mismatch between workers."""


@dataclass
class DelegateMask:
    bits: np.ndarray
    dirty: bool = False

    @classmethod
    def empty(cls, d: int) -> "DelegateMask":
        return cls(bits=np.zeros(d, dtype=bool), dirty=False)

    def set_bits(self, ids: np.ndarray) -> None:
        if len(ids):
            self.bits[ids] = True
            self.dirty = True


@dataclass
class CommStats:
    mask_bytes: list = field(default_factory=list)
    normal_bytes: list = field(default_factory=list)
    message_count: list = field(default_factory=list)
    pair_count: list = field(default_factory=list)

    @property
    def total_mask_bytes(self) -> float:
        return sum(self.mask_bytes)

    @property
    def total_normal_bytes(self) -> int:
        return sum(self.normal_bytes)

    @property
    def total_messages(self) -> int:
        return sum(self.message_count)

    @property
    def s_prime(self) -> int:
        """Iterations that actually performed a delegate-mask reduction."""
        return sum(1 for b in self.mask_bytes if b > 0)

    def to_dict(self) -> dict:
        return {
            "mask_bytes": self.mask_bytes,
            "normal_bytes": self.normal_bytes,
            "message_count": self.message_count,
            "pair_count": self.pair_count,
            "total_mask_bytes": self.total_mask_bytes,
            "total_normal_bytes": self.total_normal_bytes,
            "s_prime": self.s_prime,
        }


def reduce_delegate_masks(masks: list, shape) -> tuple[np.ndarray, float]:
    """Two-phase bitwise-OR reduction of per-worker delegate masks.

    Phase 1 ORs masks across GPUs within each rank; phase 2 ORs the per-rank
    results across ranks.  Skipped entirely (zero bytes) when no worker is
    dirty.  A performed reduction accounts 2 * d * p_rank / 8 bytes.
    """
    d = len(masks[0].bits)
    for mk in masks:
        if len(mk.bits) != d:
            raise StructuralError(
                f"mask length mismatch: {len(mk.bits)} != {d}")
    if not any(mk.dirty for mk in masks):
        return np.zeros(d, dtype=bool), 0.0
    rank_masks = []
    for r in range(shape.p_rank):
        acc = np.zeros(d, dtype=bool)
        for g in range(shape.p_gpu):
            acc |= masks[r + shape.p_rank * g].bits
        rank_masks.append(acc)
    result = np.zeros(d, dtype=bool)
    for acc in rank_masks:
        result |= acc
    return result, 2.0 * d * shape.p_rank / 8.0


class Outbox:
    """Per-sender bins of (global normal vertex id, level) records."""

    def __init__(self, sender: int, p: int):
        self.sender = sender
        self.p = p
        self._bins = [[] for _ in range(p)]

    def add(self, dest: int, gids: np.ndarray, levels: np.ndarray) -> None:
        if len(gids):
            self._bins[dest].append((np.asarray(gids, dtype=np.int64),
                                     np.asarray(levels, dtype=np.int32)))

    def bin(self, dest: int) -> tuple[np.ndarray, np.ndarray]:
        parts = self._bins[dest]
        if not parts:
            return (np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int32))
        return (np.concatenate([p[0] for p in parts]),
                np.concatenate([p[1] for p in parts]))


def uniquify(gids: np.ndarray, levels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Collapse duplicate vertex ids in one destination bin."""
    if len(gids) == 0:
        return gids, levels
    uniq, first = np.unique(gids, return_index=True)
    return uniq, levels[first]


@dataclass
class ExchangeResult:
    inboxes: list            # per worker: (gids, levels)
    bytes_accounted: int     # 4 bytes per delivered record
    messages: int            # nonempty sender->dest transfers
    pair_capacity: int       # communication pairs the pattern allows


def exchange_normal_vertices(outboxes: list, shape, local_all2all: bool = False,
                             do_uniquify: bool = False) -> ExchangeResult:
    """Deliver every outbox record to the owner worker of its vertex.

    With local_all2all, records first regroup within each rank so that the
    cross-rank stage only connects workers sharing a GPU index, cutting the
    pair capacity from p^2 to p^2/p_gpu.  Uniquify deduplicates each
    final-destination bin at the last sending hop.  Accounting is 4 bytes
    per record delivered on the final hop.
    """
    p, p_rank, p_gpu = shape.p, shape.p_rank, shape.p_gpu

    # (final_sender, dest) -> [(gids, levels)]
    staged = {}

    def stage(sender, dest, gids, levels):
        staged.setdefault((sender, dest), []).append((gids, levels))

    for ob in outboxes:
        for dest in range(p):
            gids, levels = ob.bin(dest)
            if len(gids) == 0:
                continue
            if np.any(gids % p != dest):
                bad = int(gids[gids % p != dest][0])
                raise RoutingError(
                    f"vertex {bad} routed to worker {dest}, owner is {bad % p}")
            if local_all2all:
                # intra-rank hop: move to the local worker with dest's gpu index
                r = ob.sender % p_rank
                g2 = dest // p_rank
                stage(r + p_rank * g2, dest, gids, levels)
            else:
                stage(ob.sender, dest, gids, levels)

    inb_gids = [[] for _ in range(p)]
    inb_levels = [[] for _ in range(p)]
    bytes_accounted = 0
    messages = 0
    for (sender, dest), parts in sorted(staged.items()):
        gids = np.concatenate([x[0] for x in parts])
        levels = np.concatenate([x[1] for x in parts])
        if do_uniquify:
            gids, levels = uniquify(gids, levels)
        bytes_accounted += 4 * len(gids)
        messages += 1
        inb_gids[dest].append(gids)
        inb_levels[dest].append(levels)

    inboxes = []
    for w in range(p):
        if inb_gids[w]:
            inboxes.append((np.concatenate(inb_gids[w]),
                            np.concatenate(inb_levels[w])))
        else:
            inboxes.append((np.empty(0, dtype=np.int64),
                            np.empty(0, dtype=np.int32)))
    pair_capacity = p * p // p_gpu if local_all2all else p * p
    return ExchangeResult(inboxes=inboxes, bytes_accounted=bytes_accounted,
                          messages=messages, pair_capacity=pair_capacity)
