"""Graph500-style RMAT edge-list generation and edge-list I/O.

Generation is counter-based: every quadrant draw is produced by hashing
(seed, edge index, recursion level) with a SplitMix64-style finalizer, so the
output is bitwise reproducible and independent of chunking or evaluation
order.  Duplicate edges and self loops are kept, as Graph500 allows.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

DESK_SCALE_CAP = 24

DEFAULT_EDGE_FACTOR = 16
DEFAULT_QUADS = (0.57, 0.19, 0.19, 0.05)

BINARY_MAGIC = b"DEL1"

# SplitMix64 constants (Steele, Lea & Flood); used verbatim.
_MIX_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX_M1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX_M2 = np.uint64(0x94D049BB133111EB)

_GEN_CHUNK = 1 << 18


class ResourceError(ValueError):
    """Requested instance exceeds the configured desk-scale cap."""


class FormatError(ValueError):
    """Malformed edge-list file."""


@dataclass(frozen=True)
class RmatParams:
    scale: int
    edge_factor: int = DEFAULT_EDGE_FACTOR
    a: float = DEFAULT_QUADS[0]
    b: float = DEFAULT_QUADS[1]
    c: float = DEFAULT_QUADS[2]
    d_quad: float = DEFAULT_QUADS[3]
    seed: int = 0
    scale_cap: int = DESK_SCALE_CAP

    def __post_init__(self):
        if self.scale < 0:
            raise ValueError(f"scale must be >= 0, got {self.scale}")
        if self.edge_factor < 1:
            raise ValueError(f"edge_factor must be >= 1, got {self.edge_factor}")
        total = self.a + self.b + self.c + self.d_quad
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"quadrant probabilities sum to {total}, expected 1")
        if self.scale > self.scale_cap:
            raise ResourceError(
                f"scale {self.scale} exceeds desk-scale cap {self.scale_cap}"
            )

    @property
    def n(self) -> int:
        return 1 << self.scale

    @property
    def num_edges(self) -> int:
        return self.n * self.edge_factor


@dataclass
class EdgeList:
    """Flat directed edge set with 64-bit global vertex ids."""

    src: np.ndarray
    dst: np.ndarray
    n: int
    symmetric: bool = False

    def __post_init__(self):
        self.src = np.asarray(self.src, dtype=np.int64)
        self.dst = np.asarray(self.dst, dtype=np.int64)
        if self.src.shape != self.dst.shape:
            raise ValueError("src/dst length mismatch")

    @property
    def m(self) -> int:
        return len(self.src)

    def edge_multiset(self):
        """Sorted (src, dst) pairs; equality of multisets up to ordering."""
        order = np.lexsort((self.dst, self.src))
        return self.src[order], self.dst[order]

    def __eq__(self, other):
        if not isinstance(other, EdgeList):
            return NotImplemented
        return (
            self.n == other.n
            and self.m == other.m
            and bool(np.array_equal(self.src, other.src))
            and bool(np.array_equal(self.dst, other.dst))
        )


def _mix64(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = (x + _MIX_GAMMA).astype(np.uint64)
        z ^= z >> np.uint64(30)
        z *= _MIX_M1
        z ^= z >> np.uint64(27)
        z *= _MIX_M2
        z ^= z >> np.uint64(31)
    return z


def _uniform_draws(seed: int, counters: np.ndarray) -> np.ndarray:
    """Map uint64 counters to uniform doubles in [0, 1)."""
    key = _mix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
    base = _mix64(key ^ counters)
    return (base >> np.uint64(11)) * (2.0 ** -53)


def generate_rmat(params: RmatParams) -> EdgeList:
    """Generate 2^scale * edge_factor directed RMAT edges, deterministically."""
    scale, num = params.scale, params.num_edges
    src = np.empty(num, dtype=np.int64)
    dst = np.empty(num, dtype=np.int64)
    ab = params.a + params.b
    abc = ab + params.c
    for start in range(0, num, _GEN_CHUNK):
        stop = min(start + _GEN_CHUNK, num)
        count = stop - start
        if scale == 0:
            src[start:stop] = 0
            dst[start:stop] = 0
            continue
        counters = (
            np.arange(start, stop, dtype=np.uint64)[:, None] * np.uint64(max(scale, 1))
            + np.arange(scale, dtype=np.uint64)[None, :]
        )
        r = _uniform_draws(params.seed, counters)
        u_bit = r >= ab
        v_bit = ((r >= params.a) & (r < ab)) | (r >= abc)
        weights = np.int64(1) << np.arange(scale - 1, -1, -1, dtype=np.int64)
        src[start:stop] = (u_bit * weights).sum(axis=1)
        dst[start:stop] = (v_bit * weights).sum(axis=1)
        del counters, r, u_bit, v_bit
    return EdgeList(src, dst, n=params.n, symmetric=False)


def hash_randomize_vertices(g: EdgeList, seed: int | None) -> EdgeList:
    """Relabel vertices through a bijective mix modulo n (n a power of two).

    seed=None is the identity configuration.  The map is two rounds of
    (multiply by odd constant, xor-left-shift, add) over the low log2(n) bits;
    each step is invertible mod 2^k, so the composition is a permutation.
    """
    if g.n == 0 or seed is None:
        return EdgeList(g.src.copy(), g.dst.copy(), g.n, g.symmetric)
    if g.n & (g.n - 1):
        raise ValueError(f"n={g.n} is not a power of two; hashing undefined")
    mask = np.int64(g.n - 1)
    k = g.n.bit_length() - 1
    s1 = np.int64(max(1, k // 3))
    s2 = np.int64(max(1, k // 2))
    c1 = np.int64(int(_mix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF))) & (g.n - 1))
    # 64-bit odd multipliers; odd => invertible mod any power of two.
    m1 = np.int64(0x9E3779B97F4A7C15 & 0x7FFFFFFFFFFFFFFF) | np.int64(1)
    m2 = np.int64(0xBF58476D1CE4E5B9 & 0x7FFFFFFFFFFFFFFF) | np.int64(1)

    def perm(v):
        with np.errstate(over="ignore"):
            v = (v * m1) & mask
            v ^= (v << s1) & mask
            v = (v + c1) & mask
            v = (v * m2) & mask
            v ^= (v << s2) & mask
        return v

    return EdgeList(perm(g.src), perm(g.dst), g.n, g.symmetric)


def symmetrize(g: EdgeList) -> EdgeList:
    """Append the reverse of every edge (undirected-by-doubling convention)."""
    src = np.concatenate([g.src, g.dst])
    dst = np.concatenate([g.dst, g.src])
    return EdgeList(src, dst, g.n, symmetric=True)


def is_symmetric(g: EdgeList) -> bool:
    """True iff for every (u, v) the pair (v, u) occurs with equal multiplicity."""
    a = g.edge_multiset()
    rev = EdgeList(g.dst, g.src, g.n)
    b = rev.edge_multiset()
    return np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def build_rmat_graph(params: RmatParams, randomize: bool = True,
                     do_symmetrize: bool = True) -> EdgeList:
    """Full pipeline: generate, hash-randomize vertex ids, edge-double."""
    g = generate_rmat(params)
    if randomize:
        g = hash_randomize_vertices(g, params.seed)
    if do_symmetrize:
        g = symmetrize(g)
    return g


def save_edge_list(g: EdgeList, path, fmt: str = "binary") -> None:
    if fmt == "binary":
        with open(path, "wb") as f:
            f.write(BINARY_MAGIC)
            f.write(struct.pack("<Q", g.n))
            pairs = np.empty((g.m, 2), dtype="<u8")
            pairs[:, 0] = g.src
            pairs[:, 1] = g.dst
            f.write(pairs.tobytes())
    elif fmt == "text":
        with open(path, "w") as f:
            f.write(f"# n {g.n}\n")
            for u, v in zip(g.src.tolist(), g.dst.tolist()):
                f.write(f"{u} {v}\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")


def load_edge_list(path, fmt: str = "auto") -> EdgeList:
    """Load a text ("u v" per line, '#' comments) or packed binary edge list.

    n defaults to 1 + max id; the binary header and the text "# n <count>"
    comment override it.
    """
    if fmt == "auto":
        with open(path, "rb") as f:
            fmt = "binary" if f.read(4) == BINARY_MAGIC else "text"
    if fmt == "binary":
        with open(path, "rb") as f:
            magic = f.read(4)
            header_n = None
            if magic == BINARY_MAGIC:
                header_n = struct.unpack("<Q", f.read(8))[0]
                body = f.read()
            else:
                body = magic + f.read()
            if len(body) % 16:
                raise FormatError(f"{path}: truncated binary edge list")
            pairs = np.frombuffer(body, dtype="<u8").reshape(-1, 2)
            if pairs.size and pairs.max() >= np.int64(2) ** 62:
                raise FormatError(f"{path}: vertex id overflow")
            src = pairs[:, 0].astype(np.int64)
            dst = pairs[:, 1].astype(np.int64)
    elif fmt == "text":
        header_n = None
        srcs, dsts = [], []
        with open(path) as f:
            for lineno, line in enumerate(f, 1):
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    parts = line[1:].split()
                    if len(parts) == 2 and parts[0] == "n":
                        header_n = int(parts[1])
                    continue
                parts = line.split()
                if len(parts) != 2:
                    raise FormatError(f"{path}:{lineno}: expected 'src dst', got {line!r}")
                try:
                    srcs.append(int(parts[0]))
                    dsts.append(int(parts[1]))
                except ValueError as exc:
                    raise FormatError(f"{path}:{lineno}: {exc}") from exc
        src = np.asarray(srcs, dtype=np.int64)
        dst = np.asarray(dsts, dtype=np.int64)
    else:
        raise ValueError(f"unknown format {fmt!r}")

    if header_n is not None:
        n = int(header_n)
    else:
        n = int(max(src.max(initial=-1), dst.max(initial=-1))) + 1
    if len(src) and (src.min() < 0 or dst.min() < 0 or src.max() >= n or dst.max() >= n):
        raise FormatError(f"{path}: vertex id out of range [0, {n})")
    return EdgeList(src, dst, n=n)
