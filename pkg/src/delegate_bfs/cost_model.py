"""Analytic communication-cost calculators for 1D, 2D, and delegate models.

Volumes are bytes, times are seconds (g = inverse bandwidth, seconds/byte).
Reduction/broadcast trees are assumed binary, so logarithms are base 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass
class CostModelParams:
    n: int
    m: int
    p: int
    p_rank: int
    p_gpu: int
    g: float
    S: int = 1
    S_b: int = 0
    n_t: int | None = None   # vertices visited in forward-push iterations
    d: int = 0
    E_nn: int = 0

    def __post_init__(self):
        if min(self.n, self.m, self.p, self.p_rank, self.p_gpu, self.S,
               self.S_b, self.d, self.E_nn) < 0 or self.g < 0:
            raise ValueError("all cost-model parameters must be nonnegative")
        if self.p != self.p_rank * self.p_gpu:
            raise ValueError(f"p={self.p} != p_rank*p_gpu="
                             f"{self.p_rank * self.p_gpu}")
        if self.n_t is None:
            self.n_t = self.n


def cost_1d(params: CostModelParams) -> tuple[float, float]:
    """1D partitioning: broadcast newly visited vertices to every peer."""
    volume = 8.0 * params.m
    return volume, volume / params.p * params.g


def cost_2d(params: CostModelParams) -> tuple[float, float, float]:
    """2D partitioning on a square processor grid.

    Returns (forward volume, backward volume, time).  Volumes use 32-bit
    row/column ids forward and compressed bitmasks backward.
    """
    root = math.isqrt(params.p)
    if root * root != params.p:
        raise ValueError(f"2D model needs a square processor count, got {params.p}")
    log_root = math.log2(root) if root > 1 else 0.0
    fwd_volume = 8.0 * params.n_t * root * log_root
    bwd_volume = 2.0 * params.n * params.S_b * root * log_root / 8.0
    time = ((4.0 * params.n_t + params.n * params.S_b / 8.0)
            * (log_root / root) * params.g)
    return fwd_volume, bwd_volume, time


def cost_delegate(params: CostModelParams) -> tuple[float, float]:
    """Delegate model: mask reductions plus point-to-point nn exchange.

    Volume bound d*p_rank/4*S + 4|E_nn|; time
    (d*log2(p_rank)/4*S + 4|E_nn|/p) * g.
    """
    log_rank = math.log2(params.p_rank) if params.p_rank > 1 else 0.0
    volume = params.d * params.p_rank / 4.0 * params.S + 4.0 * params.E_nn
    time = (params.d * log_rank / 4.0 * params.S
            + 4.0 * params.E_nn / params.p) * params.g
    return volume, time


def cost_delegate_weak_scaling(params: CostModelParams) -> float:
    """Simplified time under the d = 4n/p operating point:
    n * log2(p_rank) / p * S * g."""
    log_rank = math.log2(params.p_rank) if params.p_rank > 1 else 0.0
    return params.n * log_rank / params.p * params.S * params.g


def sweep_p(base: CostModelParams, p_values, p_gpu: int = 1,
            weak_scaling: bool = True) -> list[dict]:
    """Evaluate all three models over a p sweep.

    With weak_scaling, n, m, n_t, and E_nn grow proportionally with p from
    the per-worker sizes implied by `base` (whose p is the reference).  The
    delegate count d stays fixed: the d <= 4n/p operating point pins it to
    the per-worker vertex budget, which weak scaling holds constant.
    """
    rows = []
    for p in p_values:
        if p % p_gpu:
            raise ValueError(f"p={p} not divisible by p_gpu={p_gpu}")
        factor = p / base.p if weak_scaling else 1.0
        params = CostModelParams(
            n=int(base.n * factor), m=int(base.m * factor),
            p=p, p_rank=p // p_gpu, p_gpu=p_gpu, g=base.g,
            S=base.S, S_b=base.S_b,
            n_t=int(base.n_t * factor),
            d=base.d, E_nn=int(base.E_nn * factor),
        )
        vol_1d, t_1d = cost_1d(params)
        row = {
            "p": p,
            "p_rank": params.p_rank,
            "volume_1d": vol_1d,
            "time_1d": t_1d,
        }
        root = math.isqrt(p)
        if root * root == p:
            fwd, bwd, t_2d = cost_2d(params)
            row.update(volume_2d_forward=fwd, volume_2d_backward=bwd,
                       time_2d=t_2d)
        vol_del, t_del = cost_delegate(params)
        row.update(volume_delegate=vol_del, time_delegate=t_del,
                   time_delegate_weak=cost_delegate_weak_scaling(params))
        rows.append(row)
    return rows
