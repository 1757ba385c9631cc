"""Analytic cost formulas for the 1D, 2D, and delegate communication models."""

import math

import numpy as np
import pytest

from delegate_bfs.cost_model import (CostModelParams, cost_1d, cost_2d,
                                     cost_delegate,
                                     cost_delegate_weak_scaling, sweep_p)


def params(**kw):
    base = dict(n=1 << 20, m=(1 << 20) * 32, p=16, p_rank=16, p_gpu=1,
                g=1e-9, S=6, S_b=3, d=0, E_nn=0)
    base.update(kw)
    return CostModelParams(**base)


class TestValidation:
    def test_shape_product_enforced(self):
        with pytest.raises(ValueError, match="p_rank"):
            params(p=16, p_rank=4, p_gpu=2)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            params(S_b=-1)

    def test_nt_defaults_to_n(self):
        assert params().n_t == 1 << 20


class TestCost1d:
    def test_formula(self):
        volume, t = cost_1d(params(m=1 << 25, p=4, p_rank=4))
        assert volume == float(1 << 28)
        assert t == pytest.approx((1 << 26) * 1e-9)

    def test_single_worker(self):
        volume, t = cost_1d(params(p=1, p_rank=1))
        assert t == pytest.approx(volume * 1e-9)

    def test_doubling_p_halves_time(self):
        _, t4 = cost_1d(params(p=4, p_rank=4))
        _, t8 = cost_1d(params(p=8, p_rank=8))
        assert t8 == pytest.approx(t4 / 2)


class TestCost2d:
    def test_degenerate_grid_no_communication(self):
        fwd, bwd, t = cost_2d(params(p=1, p_rank=1))
        assert fwd == bwd == t == 0.0

    def test_non_square_rejected(self):
        with pytest.raises(ValueError, match="square"):
            cost_2d(params(p=8, p_rank=8))

    def test_direct_substitution(self):
        p = params(n=1 << 20, n_t=1 << 20, S_b=3, p=16, p_rank=16)
        fwd, bwd, t = cost_2d(p)
        root, log_root = 4, math.log2(4)
        assert fwd == pytest.approx(8 * (1 << 20) * root * log_root)
        assert bwd == pytest.approx(2 * (1 << 20) * 3 * root * log_root / 8)
        assert t == pytest.approx((4 * (1 << 20) + (1 << 20) * 3 / 8)
                                  * (log_root / root) * 1e-9)

    def test_weak_scaling_time_increases(self):
        times = []
        for p in (16, 64, 256):
            scaled = params(n=(1 << 14) * p, n_t=(1 << 14) * p, p=p, p_rank=p)
            times.append(cost_2d(scaled)[2])
        assert times[0] < times[1] < times[2]


class TestCostDelegate:
    def test_single_rank_only_nn_traffic(self):
        p = params(p=4, p_rank=1, p_gpu=4, d=100, E_nn=1 << 16)
        _, t = cost_delegate(p)
        assert t == pytest.approx(4 * (1 << 16) / 4 * 1e-9)

    def test_volume_and_time_formula(self):
        p = params(p=16, p_rank=16, d=4096, E_nn=1 << 16, S=6)
        volume, t = cost_delegate(p)
        assert volume == pytest.approx(4096 * 16 / 4 * 6 + 4 * (1 << 16))
        assert t == pytest.approx((4096 * 4 / 4 * 6 + 4 * (1 << 16) / 16) * 1e-9)

    def test_operating_point_identity(self):
        # d = 4n/p with no nn edges reproduces the simplified curve exactly
        p = params(n=1 << 20, p=16, p_rank=16, d=4 * (1 << 20) // 16, E_nn=0)
        _, t = cost_delegate(p)
        assert t == pytest.approx(cost_delegate_weak_scaling(p))

    def test_measured_volumes_below_model(self, graph_s12, pg_s12):
        from delegate_bfs import engine

        run = engine.run_bfs(pg_s12, engine.BfsOptions(source=5))
        shape = pg_s12.shape
        model = CostModelParams(
            n=pg_s12.n, m=pg_s12.m, p=shape.p, p_rank=shape.p_rank,
            p_gpu=shape.p_gpu, g=1e-9, S=run.iterations,
            d=pg_s12.classification.d, E_nn=pg_s12.num_nn_edges)
        volume, _ = cost_delegate(model)
        measured = (run.comm_stats.total_mask_bytes
                    + run.comm_stats.total_normal_bytes)
        assert measured <= volume


class TestSweep:
    def test_rows_cover_models(self):
        rows = sweep_p(params(), [16, 64], p_gpu=1)
        assert [r["p"] for r in rows] == [16, 64]
        for row in rows:
            assert {"volume_1d", "time_1d", "time_2d",
                    "time_delegate"} <= set(row)

    def test_non_square_p_skips_2d(self):
        rows = sweep_p(params(), [8], p_gpu=1)
        assert "time_2d" not in rows[0]

    def test_indivisible_p_rejected(self):
        with pytest.raises(ValueError, match="divisible"):
            sweep_p(params(), [18], p_gpu=4)

    def test_weak_scaling_holds_delegates_fixed(self):
        base = params(d=4096, E_nn=1 << 10)
        rows = sweep_p(base, [16, 256], p_gpu=1)
        # n and E_nn grow with p; the d <= 4n/p budget stays per-worker
        assert rows[1]["volume_1d"] == 16 * rows[0]["volume_1d"]
        t16, t256 = rows[0]["time_delegate"], rows[1]["time_delegate"]
        assert t256 / t16 == pytest.approx(math.log2(256) / math.log2(16),
                                           rel=0.05)
