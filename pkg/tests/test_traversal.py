"""Previsit filtering, forward/backward visits, and the direction decision."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delegate_bfs import oracle
from delegate_bfs.storage import CsrSubgraph
from delegate_bfs.traversal import (BACKWARD, FORWARD, DirectionState,
                                    WorkloadEstimate, decide_direction,
                                    estimate_backward_workload, previsit,
                                    visit_backward, visit_forward)


def csr_from_rows(kind, rows):
    offsets = np.concatenate([[0], np.cumsum([len(r) for r in rows])])
    cols = np.array([c for r in rows for c in r], dtype=np.int64)
    return CsrSubgraph(kind, offsets.astype(np.int64), cols)


class TestPrevisit:
    def test_dedupes_and_drops_visited(self):
        levels = np.full(8, -1, dtype=np.int32)
        levels[5] = 0
        degrees = np.full(8, 2, dtype=np.int64)
        queue, fv = previsit(np.array([3, 3, 5]), degrees, levels, level=1)
        assert queue.tolist() == [3]
        assert fv == 2
        assert levels[3] == 1

    def test_zero_degree_dropped(self):
        levels = np.full(4, -1, dtype=np.int32)
        queue, fv = previsit(np.array([0, 1]), np.zeros(4, dtype=np.int64),
                             levels, level=0)
        assert len(queue) == 0 and fv == 0

    def test_current_level_inputs_kept(self):
        # records arriving from other workers already carry this level
        levels = np.full(4, -1, dtype=np.int32)
        levels[2] = 3
        degrees = np.full(4, 1, dtype=np.int64)
        queue, _ = previsit(np.array([2]), degrees, levels, level=3)
        assert queue.tolist() == [2]

    @given(st.lists(st.integers(0, 15), max_size=30), st.data())
    @settings(max_examples=40, deadline=None)
    def test_matches_set_oracle(self, inputs, data):
        degrees = np.array(data.draw(
            st.lists(st.integers(0, 4), min_size=16, max_size=16)), dtype=np.int64)
        visited = set(data.draw(st.lists(st.integers(0, 15), max_size=8)))
        levels = np.full(16, -1, dtype=np.int32)
        for v in visited:
            levels[v] = 0
        queue, fv = previsit(np.array(inputs, dtype=np.int64), degrees,
                             levels.copy(), level=1)
        expected = sorted({v for v in inputs if v not in visited
                           and degrees[v] > 0})
        assert queue.tolist() == expected
        assert fv == sum(degrees[v] for v in expected)


class TestVisitForward:
    def test_single_edge(self):
        csr = csr_from_rows("dn", [[1]])
        levels = np.full(4, -1, dtype=np.int32)
        levels[0] = 0
        found, insp = visit_forward(csr, np.array([0]), dest_levels=levels)
        assert found.tolist() == [1] and insp == 1

    def test_empty_queue(self):
        csr = csr_from_rows("dn", [[1]])
        found, insp = visit_forward(csr, np.array([], dtype=np.int64))
        assert len(found) == 0 and insp == 0

    def test_dedupe_flag_keeps_wire_records(self):
        csr = csr_from_rows("nn", [[2, 2, 3]])
        raw, _ = visit_forward(csr, np.array([0]), dedupe=False)
        unique, _ = visit_forward(csr, np.array([0]), dedupe=True)
        assert sorted(raw.tolist()) == [2, 2, 3]
        assert unique.tolist() == [2, 3]

    def test_one_iteration_equals_oracle_layer(self, graph_s10):
        ref = oracle.bfs_levels(graph_s10, 0)
        order = np.argsort(graph_s10.src, kind="stable")
        counts = np.bincount(graph_s10.src, minlength=graph_s10.n)
        offsets = np.zeros(graph_s10.n + 1, dtype=np.int64)
        np.cumsum(counts, out=offsets[1:])
        csr = CsrSubgraph("nn", offsets, graph_s10.dst[order])
        levels = np.full(graph_s10.n, -1, dtype=np.int32)
        levels[0] = 0
        found, _ = visit_forward(csr, np.array([0]), dest_levels=levels)
        assert set(found.tolist()) == set(np.flatnonzero(ref == 1).tolist())


class TestVisitBackward:
    def test_early_exit_single_inspection(self):
        csr = csr_from_rows("nd", [[7, 8, 9]])
        parent_levels = np.full(16, -1, dtype=np.int32)
        parent_levels[7] = 2
        found, insp = visit_backward(csr, np.array([0]), parent_levels,
                                     frontier_level=2)
        assert found.tolist() == [0] and insp == 1

    def test_miss_scans_whole_list(self):
        csr = csr_from_rows("nd", [[7, 8, 9]])
        parent_levels = np.full(16, -1, dtype=np.int32)
        found, insp = visit_backward(csr, np.array([0]), parent_levels,
                                     frontier_level=2)
        assert len(found) == 0 and insp == 3

    def test_inspections_count_through_hit(self):
        csr = csr_from_rows("nd", [[7, 8, 9, 10]])
        parent_levels = np.full(16, -1, dtype=np.int32)
        parent_levels[9] = 1
        _, insp = visit_backward(csr, np.array([0]), parent_levels,
                                 frontier_level=1)
        assert insp == 3

    def test_stale_parent_levels_ignored(self):
        # parents visited in older iterations do not claim sources
        csr = csr_from_rows("nd", [[7]])
        parent_levels = np.full(16, -1, dtype=np.int32)
        parent_levels[7] = 0
        found, _ = visit_backward(csr, np.array([0]), parent_levels,
                                  frontier_level=2)
        assert len(found) == 0

    def test_direction_invariance_on_random_graph(self):
        rng = np.random.default_rng(4)
        rows = [sorted(rng.choice(10, size=rng.integers(0, 5), replace=False))
                for _ in range(12)]
        csr = csr_from_rows("nd", rows)
        parent_levels = np.full(10, -1, dtype=np.int32)
        parent_levels[rng.choice(10, size=4, replace=False)] = 1
        sources = np.arange(12)
        back, _ = visit_backward(csr, sources, parent_levels, frontier_level=1)
        reachable = {i for i, r in enumerate(rows)
                     if any(parent_levels[c] == 1 for c in r)}
        assert set(back.tolist()) == reachable


class TestWorkloadEstimate:
    def test_s_zero_limit(self):
        assert estimate_backward_workload(100, 10, 0) == 100

    def test_formula_direct_evaluation(self):
        assert estimate_backward_workload(100, 10, 30) == 400

    def test_empty_frontier_infinite(self):
        assert math.isinf(estimate_backward_workload(5, 0, 3))

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            estimate_backward_workload(1, -1, 0)

    def test_monte_carlo_within_ten_percent(self):
        # mean parent checks approximates |U|/a once lists are long enough
        for od in (16, 32, 64):
            for a in (0.2, 0.4, 0.6):
                mean = oracle.simulate_backward_scan(20000, od, a, seed=1)
                assert abs(mean - 1 / a) / (1 / a) < 0.10


class TestDecideDirection:
    def test_switch_to_backward(self):
        ds = DirectionState("dd", factor0=0.5, factor1=0.0)
        est = WorkloadEstimate(fv=1000, u_size=100, q=100, s=0)  # bv = 100
        assert decide_direction(est, ds) == BACKWARD

    def test_infinite_factor_stays_forward(self):
        ds = DirectionState("dd", factor0=math.inf, factor1=0.0)
        est = WorkloadEstimate(fv=1e9, u_size=1, q=1, s=0)
        assert decide_direction(est, ds) == FORWARD

    def test_zero_factor1_never_switches_back(self):
        ds = DirectionState("dn", factor0=0.5, factor1=0.0, direction=BACKWARD)
        est = WorkloadEstimate(fv=0, u_size=100, q=10, s=10)
        assert decide_direction(est, ds) == BACKWARD

    def test_switch_back_with_positive_factor1(self):
        ds = DirectionState("dn", factor0=0.5, factor1=0.9, direction=BACKWARD)
        est = WorkloadEstimate(fv=1, u_size=100, q=10, s=10)
        assert decide_direction(est, ds) == FORWARD

    def test_switch_back_can_be_disabled(self):
        ds = DirectionState("dn", factor0=0.5, factor1=0.9, direction=BACKWARD,
                            allow_switch_back=False)
        est = WorkloadEstimate(fv=1, u_size=100, q=10, s=10)
        assert decide_direction(est, ds) == BACKWARD

    def test_nn_has_no_direction_state(self):
        ds = DirectionState("nn", factor0=0.5, factor1=0.0)
        with pytest.raises(ValueError):
            decide_direction(WorkloadEstimate(), ds)
