#!/usr/bin/env python3
"""End-to-end checks of the published counts and the planner's guarantees."""

from itertools import product
import random

import pytest

import analytics
from analytics import CostParams, compatible_blocks, estimate_cost, stats
from redistribute import distribute_initial, execute, resize_session, verify
from schedule import count_contentions, plan
from topology import BlockDesc, GridShape, lcm, make_problem

DIMS = range(1, 7)


def _sample_problems(count, seed, max_blocks=48, contended_only=False):
    """Deterministic sample of valid (P, Q, N) with N <= max_blocks."""
    candidates = []
    for pr, pc, qr, qc in product(DIMS, repeat=4):
        src, dst = GridShape(pr, pc), GridShape(qr, qc)
        if contended_only and pr <= qr and pc <= qc:
            continue
        base = compatible_blocks(src, dst)
        if base <= max_blocks:
            candidates.append((src, dst, base))
    rng = random.Random(seed)
    picked = rng.sample(candidates, min(count, len(candidates)))
    problems = []
    for src, dst, base in picked:
        n_blocks = base * rng.randint(1, max_blocks // base)
        problems.append(make_problem(src, dst, n_blocks))
    return problems


class TestPublishedRows:
    """Hand-verified send/recv rows and step formula"""

    @pytest.mark.parametrize(
        "src, dst, expected",
        [
            ((1, 2), (2, 2), (2, 2, 2)),
            ((2, 2), (2, 3), (3, 3, 9)),
            ((2, 2), (2, 4), (2, 2, 6)),
            ((2, 3), (3, 3), (3, 6, 12)),
            ((2, 4), (4, 4), (2, 8, 8)),
        ],
    )
    def test_hand_verified_rows(self, src, dst, expected):
        src, dst = GridShape(*src), GridShape(*dst)
        for multiple in (1, 2):
            result = stats(plan(make_problem(src, dst, compatible_blocks(src, dst) * multiple)))
            assert (result.steps, result.copies, result.sendrecvs) == expected

    def test_step_formula_over_published_configurations(self):
        configs = analytics.NEARLY_SQUARE_CONFIGS + analytics.SKEWED_CONFIGS
        for src, dst in product(configs, repeat=2):
            result = plan(make_problem(src, dst, compatible_blocks(src, dst)))
            assert result.steps == lcm(src.rows, dst.rows) * lcm(src.cols, dst.cols) // (src.rows * src.cols)

    @pytest.mark.parametrize(
        "p, q, nearly_square_steps, skewed_steps",
        [(4, 20, 10, 5), (8, 40, 10, 5)],
    )
    def test_skewed_contrast(self, p, q, nearly_square_steps, skewed_steps):
        assert _steps(analytics.nearly_square_grid(p), analytics.nearly_square_grid(q)) == nearly_square_steps
        assert _steps(analytics.skewed_grid(p), analytics.skewed_grid(q)) == skewed_steps


def _steps(src, dst):
    return plan(make_problem(src, dst, compatible_blocks(src, dst))).steps


class TestContentionFree:
    """Growing in both dimensions never contends"""

    def test_exhaustive_small_grids(self):
        checked = 0
        for pr, pc, qr, qc in product(DIMS, repeat=4):
            if pr > qr or pc > qc:
                continue
            src, dst = GridShape(pr, pc), GridShape(qr, qc)
            n_blocks = lcm(pr, qr) * lcm(pc, qc)
            result = plan(make_problem(src, dst, n_blocks))
            assert result.contentions_before == 0, (src, dst)
            for row in result.transfer.dest:
                assert len(set(row.tolist())) == row.size
            assert result.recv is not None
            checked += 1
        assert checked == 21 * 21


class TestOracle:
    """Simulated execution against the brute-force owner check"""

    def test_sampled_problems_verify(self):
        problems = _sample_problems(200, seed=20240611)
        assert len(problems) == 200
        shapes = {(p.src.rows > p.dst.rows or p.src.cols > p.dst.cols, p.src.rows == 1 or p.dst.rows == 1) for p in problems}
        assert (True, False) in shapes
        assert any(one_d for _, one_d in shapes)
        for problem in problems:
            result = execute(plan(problem), distribute_initial(problem.blocks, problem.src))
            report = verify(result.stores, problem)
            assert report.passed, (problem.describe(), report.mismatches)

    def test_shifts_preserve_the_mapping(self):
        for problem in _sample_problems(60, seed=7, max_blocks=36, contended_only=True):
            sources = distribute_initial(problem.blocks, problem.src)
            raw = plan(problem, shifts=False)
            shifted = plan(problem, shifts=True)
            assert raw.contentions_before == count_contentions(raw.transfer)
            assert shifted.contentions_after <= shifted.contentions_before
            assert shifted.contentions_after == count_contentions(shifted.transfer)
            raw_stores = execute(raw, sources).stores
            shifted_stores = execute(shifted, sources).stores
            assert all(a.same_contents(b) for a, b in zip(raw_stores, shifted_stores)), problem.describe()


class TestCostModelExactness:
    """Closed form against the estimate"""

    def test_random_parameters(self):
        rng = random.Random(99)
        problems = _sample_problems(50, seed=3)
        for index, problem in enumerate(problems):
            lam = 0.0 if index % 5 == 0 else rng.uniform(0, 1e-3)
            tau = 0.0 if index % 7 == 0 else rng.uniform(0, 1e-6)
            result = plan(problem)
            n_blocks = problem.n_blocks
            closed_form = result.steps * (lam + (n_blocks * n_blocks / (result.dims.R * result.dims.C)) * tau)
            assert estimate_cost(result, CostParams(lam=lam, tau=tau)) == closed_form


class TestComparisonCounts:
    """Totals for the two expansion experiments"""

    def test_counts(self):
        assert analytics.PUBLISHED_CALL_COUNTS == {(8, 40): (80, 160), (8, 50): (196, 392)}
        verdicts = {(row.p, row.q): row.verdict for row in analytics.compare_call_counts()}
        assert verdicts == {(8, 40): "MATCH", (8, 50): "DIVERGE"}
        assert analytics.our_call_count(8, 40) == 80
        assert analytics.caterpillar_call_count(8, 40) == 160
        eight, fifty = analytics.nearly_square_grid(8), analytics.nearly_square_grid(50)
        assert analytics.our_call_count(8, 50) == analytics.expected_steps(eight, fifty) * 8 == 200


class TestRoundTrip:
    """P -> Q -> P restores the original stores"""

    def test_sampled_round_trips(self):
        for problem in _sample_problems(20, seed=11, max_blocks=36):
            grids = [problem.src, problem.dst, problem.src]
            session = resize_session(grids, problem.blocks)
            assert session.passed, problem.describe()
            initial = distribute_initial(problem.blocks, problem.src)
            assert len(session.stores) == len(initial)
            assert all(a.same_contents(b) for a, b in zip(session.stores, initial)), problem.describe()

    def test_block_size_does_not_change_the_schedule(self):
        desc = BlockDesc.from_blocks(12, 3)
        session = resize_session([GridShape(2, 2), GridShape(3, 4), GridShape(2, 2)], desc)
        assert session.passed
        assert session.hops[0].stats.steps == 6
