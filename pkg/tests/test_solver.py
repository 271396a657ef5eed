import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cptquit import (
    CptParams,
    cpt_value,
    evaluate_constraints,
    evolution_table,
    exhaustive_markov,
    random_feasible_point,
    solve_program,
    sophisticated,
    strategy_distribution,
)
from cptquit.solver import (
    TailVectors,
    band_tails,
    binomial_tails,
    dist_from_tails,
    tails_from_dist,
    threshold_tails,
)

BENCH = CptParams(0.95, 0.95, 0.5, 0.5, 1.5)
GAIN_EXIT = CptParams(0.5, 0.5, 0.95, 0.95, 1.5)


class TestTailVectors:
    def test_length_enforced(self):
        with pytest.raises(ValueError, match="tails"):
            TailVectors(3, (0.5, 0.2), (0.5, 0.2, 0.1))

    def test_array_round_trip(self):
        t = TailVectors(2, (0.4, 0.1), (0.3, 0.2))
        assert TailVectors.from_array(t.as_array(), 2) == t

    @settings(max_examples=40)
    @given(st.integers(2, 7), st.integers(0, 2**32 - 1))
    def test_dist_round_trip(self, horizon, seed):
        tails = random_feasible_point(horizon, seed)
        back = tails_from_dist(dist_from_tails(tails), horizon)
        assert np.allclose(back.as_array(), tails.as_array(), atol=1e-12)


class TestConstraints:
    def test_binomial_is_feasible(self):
        rep = evaluate_constraints(binomial_tails(6))
        assert rep.feasible
        assert rep.max_violation <= 1e-12

    @pytest.mark.parametrize("seed", range(25))
    def test_random_points_are_feasible(self, seed):
        assert evaluate_constraints(random_feasible_point(5, seed)).feasible

    def test_threshold_and_band_seeds_are_feasible(self):
        T = 6
        for g in range(1, T + 1):
            for l in range(1, T + 1):
                assert evaluate_constraints(threshold_tails(T, g, l)).feasible
        for k in range(1, T):
            for c in range(0, 3):
                assert evaluate_constraints(band_tails(T, k, c)).feasible

    def test_unreachable_law_reports_embed_violation(self):
        # equal thirds at -3, 0, 3 by time 3
        tails = TailVectors(3, (1 / 3, 1 / 3, 1 / 3), (1 / 3, 1 / 3, 1 / 3))
        rep = evaluate_constraints(tails)
        assert not rep.feasible
        worst = max(rep.embed)
        assert worst > 0.1
        assert set(rep.embed_states) == {-1, 1}

    def test_unbalanced_tails_report_balance(self):
        rep = evaluate_constraints(TailVectors(2, (0.5, 0.0), (0.3, 0.0)))
        assert abs(rep.balance) == pytest.approx(0.2)
        assert not rep.feasible

    def test_evolution_table_shape_and_cone(self):
        table = evolution_table(binomial_tails(4))
        assert table.shape == (4, 9)
        assert np.allclose(table[0], np.abs(np.arange(-4, 5)))
        # passes never decrease anywhere
        assert np.all(np.diff(table, axis=0) >= -1e-12)


class TestSolve:
    def test_deterministic_given_seed(self):
        a = solve_program(BENCH, 4, restarts=8, seed=3)
        b = solve_program(BENCH, 4, restarts=8, seed=3)
        assert a.value == b.value
        assert a.tails == b.tails

    def test_worker_count_does_not_change_result(self):
        a = solve_program(BENCH, 3, restarts=8, seed=1, workers=1)
        b = solve_program(BENCH, 3, restarts=8, seed=1, workers=4)
        assert a.value == b.value
        assert a.tails == b.tails

    def test_result_is_consistent(self):
        res = solve_program(BENCH, 4, restarts=8, seed=0)
        assert res.diagnostics.residual <= 1e-8
        assert res.value == pytest.approx(cpt_value(res.mu, BENCH), abs=1e-9)
        mu2, _ = strategy_distribution(res.tree)
        for s in set(res.mu.mass) | set(mu2.mass):
            assert mu2.mass.get(s, 0.0) == pytest.approx(
                res.mu.mass.get(s, 0.0), abs=1e-9
            )
        # start_values covers the deterministic archetypes too, not just
        # the random restarts
        assert len(res.diagnostics.start_values) >= res.diagnostics.restarts
        assert 0 <= res.diagnostics.best_start < len(res.diagnostics.start_values)
        assert res.diagnostics.evals > 0

    @pytest.mark.parametrize(
        "params",
        [
            BENCH,
            GAIN_EXIT,
            CptParams(0.88, 0.88, 0.61, 0.69, 2.25),
            CptParams(0.5, 0.5, 0.5, 0.5, 1.5),
        ],
    )
    def test_at_least_as_good_as_pure_strategies(self, params):
        res = solve_program(params, 3, restarts=16, seed=0)
        oracle = exhaustive_markov(params, 3)
        assert res.value >= oracle.value - 1e-9

    def test_at_least_as_good_as_equilibrium(self):
        # the equilibrium plan is one admissible plan, so the optimum
        # cannot fall below it
        for params in (BENCH, GAIN_EXIT):
            res = solve_program(params, 6, restarts=16, seed=0)
            eq = sophisticated(params, 6)
            assert res.value >= eq.value - 1e-8

    def test_never_negative(self):
        # stopping immediately is always available and worth exactly 0
        res = solve_program(CptParams(0.95, 0.95, 0.95, 0.95, 1.5), 4,
                            restarts=8, seed=0)
        assert res.value >= 0.0

    def test_shifted_start_can_bank_the_shift(self):
        res = solve_program(BENCH, 3, shift=2, restarts=8, seed=0)
        assert res.value >= cpt_value({2: 1.0}, BENCH) - 1e-12

    def test_rejects_bad_horizon(self):
        with pytest.raises(ValueError):
            solve_program(BENCH, 0)
