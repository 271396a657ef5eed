import pytest

from cptquit import (
    CptParams,
    cpt_value,
    enter_one_bet,
    naive,
    one_more_round_gain,
    one_more_round_interior,
    one_more_round_loss,
    penultimate_rule,
    precommitted,
    solve_program,
    sophisticated,
    strategy_distribution,
    utility,
    weight,
)
from cptquit.preferences import GAIN

BENCH = CptParams(0.95, 0.95, 0.5, 0.5, 1.5)
TK = CptParams(0.88, 0.88, 0.61, 0.69, 2.25)
NO_ENTER = CptParams(0.95, 0.95, 0.95, 0.95, 1.5)


class TestPrecommitted:
    def test_wraps_the_program_solution(self):
        agent = precommitted(BENCH, 3, restarts=8, seed=0)
        assert agent.kind == "precommitted"
        assert agent.solve is not None
        assert agent.value == agent.solve.value
        assert agent.tree == agent.solve.tree

    def test_stays_out_when_gambling_is_worthless(self):
        agent = precommitted(NO_ENTER, 3, restarts=8, seed=0)
        assert agent.value == 0.0
        assert agent.tree.stop_at(0, 0) == 1.0


class TestNaive:
    def test_tree_is_well_formed(self):
        agent = naive(BENCH, 3, restarts=8, seed=0)
        assert agent.kind == "naive"
        T = 3
        for x in range(-T, T + 1, 2):
            assert agent.tree.stop_at(T, x) == 1.0

    def test_does_not_enter_when_gambling_is_worthless(self):
        agent = naive(NO_ENTER, 3, restarts=8, seed=0)
        assert agent.tree.stop_at(0, 0) == 1.0
        assert agent.value == 0.0

    def test_node_values_cover_reachable_nodes(self):
        agent = naive(BENCH, 3, restarts=8, seed=0)
        assert (0, 0) in agent.node_values
        # replanned value at the root equals the precommitted optimum
        pre = precommitted(BENCH, 3, restarts=8, seed=0)
        assert agent.node_values[(0, 0)] == pytest.approx(pre.value, abs=1e-9)

    def test_deterministic_given_seed(self):
        a = naive(BENCH, 3, restarts=8, seed=5)
        b = naive(BENCH, 3, restarts=8, seed=5)
        assert a.tree == b.tree


class TestSophisticated:
    def test_equilibrium_value_matches_its_law(self):
        agent = sophisticated(BENCH, 5)
        assert agent.kind == "sophisticated"
        mu, _ = strategy_distribution(agent.tree)
        assert agent.value == pytest.approx(cpt_value(mu, BENCH), abs=1e-9)
        assert agent.value == agent.node_values[(0, 0)]

    def test_never_beats_the_precommitted_plan(self):
        for params in (BENCH, TK):
            eq = sophisticated(params, 5)
            pre = precommitted(params, 5, restarts=16, seed=0)
            assert eq.value <= pre.value + 1e-9

    def test_stays_out_when_gambling_is_worthless(self):
        agent = sophisticated(NO_ENTER, 4)
        assert agent.value == 0.0
        assert agent.tree.stop_at(0, 0) == 1.0

    def test_last_interior_layer_follows_the_one_step_rule(self):
        T = 4
        agent = sophisticated(TK, T)
        for x in range(-(T - 1), T, 2):
            want = penultimate_rule(TK, x)
            r = agent.tree.stop_at(T - 1, x)
            if want == "stop":
                assert r == pytest.approx(1.0, abs=1e-9)
            else:
                assert r <= 1e-6


class TestEnterOneBet:
    def test_no_distortion_stays_out(self):
        assert enter_one_bet(CptParams(1.0, 1.0, 1.0, 1.0, 1.5)) == (0.0, 0.0)

    def test_equal_distortion_with_loss_aversion_stays_out(self):
        assert enter_one_bet(BENCH) == (0.0, 0.0)

    def test_stronger_gain_distortion_enters_with_a_small_coin(self):
        q, v = enter_one_bet(TK)
        assert 0.0 < q < 0.01
        assert v > 0.0

    def test_matches_the_full_one_round_solve(self):
        q, v = enter_one_bet(TK)
        res = solve_program(TK, 1, restarts=8, seed=0)
        assert v == pytest.approx(res.value, abs=1e-9)
        assert res.mu.mass.get(1, 0.0) == pytest.approx(q, abs=1e-6)


class TestOneMoreRoundGain:
    def test_interior_coin(self):
        q = one_more_round_gain(BENCH, 5)
        assert 0.0 < q < 0.5

    def test_matches_grid_search(self):
        T = 5
        p_top = 2.0**-T
        q = one_more_round_gain(BENCH, T)
        best_q, best_v = 0.0, float("-inf")
        n = 10_000
        for i in range(n + 1):
            cand = 0.5 * i / n
            v = _extra_round_value(BENCH, T, p_top, cand)
            if v > best_v:
                best_q, best_v = cand, v
        assert q == pytest.approx(best_q, abs=1.0 / n)

    def test_approaches_half_as_the_ladder_grows(self):
        qs = [one_more_round_gain(BENCH, T) for T in range(2, 10)]
        assert all(b >= a for a, b in zip(qs, qs[1:]))
        assert qs[-1] < 0.5

    def test_linear_utility_splits_evenly(self):
        assert one_more_round_gain(CptParams(1.0, 1.0, 0.5, 0.5, 1.5), 4) == 0.5

    def test_linear_weighting_rejected(self):
        with pytest.raises(ValueError, match="linear weighting"):
            one_more_round_gain(CptParams(0.95, 0.95, 1.0, 1.0, 1.5), 4)

    def test_rejects_mass_beyond_concave_range(self):
        with pytest.raises(ValueError, match="concave"):
            one_more_round_gain(TK, 1)


class TestOneMoreRoundLoss:
    def test_distorted_losses_stop(self):
        assert one_more_round_loss(TK, 10) == 0.0
        assert one_more_round_loss(BENCH, 5) == 0.0

    def test_undistorted_losses_ride(self):
        p = CptParams(0.88, 0.88, 0.5, 1.0, 1.5)
        assert one_more_round_loss(p, 5) == 0.5

    def test_rejects_bad_mass(self):
        with pytest.raises(ValueError, match="bottom-state"):
            one_more_round_loss(BENCH, 3, p_bottom=1.5)


class TestOneMoreRoundInterior:
    def test_interior_coin(self):
        q = one_more_round_interior(BENCH, 3, 0.01, 0.2)
        assert 0.0 < q < 0.5

    def test_stops_when_the_tail_is_already_heavy(self):
        assert one_more_round_interior(BENCH, 1, 0.005, 0.15) == 0.0
        assert one_more_round_interior(TK, 1, 0.005, 0.15) == 0.0

    def test_argument_validation(self):
        with pytest.raises(ValueError, match="gain state"):
            one_more_round_interior(BENCH, 0, 0.1, 0.1)
        with pytest.raises(ValueError, match="> 0"):
            one_more_round_interior(BENCH, 2, 0.0, 0.1)
        with pytest.raises(ValueError, match="p_above"):
            one_more_round_interior(BENCH, 2, 0.6, 0.5)


class TestPenultimateRule:
    @pytest.mark.parametrize("params", [BENCH, TK])
    def test_gains_stop_losses_ride(self, params):
        for x in (1, 2, 5):
            assert penultimate_rule(params, x) == "stop"
        for x in (-1, -3):
            assert penultimate_rule(params, x) == "continue"

    def test_zero_state_rejected(self):
        with pytest.raises(ValueError, match="nonzero"):
            penultimate_rule(BENCH, 0)


def _extra_round_value(params, T, p_top, q):
    """Prospect value terms affected by splitting the top exit mass.

    The mass p_top at +T may move to T+1 (prob q), stay (1 - 2q), or fall
    to T-1 (prob q); everything below is unchanged, so constant terms are
    dropped.
    """
    u = lambda n: utility(n, GAIN, params)
    w = lambda p: weight(p, GAIN, params)
    return (
        u(T + 1) * w(q * p_top)
        + u(T) * (w((1.0 - q) * p_top) - w(q * p_top))
        + u(T - 1) * (w(p_top) - w((1.0 - q) * p_top))
    )
