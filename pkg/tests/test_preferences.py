import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cptquit import (
    GAIN,
    LOSS,
    CptParams,
    ExitDistribution,
    cpt_value,
    objective_from_tails,
    utility,
    weight,
    weight_derivative,
)
from cptquit.preferences import reconstruct_mass

BENCH = CptParams(0.95, 0.95, 0.5, 0.5, 1.5)


class TestParams:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"alpha_plus": 0.0},
            {"alpha_minus": 1.2},
            {"delta_plus": 0.0},
            {"delta_minus": -0.5},
            {"lam": 0.99},
        ],
    )
    def test_rejects_out_of_range(self, kwargs):
        with pytest.raises(ValueError):
            CptParams(**kwargs)

    def test_boundaries_allowed(self):
        CptParams(1.0, 1.0, 1.0, 1.0, 1.0)

    def test_defaults(self):
        p = CptParams()
        assert (p.alpha_plus, p.delta_plus, p.lam) == (0.95, 0.5, 1.5)


class TestWeight:
    def test_endpoints(self):
        for side in (GAIN, LOSS):
            assert weight(0.0, side, BENCH) == 0.0
            assert weight(1.0, side, BENCH) == 1.0

    def test_identity_when_linear(self):
        p = CptParams(1.0, 1.0, 1.0, 1.0, 1.0)
        for q in (0.0, 0.1, 0.37, 0.5, 0.99, 1.0):
            assert weight(q, GAIN, p) == pytest.approx(q, abs=1e-12)

    def test_half_at_sqrt_curvature(self):
        # p^d / (p^d + (1-p)^d)^(1/d) at p = 1/2, d = 1/2 is 2^(-1/2) / 2
        assert weight(0.5, GAIN, BENCH) == pytest.approx(
            math.sqrt(0.5) / 2.0, abs=1e-15
        )

    def test_overweights_tails(self):
        assert weight(0.01, GAIN, BENCH) > 0.01
        assert weight(0.99, GAIN, BENCH) < 0.99

    def test_sides_use_their_own_exponent(self):
        p = CptParams(0.95, 0.95, 0.4, 0.8, 1.5)
        assert weight(0.3, GAIN, p) != weight(0.3, LOSS, p)

    @given(
        st.floats(0.0, 1.0),
        st.floats(0.0, 1.0),
        st.floats(0.3, 1.0),
    )
    def test_monotone(self, a, b, d):
        p = CptParams(0.95, 0.95, d, d, 1.5)
        lo, hi = min(a, b), max(a, b)
        assert weight(lo, GAIN, p) <= weight(hi, GAIN, p) + 1e-12

    @pytest.mark.parametrize("q", [0.05, 0.2, 0.5, 0.8, 0.95])
    @pytest.mark.parametrize("d", [0.5, 0.65, 1.0])
    def test_derivative_matches_difference_quotient(self, q, d):
        p = CptParams(0.95, 0.95, d, d, 1.5)
        h = 1e-7
        approx = (weight(q + h, GAIN, p) - weight(q - h, GAIN, p)) / (2 * h)
        assert weight_derivative(q, GAIN, p) == pytest.approx(approx, rel=1e-5)


class TestUtility:
    def test_power(self):
        assert utility(0, GAIN, BENCH) == 0.0
        assert utility(3, GAIN, BENCH) == pytest.approx(3.0**0.95, abs=1e-15)

    def test_sides_use_their_own_exponent(self):
        p = CptParams(0.5, 0.9, 0.5, 0.5, 1.5)
        assert utility(4, GAIN, p) == pytest.approx(2.0)
        assert utility(4, LOSS, p) == pytest.approx(4.0**0.9)


class TestCptValue:
    def test_point_mass_at_zero(self):
        assert cpt_value({0: 1.0}, BENCH) == 0.0

    def test_single_bet_formula(self):
        v = cpt_value({1: 0.3, -1: 0.2, 0: 0.5}, BENCH)
        want = weight(0.3, GAIN, BENCH) - 1.5 * weight(0.2, LOSS, BENCH)
        assert v == pytest.approx(want, abs=1e-15)

    def test_gains_aggregate_best_down(self):
        v = cpt_value({2: 0.1, 1: 0.2, -1: 0.3, 0: 0.4}, BENCH)
        u = lambda n: utility(n, GAIN, BENCH)
        w = lambda q: weight(q, GAIN, BENCH)
        want = u(2) * w(0.1) + u(1) * (w(0.3) - w(0.1))
        want -= 1.5 * weight(0.3, LOSS, BENCH)
        assert v == pytest.approx(want, abs=1e-15)

    def test_loss_aversion_scales_pure_losses(self):
        lo = CptParams(0.95, 0.95, 0.5, 0.5, 1.0)
        hi = CptParams(0.95, 0.95, 0.5, 0.5, 2.0)
        law = {-2: 0.25, -1: 0.25, 0: 0.5}
        assert cpt_value(law, hi) == pytest.approx(2.0 * cpt_value(law, lo))

    def test_zero_mass_states_ignored(self):
        a = cpt_value({1: 0.5, -1: 0.5}, BENCH)
        b = cpt_value({3: 0.0, 1: 0.5, 0: 0.0, -1: 0.5}, BENCH)
        assert a == b

    def test_shifted_support_allowed(self):
        # sub-game laws sit away from 0 and need no centring
        assert cpt_value({2: 0.5, 4: 0.5}, BENCH) > 0.0


class TestExitDistribution:
    def test_normalizes_and_drops_zeros(self):
        d = ExitDistribution(3, {1: 0.5, -1: 0.5, 2: 0.0})
        assert d.mass == {1: 0.5, -1: 0.5}

    def test_rejects_bad_total(self):
        with pytest.raises(ValueError, match="sum"):
            ExitDistribution(3, {1: 0.4, -1: 0.3})

    def test_rejects_nonzero_mean(self):
        with pytest.raises(ValueError, match="mean"):
            ExitDistribution(3, {1: 0.6, -1: 0.4})

    def test_rejects_state_outside_horizon(self):
        with pytest.raises(ValueError, match="outside"):
            ExitDistribution(2, {3: 0.5, -3: 0.5})

    def test_rejects_negative_mass(self):
        with pytest.raises(ValueError, match="negative"):
            ExitDistribution(2, {1: 0.6, -1: 0.5, 0: -0.1})

    def test_clips_rounding_noise(self):
        d = ExitDistribution(2, {1: 0.5, -1: 0.5, 0: -1e-13})
        assert d.mass == {1: 0.5, -1: 0.5}

    def test_array_round_trip(self):
        d = ExitDistribution(2, {2: 0.25, -1: 0.5, 0: 0.25})
        back = ExitDistribution.from_array(d.as_array(), 2)
        assert back.mass == pytest.approx(d.mass)


class TestTails:
    def test_objective_matches_cpt_of_reconstruction(self):
        x = (0.4, 0.2, 0.05)
        y = (0.5, 0.1, 0.0)
        for shift in (0, 2, -1):
            mass = {s + shift: q for s, q in reconstruct_mass(x, y).items()}
            assert objective_from_tails(x, y, shift, BENCH) == pytest.approx(
                cpt_value(mass, BENCH), abs=1e-12
            )

    def test_reconstruct_center(self):
        mass = reconstruct_mass((0.25, 0.25), (0.25, 0.0))
        assert mass == pytest.approx({2: 0.25, -1: 0.25, 0: 0.5})

    def test_rejects_increasing_tails(self):
        with pytest.raises(ValueError, match="monotone"):
            objective_from_tails((0.2, 0.3), (0.1, 0.0), 0, BENCH)

    def test_rejects_overweight_first_tails(self):
        with pytest.raises(ValueError, match="unit mass"):
            objective_from_tails((0.7, 0.0), (0.6, 0.0), 0, BENCH)

    @settings(max_examples=50)
    @given(st.integers(0, 2**32 - 1))
    def test_objective_agrees_on_random_feasible_laws(self, seed):
        from cptquit.solver import random_feasible_point

        tails = random_feasible_point(4, seed)
        x, y = tuple(tails.x), tuple(tails.y)
        mass = reconstruct_mass(x, y)
        assert objective_from_tails(x, y, 0, BENCH) == pytest.approx(
            cpt_value(mass, BENCH), abs=1e-12
        )
