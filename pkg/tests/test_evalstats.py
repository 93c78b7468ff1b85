import math

import numpy as np
import pytest
from scipy import integrate

import anisogcn as ag
from anisogcn.evalstats import AccuracySample, f_upper_tail, regularized_incomplete_beta


class TestAccuracy:
    def test_all_correct(self):
        yhat = np.eye(3)
        assert ag.accuracy(yhat, np.array([0, 1, 2]), np.array([0, 1, 2])) == 1.0

    def test_all_wrong(self):
        yhat = np.eye(3)
        assert ag.accuracy(yhat, np.array([1, 2, 0]), np.array([0, 1, 2])) == 0.0

    def test_half(self):
        yhat = np.array([[0.9, 0.1], [0.9, 0.1]])
        assert ag.accuracy(yhat, np.array([0, 1]), np.array([0, 1])) == 0.5

    def test_tie_breaks_to_smaller_class(self):
        yhat = np.array([[0.5, 0.5]])
        assert ag.accuracy(yhat, np.array([0]), np.array([0])) == 1.0
        assert ag.accuracy(yhat, np.array([1]), np.array([0])) == 0.0

    def test_empty_mask_rejected(self):
        with pytest.raises(ValueError):
            ag.accuracy(np.eye(2), np.array([0, 1]), np.array([], dtype=int))


class TestAccuracySample:
    def test_validation(self):
        with pytest.raises(ValueError):
            AccuracySample("x", ())
        with pytest.raises(ValueError):
            AccuracySample("x", (0.5, 1.2))


class TestOneWayAnova:
    def test_hand_computed_fixture(self):
        groups = [
            AccuracySample("a", (0.1, 0.2, 0.3)),
            AccuracySample("b", (0.2, 0.3, 0.4)),
            AccuracySample("c", (0.3, 0.4, 0.5)),
        ]
        f_stat, p = ag.one_way_anova(groups)
        assert abs(f_stat - 3.0) < 1e-12
        assert 0.0 < p < 1.0

    def test_identical_means_give_f_zero(self):
        groups = [
            AccuracySample("a", (0.4, 0.6)),
            AccuracySample("b", (0.5, 0.5)),
        ]
        f_stat, p = ag.one_way_anova(groups)
        assert f_stat == 0.0
        assert p == 1.0

    def test_double_zero_variance_is_an_error(self):
        groups = [
            AccuracySample("a", (0.5, 0.5)),
            AccuracySample("b", (0.5, 0.5)),
        ]
        with pytest.raises(ValueError):
            ag.one_way_anova(groups)

    def test_zero_within_variance_with_gap(self):
        groups = [
            AccuracySample("a", (0.4, 0.4)),
            AccuracySample("b", (0.6, 0.6)),
        ]
        f_stat, p = ag.one_way_anova(groups)
        assert math.isinf(f_stat)
        assert p == 0.0

    def test_invariance_under_shift_and_scale(self):
        rng = np.random.default_rng(0)
        base = [rng.uniform(0.1, 0.3, size=6) for _ in range(3)]
        f0, _ = ag.one_way_anova([AccuracySample(str(i), tuple(g)) for i, g in enumerate(base)])
        shifted = [g + 0.3 for g in base]
        f1, _ = ag.one_way_anova([AccuracySample(str(i), tuple(g)) for i, g in enumerate(shifted)])
        scaled = [g * 2.5 for g in base]
        f2, _ = ag.one_way_anova([AccuracySample(str(i), tuple(g)) for i, g in enumerate(scaled)])
        assert abs(f0 - f1) < 1e-9 * max(1.0, abs(f0))
        assert abs(f0 - f2) < 1e-9 * max(1.0, abs(f0))

    def test_clear_gap_with_tight_spread_is_significant(self):
        # three methods, 10 runs each: mean gaps above one accuracy point
        # with sub-point spread must come out significant at 0.05
        rng = np.random.default_rng(5)
        groups = []
        for i, mean in enumerate((0.790, 0.805, 0.830)):
            values = np.clip(mean + rng.normal(0.0, 0.004, size=10), 0, 1)
            groups.append(AccuracySample(f"m{i}", tuple(values)))
        _, p = ag.one_way_anova(groups)
        assert p < 0.05

    def test_needs_two_groups_of_two(self):
        with pytest.raises(ValueError):
            ag.one_way_anova([AccuracySample("a", (0.1, 0.2))])
        with pytest.raises(ValueError):
            ag.one_way_anova([AccuracySample("a", (0.1, 0.2)), AccuracySample("b", (0.3,))])


def _f_density(x, d1, d2):
    log_b = math.lgamma(d1 / 2) + math.lgamma(d2 / 2) - math.lgamma((d1 + d2) / 2)
    log_f = (
        (d1 / 2) * math.log(d1 / d2)
        + (d1 / 2 - 1) * math.log(x)
        - ((d1 + d2) / 2) * math.log1p(d1 * x / d2)
        - log_b
    )
    return math.exp(log_f)


class TestFUpperTail:
    def test_boundary_values(self):
        assert f_upper_tail(0.0, 2, 6) == 1.0
        assert f_upper_tail(math.inf, 2, 6) == 0.0

    def test_monotone_decreasing_in_f(self):
        for d1, d2 in ((2, 6), (3, 27), (5, 12)):
            values = [f_upper_tail(f, d1, d2) for f in np.linspace(0.01, 30.0, 200)]
            assert all(a >= b for a, b in zip(values, values[1:]))

    def test_against_numerical_integration(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            d1 = int(rng.integers(1, 12))
            d2 = int(rng.integers(2, 40))
            f = float(rng.uniform(0.05, 12.0))
            expected, err = integrate.quad(
                _f_density, f, np.inf, args=(d1, d2), epsabs=1e-12, limit=200
            )
            assert err < 1e-8
            assert abs(f_upper_tail(f, d1, d2) - expected) < 1e-8

    def test_incomplete_beta_edge_cases(self):
        assert regularized_incomplete_beta(0.0, 2.0, 3.0) == 0.0
        assert regularized_incomplete_beta(1.0, 2.0, 3.0) == 1.0
        # symmetric case I_{1/2}(a, a) = 1/2
        assert abs(regularized_incomplete_beta(0.5, 4.0, 4.0) - 0.5) < 1e-12
