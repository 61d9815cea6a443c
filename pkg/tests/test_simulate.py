import numpy as np
import pytest

from aoii import (ConfigError, MixedPolicy, SimConfig, SysState, SystemParams,
                  ThresholdPolicy, empirical_stationary, exact_rate,
                  expected_aoii, is_reachable, simulate)

PARAMS = SystemParams(5, 0.2, 0.7)
POLICY = ThresholdPolicy((6, 3, 1, 1))


class TestConfig:
    def test_rejects_bad_horizon(self):
        with pytest.raises(ConfigError):
            SimConfig(horizon=100, warmup=100)

    def test_rejects_mismatched_policy(self):
        with pytest.raises(ConfigError):
            simulate(ThresholdPolicy((3, 2)), PARAMS,
                     SimConfig(horizon=10_000, warmup=100))


class TestReproducibility:
    def test_same_seed_bit_identical(self):
        cfg = SimConfig(horizon=300_000, seed=9, warmup=1000)
        a = simulate(POLICY, PARAMS, cfg)
        b = simulate(POLICY, PARAMS, cfg)
        assert a.rate_hat == b.rate_hat
        assert a.aoii_hat == b.aoii_hat
        assert a.aoi_hat == b.aoi_hat
        np.testing.assert_array_equal(a.hist, b.hist)

    def test_different_seeds_differ(self):
        base = SimConfig(horizon=300_000, seed=9, warmup=1000)
        other = SimConfig(horizon=300_000, seed=10, warmup=1000)
        assert simulate(POLICY, PARAMS, base).rate_hat != \
            simulate(POLICY, PARAMS, other).rate_hat


class TestTrivialRegimes:
    def test_frozen_source(self):
        params = SystemParams(5, 0.0, 0.8)
        rep = simulate(POLICY, params, SimConfig(horizon=100_000, warmup=100))
        assert rep.rate_hat == 0.0
        assert rep.aoii_hat == 0.0
        assert rep.hist[0, 0] == pytest.approx(1.0)


class TestAgreementWithAnalytics:
    def test_rate_and_aoii(self):
        stat = exact_rate(POLICY, PARAMS)
        aoii = expected_aoii(POLICY, PARAMS, stat)
        rep = simulate(POLICY, PARAMS, SimConfig(horizon=4_000_000, seed=3))
        assert abs(rep.rate_hat - stat.rate) <= 3 * rep.rate_se
        assert abs(rep.aoii_hat - aoii.aoii) <= 3 * rep.aoii_se
        assert 0.0 <= rep.rate_hat <= 1.0
        assert rep.aoi_hat > 0

    def test_empirical_stationary_masses(self):
        stat = exact_rate(POLICY, PARAMS)
        cfg = SimConfig(horizon=4_000_000, seed=4)
        hist = empirical_stationary(POLICY, PARAMS, cfg)
        assert hist.sum() <= 1.0 + 1e-12
        n_eff = cfg.horizon - cfg.warmup
        se0 = np.sqrt(stat.pi00 * (1 - stat.pi00) / n_eff)
        # serial correlation inflates the binomial standard error; allow 3x
        assert abs(hist[0, 0] - stat.pi00) <= 9 * se0
        for d in range(1, 5):
            tail_emp = hist[d, stat.tau:].sum()
            p_tail = stat.pi_tail[d]
            se = np.sqrt(max(p_tail * (1 - p_tail), 1e-12) / n_eff)
            assert abs(tail_emp - p_tail) <= 9 * se

    def test_visited_states_are_reachable(self):
        hist = empirical_stationary(POLICY, PARAMS,
                                    SimConfig(horizon=500_000, seed=5))
        for d in range(5):
            for delta in np.nonzero(hist[d])[0]:
                assert is_reachable(SysState(int(d), int(delta)))


class TestMixedPolicies:
    def test_mixture_rate_interpolates(self):
        # neighboring endpoint policies, as the bisection produces: the
        # per-visit randomization then makes the average rate the linear
        # blend of the two stationary rates
        lo = ThresholdPolicy((7, 4, 2, 1))
        hi = ThresholdPolicy((8, 4, 2, 1))
        r_lo = exact_rate(lo, PARAMS).rate
        r_hi = exact_rate(hi, PARAMS).rate
        mixed = MixedPolicy(lo, hi, mu=0.3)
        rep = simulate(mixed, PARAMS, SimConfig(horizon=4_000_000, seed=6))
        expected = 0.3 * r_lo + 0.7 * r_hi
        assert abs(rep.rate_hat - expected) <= 3 * rep.rate_se

    def test_mu_one_equals_pure(self):
        lo = ThresholdPolicy((2, 1, 1, 1))
        hi = ThresholdPolicy((8, 4, 2, 1))
        cfg = SimConfig(horizon=300_000, seed=8, warmup=1000)
        mixed = simulate(MixedPolicy(lo, hi, mu=1.0), PARAMS, cfg)
        pure = simulate(lo, PARAMS, cfg)
        assert mixed.rate_hat == pure.rate_hat
        assert mixed.aoii_hat == pure.aoii_hat
