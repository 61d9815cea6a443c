import pytest

from aoii import (MixedPolicy, SolverConfig, SystemParams, ThresholdPolicy,
                  TruncationError, bisection, exact_rate, mix_coefficient,
                  solve_constrained)

FAST = SolverConfig(m=120)


class TestMixCoefficient:
    def test_boundaries(self):
        assert mix_coefficient(0.06, 0.05, 0.06) == pytest.approx(1.0)
        assert mix_coefficient(0.09, 0.06, 0.06) == pytest.approx(0.0)

    def test_interior(self):
        assert mix_coefficient(0.09, 0.05, 0.06) == pytest.approx(0.25)

    def test_degenerate_bracket(self):
        assert mix_coefficient(0.06, 0.06, 0.06) == 0.0

    def test_rejects_alpha_outside_bracket(self):
        with pytest.raises(ValueError):
            mix_coefficient(0.05, 0.04, 0.06)


class TestMixedPolicy:
    def test_component_ordering_enforced(self):
        lo = ThresholdPolicy((5, 3))
        hi = ThresholdPolicy((6, 3))
        MixedPolicy(lo, hi, mu=0.4)
        with pytest.raises(ValueError):
            MixedPolicy(hi, lo, mu=0.4)
        with pytest.raises(ValueError):
            MixedPolicy(lo, hi, mu=1.4)

    def test_pure_detection(self):
        lo = ThresholdPolicy((5, 3))
        assert MixedPolicy(lo, lo, mu=1.0).is_pure
        assert not MixedPolicy(lo, ThresholdPolicy((6, 3)), mu=0.5).is_pure


class TestBisection:
    def test_bracket_validity_and_monotone_probes(self):
        params = SystemParams(4, 0.2, 0.7, alpha=0.1)
        br = bisection(params, FAST)
        assert br.r_minus >= params.alpha >= br.r_plus
        assert br.lambda_minus <= br.lambda_plus
        assert br.lambda_plus - br.lambda_minus < FAST.xi
        assert all(lo <= hi for lo, hi in zip(br.n_minus.n, br.n_plus.n))
        by_lambda = sorted(br.probes, key=lambda t: t[0])
        rates = [r for _, _, r in by_lambda]
        assert all(b <= a + 1e-12 for a, b in zip(rates, rates[1:]))

    def test_saturation_returns_pure_always_transmit(self):
        params = SystemParams(4, 0.2, 0.7, alpha=0.9)
        br = bisection(params, FAST)
        assert br.saturated
        assert br.n_minus.n == (1, 1, 1)
        assert br.r_minus <= params.alpha

    def test_truncation_flag(self):
        params = SystemParams(7, 0.2, 0.8, alpha=0.06)
        with pytest.raises(TruncationError):
            bisection(params, SolverConfig(m=30))


class TestSolveConstrained:
    def test_constraint_met_with_equality(self):
        params = SystemParams(4, 0.25, 0.6, alpha=0.08)
        sol = solve_constrained(params, FAST)
        assert sol.rate == pytest.approx(params.alpha, abs=1e-6)
        mu = sol.policy.mu
        r_lo = exact_rate(sol.policy.n_minus, params).rate
        r_hi = exact_rate(sol.policy.n_plus, params).rate
        assert mu * r_lo + (1 - mu) * r_hi == pytest.approx(params.alpha, abs=1e-6)
        assert sol.aoii > 0
        assert sol.diagnostics["n_probes"] >= 2

    def test_small_instance_table_values(self):
        """The N=7, p=0.1 setting has a known reference bracket; it also runs fast
        enough for the unit suite (the full grid lives in the acceptance
        tests)."""
        params = SystemParams(7, 0.1, 0.8, alpha=0.06)
        sol = solve_constrained(params, SolverConfig(m=400))
        assert sol.policy.n_minus.n == (15, 6, 1, 1, 1, 1)
        assert sol.policy.n_plus.n == (15, 7, 1, 1, 1, 1)
        assert sol.policy.mu == pytest.approx(0.7176, abs=0.02)

    def test_saturated_solution_is_pure(self):
        params = SystemParams(4, 0.2, 0.7, alpha=0.9)
        sol = solve_constrained(params, FAST)
        assert sol.policy.is_pure and sol.policy.mu == 1.0
        assert sol.rate <= params.alpha + 1e-6
