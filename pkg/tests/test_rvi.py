import numpy as np
import pytest

from aoii import (SolverConfig, SysState, SystemParams, ThresholdPolicy,
                  StructureViolationError, build_truncated_mdp, delta_v,
                  extract_thresholds, lower_bound, rvi_solve)

from oracles import canonical_thresholds, plain_rvi

SMALL_CASES = [
    (SystemParams(3, 0.25, 0.6), 0.0, 60),
    (SystemParams(3, 0.25, 0.6), 2.0, 60),
    (SystemParams(3, 0.1, 0.9), 7.5, 80),
    (SystemParams(4, 0.3, 0.5), 1.0, 60),
    (SystemParams(4, 0.2, 0.8), 12.0, 120),
]


class TestThresholdPolicy:
    def test_canonicalization(self):
        pol = ThresholdPolicy((37, 16, 8, 5, 4, 3))
        assert pol.canonical().n == (37, 16, 8, 1, 1, 1)
        assert pol.canonical().tau == 37

    def test_actions(self):
        pol = ThresholdPolicy((5, 3))
        assert pol.action(0, 0) == 0
        assert pol.action(1, 4) == 0
        assert pol.action(1, 5) == 1
        assert pol.action(2, 3) == 1

    def test_rejects_increasing_vectors(self):
        with pytest.raises(StructureViolationError):
            ThresholdPolicy((3, 5))
        with pytest.raises(StructureViolationError):
            ThresholdPolicy((3, 0))


class TestExtractThresholds:
    def test_all_idle_gives_sentinels(self):
        active = np.zeros((4, 31), dtype=bool)
        assert extract_thresholds(active, 30).n == (31, 31, 31)

    def test_uniform_map(self):
        active = np.zeros((4, 31), dtype=bool)
        active[1:, 5:] = True
        assert extract_thresholds(active, 30).n == (5, 5, 5)

    def test_rejects_non_threshold_maps(self):
        active = np.zeros((3, 31), dtype=bool)
        active[1, 5] = True
        active[1, 10:] = True
        with pytest.raises(StructureViolationError):
            extract_thresholds(active, 30)

    def test_rejects_active_synced_state(self):
        active = np.zeros((3, 31), dtype=bool)
        active[0, 0] = True
        with pytest.raises(StructureViolationError):
            extract_thresholds(active, 30)

    def test_cap_becomes_sentinel(self):
        active = np.zeros((3, 31), dtype=bool)
        active[1, 30] = True
        active[2, 10:] = True
        assert extract_thresholds(active, 30).n == (31, 10)


class TestRviSolve:
    def test_free_attempts_mean_always_transmit(self):
        params = SystemParams(5, 0.2, 0.7)
        mdp = build_truncated_mdp(params, 0.0, 40)
        policy, _ = rvi_solve(mdp, SolverConfig(m=40))
        assert policy.n == (1, 1, 1, 1)

    def test_normalization_and_monotone_values(self):
        params = SystemParams(4, 0.2, 0.8)
        mdp = build_truncated_mdp(params, 5.0, 60)
        policy, vf = rvi_solve(mdp, SolverConfig(m=60), check_monotone=True)
        assert vf.v[0, 0] == 0.0
        for d in range(1, 4):
            lo = lower_bound(d)
            assert np.all(np.diff(vf.v[d, lo:]) > 0)

    @pytest.mark.parametrize("params,lam,m", SMALL_CASES)
    def test_matches_kernel_walking_oracle(self, params, lam, m):
        mdp = build_truncated_mdp(params, lam, m)
        policy, _ = rvi_solve(mdp, SolverConfig(m=m, eps=0.005))
        oracle_n, _, _ = plain_rvi(mdp, eps=0.005)
        assert list(policy.n) == canonical_thresholds(oracle_n, params.N)

    @pytest.mark.parametrize("params,lam,m", SMALL_CASES)
    def test_pruned_equals_plain(self, params, lam, m):
        mdp = build_truncated_mdp(params, lam, m)
        cfg = SolverConfig(m=m)
        pol_fast, vf_fast = rvi_solve(mdp, cfg, improved=True)
        pol_plain, vf_plain = rvi_solve(mdp, cfg, improved=False)
        assert pol_fast.n == pol_plain.n
        assert np.max(np.abs(vf_fast.v - vf_plain.v)) <= 1e-9

    def test_warm_start_agrees(self):
        params = SystemParams(4, 0.25, 0.7)
        cfg = SolverConfig(m=60)
        mdp_a = build_truncated_mdp(params, 3.0, 60)
        _, vf = rvi_solve(mdp_a, cfg)
        mdp_b = build_truncated_mdp(params, 4.0, 60)
        cold, _ = rvi_solve(mdp_b, cfg)
        warm, _ = rvi_solve(mdp_b, cfg, v0=vf.v)
        assert cold.n == warm.n


class TestDeltaV:
    @pytest.mark.parametrize("lam", [0.0, 0.5, 3.0, 20.0])
    def test_synced_advantage_is_lambda(self, lam):
        params = SystemParams(4, 0.2, 0.8)
        mdp = build_truncated_mdp(params, lam, 60)
        _, vf = rvi_solve(mdp, SolverConfig(m=60))
        assert delta_v(mdp, vf, SysState(0, 0)) == pytest.approx(lam, abs=1e-12)

    def test_free_attempts_never_hurt(self):
        params = SystemParams(4, 0.2, 0.8)
        mdp = build_truncated_mdp(params, 0.0, 60)
        _, vf = rvi_solve(mdp, SolverConfig(m=60))
        for d in range(1, 4):
            for delta in range(lower_bound(d), 55):
                assert delta_v(mdp, vf, SysState(d, delta)) <= 1e-12

    def test_decreasing_in_delta_and_d(self):
        params = SystemParams(5, 0.2, 0.8)
        mdp = build_truncated_mdp(params, 8.0, 120)
        _, vf = rvi_solve(mdp, SolverConfig(m=120))
        for d in range(1, 5):
            vals = [delta_v(mdp, vf, SysState(d, delta))
                    for delta in range(lower_bound(d), 100)]
            assert all(b <= a + 1e-10 for a, b in zip(vals, vals[1:]))
        for delta in range(lower_bound(4), 100):
            across = [delta_v(mdp, vf, SysState(d, delta))
                      for d in range(1, 5)]
            assert all(b <= a + 1e-10 for a, b in zip(across, across[1:]))
