"""Slot-level Monte-Carlo simulator.

Simulates the source and estimate natively in (x, x_hat) coordinates and
derives (d, Delta) from them, making it an independent check on the analytic
machinery.  The hot loop is jitted and consumes pre-drawn uniform streams so
results are bit-reproducible for a given seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .dynamics import SystemParams
from .errors import ConfigError
from .constrained import MixedPolicy
from .rvi import ThresholdPolicy

_N_BATCHES = 40


@dataclass(frozen=True)
class SimConfig:
    horizon: int = 10_000_000
    seed: int = 0
    warmup: int = 10_000
    delta_cap: int = 2000

    def __post_init__(self):
        if not self.horizon > self.warmup >= 0:
            raise ConfigError(
                f"need horizon > warmup >= 0, got {self.horizon}, {self.warmup}")
        if self.delta_cap < 1:
            raise ConfigError("delta_cap must be >= 1")


@dataclass(frozen=True)
class SimReport:
    """Empirical long-run statistics with batch-means standard errors.

    ``hist`` is the visit-frequency over (d, Delta <= delta_cap); mass beyond
    the cap is dropped from it (so it sums to <= 1) and tracked separately in
    ``hist_overflow`` per mismatch level.  The generator name and seed are
    recorded so any report can be regenerated exactly.
    """

    rate_hat: float
    rate_se: float
    aoii_hat: float
    aoii_se: float
    aoi_hat: float
    hist: np.ndarray
    hist_overflow: np.ndarray
    seed: int
    generator: str = "pcg64"


@njit(cache=True)
def _run(N, p, ps, thr_a, thr_b, mu, horizon, warmup, u_src, u_ch, u_mix,
         n_batches, hist, overflow, delta_cap):
    x = (N + 1) // 2
    xhat = x
    delta = 0
    use_a = True
    batch_len = (horizon - warmup) // n_batches
    rate_b = np.zeros(n_batches)
    aoii_b = np.zeros(n_batches)
    aoi_sum = 0.0
    aoi = 0
    kept = 0
    for t in range(horizon):
        d = x - xhat if x >= xhat else xhat - x
        if d == 0:
            use_a = u_mix[t] < mu
            a = 0
        else:
            nd = thr_a[d - 1] if use_a else thr_b[d - 1]
            a = 1 if delta >= nd else 0
        success = False
        if a == 1 and u_ch[t] < ps:
            success = True
            xhat = x
            d = 0
        u = u_src[t]
        if d == 0:
            # synced: physical birth-death step, boundary mass inward
            if x == 1:
                if u < 2 * p:
                    x = 2
            elif x == N:
                if u < 2 * p:
                    x = N - 1
            else:
                if u < p:
                    x = x - 1
                elif u < 2 * p:
                    x = x + 1
        elif d == N - 1:
            # mismatch at its cap: step toward the estimate w.p. 2p
            if u < 2 * p:
                x = x - 1 if x > xhat else x + 1
        else:
            # intermediate mismatch: coordinate-free +-1 moves; translate the
            # pair back in frame if x exits 1..N so d follows its own kernel
            if u < p:
                x -= 1
            elif u < 2 * p:
                x += 1
            if x < 1:
                x += 1
                xhat += 1
            elif x > N:
                x -= 1
                xhat -= 1
        dn = x - xhat if x >= xhat else xhat - x
        if success:
            delta = dn
        elif dn == 0:
            delta = 0
        else:
            delta = delta + dn
        if success:
            aoi = 0
        else:
            aoi += 1
        if t >= warmup and kept < batch_len * n_batches:
            bi = kept // batch_len
            rate_b[bi] += a
            aoii_b[bi] += delta
            aoi_sum += aoi
            if delta <= delta_cap:
                hist[dn, delta] += 1
            else:
                overflow[dn] += 1
            kept += 1
    rate_b /= batch_len
    aoii_b /= batch_len
    return rate_b, aoii_b, aoi_sum / kept, kept


def _as_mixed(policy) -> MixedPolicy:
    if isinstance(policy, ThresholdPolicy):
        return MixedPolicy(policy, policy, mu=1.0)
    if isinstance(policy, MixedPolicy):
        return policy
    raise ConfigError(f"unsupported policy type {type(policy).__name__}")


def simulate(policy, params: SystemParams, cfg: SimConfig) -> SimReport:
    """Run one trajectory under a pure or mixed threshold policy.

    Mixed policies redraw the active component at every visit to the synced
    state.  Statistics are accumulated after warmup; standard errors come
    from 40 equal batches.
    """
    mixed = _as_mixed(policy)
    if mixed.n_minus.N != params.N:
        raise ConfigError(
            f"policy is for N={mixed.n_minus.N}, params have N={params.N}")
    rng = np.random.default_rng(cfg.seed)
    u_src = rng.random(cfg.horizon)
    u_ch = rng.random(cfg.horizon)
    u_mix = rng.random(cfg.horizon)
    hist = np.zeros((params.N, cfg.delta_cap + 1), dtype=np.int64)
    overflow = np.zeros(params.N, dtype=np.int64)
    thr_a = np.asarray(mixed.n_minus.n, dtype=np.int64)
    thr_b = np.asarray(mixed.n_plus.n, dtype=np.int64)
    rate_b, aoii_b, aoi_hat, kept = _run(
        params.N, params.p, params.p_s, thr_a, thr_b, mixed.mu,
        cfg.horizon, cfg.warmup, u_src, u_ch, u_mix,
        _N_BATCHES, hist, overflow, cfg.delta_cap)
    scale = np.sqrt(_N_BATCHES)
    return SimReport(
        rate_hat=float(rate_b.mean()),
        rate_se=float(rate_b.std(ddof=1) / scale),
        aoii_hat=float(aoii_b.mean()),
        aoii_se=float(aoii_b.std(ddof=1) / scale),
        aoi_hat=float(aoi_hat),
        hist=hist / kept,
        hist_overflow=overflow / kept,
        seed=cfg.seed,
    )


def empirical_stationary(policy: ThresholdPolicy, params: SystemParams,
                         cfg: SimConfig) -> np.ndarray:
    """Empirical visit frequencies over (d, Delta), directly comparable to
    the analytic stationary masses."""
    if not isinstance(policy, ThresholdPolicy):
        raise ConfigError("empirical_stationary needs a pure policy")
    return simulate(policy, params, cfg).hist
