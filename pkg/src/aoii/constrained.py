"""Lagrangian bisection for the rate-constrained problem.

Each transmission is priced at lambda; the unconstrained solve is run at a
shrinking bracket of multipliers until its width falls below xi, yielding two
neighboring threshold policies whose rates straddle the budget.  Randomizing
between them at every visit to the synced state makes the constraint tight.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .dynamics import SystemParams
from .errors import TruncationError
from .mdp import SolverConfig, build_truncated_mdp
from .rvi import ThresholdPolicy, rvi_solve
from .stationary import exact_rate, expected_aoii


@dataclass(frozen=True)
class MixedPolicy:
    """Randomized mixture of two threshold policies: at every visit to the
    synced state, follow n_minus with probability mu, else n_plus."""

    n_minus: ThresholdPolicy
    n_plus: ThresholdPolicy
    mu: float
    lambda_minus: float = 0.0
    lambda_plus: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.mu <= 1.0:
            raise ValueError(f"mu must lie in [0, 1], got {self.mu}")
        if any(lo > hi for lo, hi in zip(self.n_minus.n, self.n_plus.n)):
            raise ValueError(
                "n_minus must be componentwise <= n_plus "
                f"({self.n_minus.n} vs {self.n_plus.n})")

    @property
    def is_pure(self) -> bool:
        return self.n_minus.n == self.n_plus.n


@dataclass(frozen=True)
class BisectionResult:
    lambda_minus: float
    lambda_plus: float
    n_minus: ThresholdPolicy
    n_plus: ThresholdPolicy
    r_minus: float
    r_plus: float
    probes: tuple = ()
    saturated: bool = False


@dataclass(frozen=True)
class ConstrainedSolution:
    policy: MixedPolicy
    rate: float
    aoii: float
    diagnostics: dict = field(default_factory=dict)


def mix_coefficient(r_minus: float, r_plus: float, alpha: float) -> float:
    """Mixing probability making the average rate hit alpha exactly.

    Degenerate brackets (equal endpoint rates, which can only happen when the
    budget is already met) yield 0.
    """
    if r_minus == r_plus:
        return 0.0
    if not r_plus <= alpha <= r_minus:
        raise ValueError(
            f"alpha={alpha} outside the bracket [{r_plus}, {r_minus}]")
    return (alpha - r_plus) / (r_minus - r_plus)


def _probe(params, cfg, lam, warm):
    """Solve one multiplier.  If a threshold hits the cap the policy is
    unreliable there; the rate reported is that of the cap-clamped policy,
    which upper-bounds the true rate (thresholds only grow past the cap), so
    the probe can still serve as an upper bracket endpoint provided it is
    later replaced by a sentinel-free one."""
    mdp = build_truncated_mdp(params, lam, cfg.m)
    policy, vf = rvi_solve(mdp, cfg, v0=warm)
    truncated = policy.has_sentinel(cfg.m)
    rate_policy = policy
    if truncated:
        rate_policy = ThresholdPolicy(tuple(min(t, cfg.m) for t in policy.n))
    stat = exact_rate(rate_policy, params)
    return policy, vf, stat, truncated


def bisection(params: SystemParams, cfg: SolverConfig) -> BisectionResult:
    """Bracket the critical multiplier: double up from [0, 1] until the rate
    drops below the budget, then bisect until the bracket is narrower than
    cfg.xi.  Each probe warm-starts value iteration from the previous one.
    """
    cfg.validate_for(params)
    alpha = params.alpha

    def check_lower(lam, truncated, rate):
        # a lower bracket endpoint (rate >= alpha) must be trustworthy
        if truncated:
            raise TruncationError(
                f"threshold hit the cap m={cfg.m} at lambda={lam} while its "
                f"rate {rate:.4g} still meets the budget; increase m")

    probes = []
    policy0, vf, stat0, trunc0 = _probe(params, cfg, 0.0, None)
    probes.append((0.0, policy0.n, stat0.rate))
    if stat0.rate <= alpha:
        check_lower(0.0, trunc0, stat0.rate)
        return BisectionResult(0.0, 0.0, policy0, policy0,
                               stat0.rate, stat0.rate,
                               probes=tuple(probes), saturated=True)
    check_lower(0.0, trunc0, stat0.rate)
    lam_lo, n_lo, r_lo = 0.0, policy0, stat0.rate
    lam_hi = 1.0
    policy, vf, stat, trunc = _probe(params, cfg, lam_hi, vf.v)
    probes.append((lam_hi, policy.n, stat.rate))
    while stat.rate >= alpha:
        check_lower(lam_hi, trunc, stat.rate)
        lam_lo, n_lo, r_lo = lam_hi, policy, stat.rate
        lam_hi *= 2.0
        policy, vf, stat, trunc = _probe(params, cfg, lam_hi, vf.v)
        probes.append((lam_hi, policy.n, stat.rate))
    n_hi, r_hi = policy, stat.rate
    while lam_hi - lam_lo >= cfg.xi:
        lam = 0.5 * (lam_lo + lam_hi)
        policy, vf, stat, trunc = _probe(params, cfg, lam, vf.v)
        probes.append((lam, policy.n, stat.rate))
        if stat.rate >= alpha:
            check_lower(lam, trunc, stat.rate)
            lam_lo, n_lo, r_lo = lam, policy, stat.rate
        else:
            lam_hi, n_hi, r_hi = lam, policy, stat.rate
    for lam, endpoint in ((lam_lo, n_lo), (lam_hi, n_hi)):
        if endpoint.has_sentinel(cfg.m):
            raise TruncationError(
                f"final bracket endpoint at lambda={lam} has a threshold at "
                f"the cap m={cfg.m}; increase m")
    return BisectionResult(lam_lo, lam_hi, n_lo, n_hi, r_lo, r_hi,
                           probes=tuple(probes))


def solve_constrained(params: SystemParams, cfg: SolverConfig) -> ConstrainedSolution:
    """Full constrained solve: bisection, mixing coefficient, and the
    achieved rate / expected penalty of the mixture (the mu-weighted
    combination of the endpoint policies' stationary values)."""
    t0 = time.perf_counter()
    br = bisection(params, cfg)
    if br.saturated:
        stat = exact_rate(br.n_minus, params)
        aoii = expected_aoii(br.n_minus, params, stat).aoii
        policy = MixedPolicy(br.n_minus, br.n_plus, mu=1.0,
                             lambda_minus=0.0, lambda_plus=0.0)
        rate = br.r_minus
    else:
        mu = mix_coefficient(br.r_minus, br.r_plus, params.alpha)
        stat_lo = exact_rate(br.n_minus, params)
        stat_hi = exact_rate(br.n_plus, params)
        aoii_lo = expected_aoii(br.n_minus, params, stat_lo).aoii
        aoii_hi = expected_aoii(br.n_plus, params, stat_hi).aoii
        aoii = mu * aoii_lo + (1.0 - mu) * aoii_hi
        rate = mu * br.r_minus + (1.0 - mu) * br.r_plus
        policy = MixedPolicy(br.n_minus, br.n_plus, mu=mu,
                             lambda_minus=br.lambda_minus,
                             lambda_plus=br.lambda_plus)
    diagnostics = {
        "probes": br.probes,
        "n_probes": len(br.probes),
        "saturated": br.saturated,
        "runtime_s": time.perf_counter() - t0,
    }
    return ConstrainedSolution(policy=policy, rate=rate, aoii=aoii,
                               diagnostics=diagnostics)
