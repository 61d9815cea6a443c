"""Source / estimate dynamics for the remote-estimation system.

An N-state birth-death source is tracked by a receiver estimate.  The pair
(d, Delta) -- mismatch magnitude and accumulated age-of-incorrect-information
penalty -- is a sufficient statistic for the whole system, and this module
encodes its one-step transition law under both actions (idle / transmit) and
both channel outcomes, plus a native (x, x_hat) sampler used by the
simulator as an independent realization of the same law.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class SystemParams:
    """Source, channel and budget parameters.

    N     -- number of source states (>= 2)
    p     -- per-slot probability of moving to one adjacent state (<= 1/3 so
             that transmission attempts always help)
    p_s   -- channel success probability
    alpha -- transmission-rate budget
    """

    N: int
    p: float
    p_s: float
    alpha: float = 0.5

    def __post_init__(self):
        if not (isinstance(self.N, (int, np.integer)) and self.N >= 2):
            raise ConfigError(f"N must be an integer >= 2, got {self.N}")
        if not 0.0 <= self.p <= 1.0 / 3.0 + 1e-12:
            raise ConfigError(f"p must lie in [0, 1/3], got {self.p}")
        if not 0.0 < self.p_s <= 1.0:
            raise ConfigError(f"p_s must lie in (0, 1], got {self.p_s}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")

    @property
    def p_f(self) -> float:
        return 1.0 - self.p_s


class SysState(NamedTuple):
    """Mismatch magnitude d in 0..N-1 and penalty value delta."""

    d: int
    delta: int


class SourceState(NamedTuple):
    """Native system state: true value x, estimate x_hat (both in 1..N) and
    u = number of slots since the estimate was last correct (0 when synced)."""

    x: int
    x_hat: int
    u: int = 0


class TransitionEntry(NamedTuple):
    next: SysState
    prob: float


def lower_bound(d: int) -> int:
    """Smallest penalty value reachable at mismatch level d: (d^2 + d) / 2."""
    return (d * d + d) // 2


def is_reachable(s: SysState) -> bool:
    """True iff (d, delta) can occur when starting from the synced state."""
    d, delta = s
    if d == 0:
        return delta == 0
    return d >= 1 and delta >= lower_bound(d)


def _check_state(s: SysState):
    d, delta = s
    if (d == 0) != (delta == 0):
        raise ConfigError(f"invalid state {s!r}: d=0 and delta=0 must coincide")
    if d < 0 or delta < 0:
        raise ConfigError(f"invalid state {s!r}: negative components")


def d_kernel(params: SystemParams, attempt_failed_context: bool = False) -> np.ndarray:
    """One-step kernel of the mismatch process d when no update is received.

    Returns the (N, N) matrix K with K[d, d'] = Pr(d' | d): self-loop 1-2p,
    each neighbor p, except both boundary rows which push their whole 2p mass
    inward.  With ``attempt_failed_context`` the same kernel is scaled by p_f,
    i.e. it is the failed-attempt branch of the transmit action.
    """
    N, p = params.N, params.p
    K = np.zeros((N, N))
    np.fill_diagonal(K, 1.0 - 2.0 * p)
    K[0, 1] += 2.0 * p
    K[N - 1, N - 2] += 2.0 * p
    for d in range(1, N - 1):
        K[d, d - 1] = p
        K[d, d + 1] = p
    if attempt_failed_context:
        K = params.p_f * K
    return K


def _delta_after(delta: int, d_next: int) -> int:
    return 0 if d_next == 0 else delta + d_next


def next_state_distribution(s: SysState, a: int, params: SystemParams) -> list[TransitionEntry]:
    """Distribution of (d', delta') from state s under action a.

    Idle: the mismatch moves by the no-reception kernel and the penalty
    accumulates d' (resetting to zero on a correct estimate).  Transmit: with
    probability p_s the update lands and the post-reception mismatch is 0, so
    the next slot starts from the synced row; with probability p_f the idle
    law applies unchanged.
    """
    _check_state(s)
    if a not in (0, 1):
        raise ConfigError(f"action must be 0 or 1, got {a!r}")
    d, delta = s
    if d >= params.N:
        raise ConfigError(f"state {s!r} has d >= N={params.N}")
    K = d_kernel(params)
    masses: dict[SysState, float] = {}

    def put(d_next, prob, base_delta):
        if prob <= 0.0:
            return
        nxt = SysState(d_next, _delta_after(base_delta, d_next))
        masses[nxt] = masses.get(nxt, 0.0) + prob

    fail_scale = params.p_f if a == 1 else 1.0
    for d_next in range(params.N):
        put(d_next, fail_scale * K[d, d_next], delta)
    if a == 1:
        # successful reception: estimate synced before the source moves
        put(0, params.p_s * K[0, 0], 0)
        put(1, params.p_s * K[0, 1], 0)
    return [TransitionEntry(k, v) for k, v in sorted(masses.items())]


def step_source(src: SourceState, a: int, channel_success: bool,
                params: SystemParams, rng: np.random.Generator) -> SourceState:
    """Advance the native (x, x_hat) system one slot.

    A successful transmission delivers the pre-move source value instantly, so
    the estimate equals x before the source advances.  The source then takes
    one step whose law depends only on the current mismatch: from a synced or
    fully-stretched configuration the step is the physical birth-death move
    (boundary mass folded inward / toward the estimate), while at intermediate
    mismatch the +-1 moves are coordinate-free -- the pair is translated back
    in frame if x would leave 1..N, which keeps the d-marginal an exact
    realization of ``d_kernel`` at every mismatch level.
    """
    N, p = params.N, params.p
    x, x_hat, u = src
    if not (1 <= x <= N and 1 <= x_hat <= N):
        raise ConfigError(f"invalid source state {src!r}")
    if a == 1 and channel_success:
        x_hat = x
    d = abs(x - x_hat)
    v = rng.random()
    if d == 0:
        if x == 1:
            if v < 2 * p:
                x = 2
        elif x == N:
            if v < 2 * p:
                x = N - 1
        else:
            if v < p:
                x -= 1
            elif v < 2 * p:
                x += 1
    elif d == N - 1:
        if v < 2 * p:
            x = x - 1 if x > x_hat else x + 1
    else:
        if v < p:
            x -= 1
        elif v < 2 * p:
            x += 1
        if x < 1:
            x += 1
            x_hat += 1
        elif x > N:
            x -= 1
            x_hat -= 1
    u = 0 if x == x_hat else u + 1
    return SourceState(x, x_hat, u)
