"""Finite truncation of the (d, Delta) decision process.

The penalty coordinate is capped at m; successor mass that would land beyond
the cap is folded onto the (same d, Delta=m) boundary cell.  The resulting
finite MDP is the substrate for relative value iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .dynamics import (SysState, SystemParams, TransitionEntry, lower_bound,
                       next_state_distribution)
from .errors import ConfigError


@dataclass(frozen=True)
class SolverConfig:
    """Numerical knobs: truncation cap m, value-iteration tolerance eps,
    bisection tolerance xi, and the normalization reference state."""

    m: int = 800
    eps: float = 0.01
    xi: float = 0.01
    ref_state: SysState = SysState(0, 0)
    max_iter: int = 100_000

    def __post_init__(self):
        if self.eps <= 0 or self.xi <= 0:
            raise ConfigError("eps and xi must be positive")
        if self.max_iter <= 0:
            raise ConfigError("max_iter must be positive")

    def validate_for(self, params: SystemParams):
        min_m = lower_bound(params.N - 1) + params.N
        if self.m < min_m:
            raise ConfigError(
                f"m={self.m} too small for N={params.N}; need m >= {min_m}")


def instant_cost(s: SysState, a: int, lam: float) -> float:
    """Per-slot cost: current penalty plus lam per transmission attempt."""
    if lam < 0:
        raise ConfigError(f"lambda must be non-negative, got {lam}")
    return s.delta + lam * a


def min_truncation(params: SystemParams) -> int:
    return lower_bound(params.N - 1) + params.N


@dataclass(frozen=True)
class TruncatedMDP:
    """Immutable finite MDP over reachable (d, Delta <= m) states.

    ``kernel[(s, a)]`` lists the successors after folding; every row sums to
    one and no successor exceeds the cap.
    """

    params: SystemParams
    lam: float
    m: int
    states: tuple[SysState, ...]
    kernel: dict[tuple[SysState, int], tuple[TransitionEntry, ...]] = field(repr=False)

    def transitions(self, s: SysState, a: int) -> tuple[TransitionEntry, ...]:
        return self.kernel[(s, a)]

    def cost(self, s: SysState, a: int) -> float:
        return instant_cost(s, a, self.lam)


def _fold(entries: list[TransitionEntry], m: int) -> tuple[TransitionEntry, ...]:
    masses: dict[SysState, float] = {}
    for nxt, prob in entries:
        if nxt.delta > m:
            nxt = SysState(nxt.d, m)
        masses[nxt] = masses.get(nxt, 0.0) + prob
    return tuple(TransitionEntry(k, v) for k, v in sorted(masses.items()))


def build_truncated_mdp(params: SystemParams, lam: float, m: int) -> TruncatedMDP:
    """Materialize the capped MDP: enumerate reachable states up to Delta=m
    (the Delta=m boundary row is kept for every d since folding targets it)
    and fold excess successor mass onto that row."""
    if m < min_truncation(params):
        raise ConfigError(
            f"m={m} below the minimum {min_truncation(params)} for N={params.N}")
    if lam < 0:
        raise ConfigError("lambda must be non-negative")
    states = [SysState(0, 0)]
    for d in range(1, params.N):
        for delta in range(lower_bound(d), m + 1):
            states.append(SysState(d, delta))
    kernel = {}
    for s in states:
        for a in (0, 1):
            kernel[(s, a)] = _fold(next_state_distribution(s, a, params), m)
    return TruncatedMDP(params=params, lam=lam, m=m,
                        states=tuple(states), kernel=kernel)
