"""Relative value iteration with threshold-structure pruning.

The average-cost Bellman recursion is iterated on the truncated chain with
the value normalized at a reference state.  Because the optimal policy is
known to be a per-d threshold in Delta with non-increasing thresholds in d,
the improved sweep skips the action comparison at any state dominated by an
already-active one; the result is required (and tested) to coincide exactly
with the plain sweep.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import SysState, d_kernel, lower_bound
from .errors import NonConvergenceError, StructureViolationError
from .mdp import SolverConfig, TruncatedMDP


@dataclass(frozen=True)
class ThresholdPolicy:
    """Per-mismatch-level activation thresholds n_d, d = 1..N-1.

    Transmit at (d, Delta) iff d >= 1 and Delta >= n_d.  A sentinel value
    (any n_d > the solver's cap m, conventionally m+1) means "never transmit
    at this d".  Thresholds must be non-increasing in d.
    """

    n: tuple[int, ...]

    def __post_init__(self):
        if len(self.n) < 1:
            raise StructureViolationError("empty threshold vector")
        if any(t < 1 for t in self.n):
            raise StructureViolationError(f"thresholds must be >= 1: {self.n}")
        if any(a < b for a, b in zip(self.n, self.n[1:])):
            raise StructureViolationError(
                f"thresholds must be non-increasing in d: {self.n}")

    @property
    def N(self) -> int:
        return len(self.n) + 1

    @property
    def tau(self) -> int:
        return max(self.n)

    def action(self, d: int, delta: int) -> int:
        if d == 0:
            return 0
        return 1 if delta >= self.n[d - 1] else 0

    def canonical(self) -> "ThresholdPolicy":
        """Collapse thresholds at or below the reachability bound l_d to 1.

        Since no state with Delta < l_d ever occurs, any such threshold
        prescribes the same actions as 1; the collapsed form is the unique
        representative used for reporting and comparison.
        """
        out = tuple(1 if t <= lower_bound(d) else t
                    for d, t in enumerate(self.n, start=1))
        return ThresholdPolicy(out)

    def has_sentinel(self, m: int) -> bool:
        return any(t >= m for t in self.n)


@dataclass(frozen=True)
class ValueFunction:
    """Converged relative values over the dense (d, Delta <= m) grid.

    ``v`` is normalized to zero at the reference state after every sweep;
    ``q_ref`` is the pre-normalization value there at the final sweep, i.e.
    the average-cost estimate.
    """

    v: np.ndarray
    q_ref: float
    iterations: int
    converged: bool = True


def _successor_index(N: int, m: int) -> np.ndarray:
    """idx[d', Delta] = the Delta' reached when the mismatch lands on d'
    starting from penalty Delta, with folding onto the cap."""
    idx = np.empty((N, m + 1), dtype=np.int64)
    idx[0, :] = 0
    for d in range(1, N):
        idx[d, :] = np.minimum(np.arange(m + 1) + d, m)
    return idx


def _expected_next(V: np.ndarray, K: np.ndarray, idx: np.ndarray) -> np.ndarray:
    G = np.empty_like(V)
    for d in range(V.shape[0]):
        G[d] = V[d, idx[d]]
    return K @ G


def _check_value_monotonicity(V: np.ndarray, N: int, m: int, iteration: int):
    for d in range(1, N):
        lo = lower_bound(d)
        row = V[d, lo:m + 1]
        if not np.all(np.diff(row) > 0):
            raise StructureViolationError(
                f"value not strictly increasing in Delta at d={d}, "
                f"iteration {iteration}")
    for d in range(1, N - 1):
        lo = lower_bound(d + 1)
        diff = V[d + 1, lo:m + 1] - V[d, lo:m + 1]
        if np.min(diff) < -1e-12:
            raise StructureViolationError(
                f"value not increasing in d at d={d}->{d + 1}, "
                f"iteration {iteration}")


def extract_thresholds(active: np.ndarray, m: int | None = None) -> ThresholdPolicy:
    """Read thresholds off a boolean action map of shape (N, m+1).

    n_d is the smallest Delta with an active entry in row d; rows must be
    upward-closed in Delta and (0, 0) must be idle, otherwise the map does
    not describe a threshold policy and a structure violation is raised.
    Thresholds at or beyond the cap become the sentinel m + 1.
    """
    active = np.asarray(active, dtype=bool)
    N, width = active.shape
    if m is None:
        m = width - 1
    if active[0, 0]:
        raise StructureViolationError("synced state (0,0) marked active")
    n = []
    for d in range(1, N):
        row = active[d, 1:]
        if row.any():
            first = int(np.argmax(row)) + 1
            if not row[first - 1:].all():
                raise StructureViolationError(
                    f"action map row d={d} is not upward-closed in Delta")
            n.append(first if first < m else m + 1)
        else:
            n.append(m + 1)
    return ThresholdPolicy(tuple(n))


def rvi_solve(mdp: TruncatedMDP, cfg: SolverConfig, improved: bool = True,
              v0: np.ndarray | None = None,
              check_monotone: bool = False) -> tuple[ThresholdPolicy, ValueFunction]:
    """Iterate the normalized Bellman update until the sup-norm change drops
    below cfg.eps; return the canonical threshold policy and the values.

    With ``improved`` the action comparison is skipped at states dominated by
    an already-active state in the current sweep (d ascending, Delta
    ascending, so a running minimum threshold suffices); row d = 0 is always
    evaluated plainly.  ``v0`` warm-starts the iteration.
    """
    cfg.validate_for(mdp.params)
    params, m, lam = mdp.params, mdp.m, mdp.lam
    N, p, ps = params.N, params.p, params.p_s
    pf = params.p_f
    K = d_kernel(params)
    idx = _successor_index(N, m)
    deltas = np.arange(m + 1, dtype=float)
    V = np.tile(deltas, (N, 1)) if v0 is None else np.array(v0, dtype=float)
    rd, rD = cfg.ref_state
    act = np.zeros((N, m + 1), dtype=bool)
    q_ref = 0.0
    converged = False
    for it in range(1, cfg.max_iter + 1):
        EV0 = _expected_next(V, K, idx)
        succ = ps * ((1 - 2 * p) * V[0, 0] + 2 * p * V[1, 1])
        Q0 = deltas[None, :] + EV0
        Q1 = deltas[None, :] + lam + succ + pf * EV0
        act = Q1 <= Q0
        act[0, 0] = False
        Qmin = np.where(act, Q1, Q0)
        if improved:
            t = m + 1
            for d in range(1, N):
                row = act[d]
                first = int(np.argmax(row)) if row.any() else m + 1
                n_row = min(t, first)
                if n_row <= m:
                    Qmin[d, n_row:] = Q1[d, n_row:]
                    act[d, n_row:] = True
                t = n_row
        q_ref = Qmin[rd, rD]
        Vn = Qmin - q_ref
        diff = float(np.max(np.abs(Vn - V)))
        V = Vn
        if check_monotone:
            _check_value_monotonicity(V, N, m, it)
        if diff < cfg.eps:
            converged = True
            break
    if not converged:
        raise NonConvergenceError(
            f"value iteration did not converge within {cfg.max_iter} sweeps "
            f"(last change {diff:.3g}, eps {cfg.eps})")
    policy = extract_thresholds(act, m).canonical()
    vf = ValueFunction(v=V, q_ref=q_ref, iterations=it)
    return policy, vf


def delta_v(mdp: TruncatedMDP, vf: ValueFunction, s: SysState) -> float:
    """Advantage of transmitting over idling at s against the given values."""
    params, m = mdp.params, mdp.m
    ps, p = params.p_s, params.p
    K = d_kernel(params)
    idx = _successor_index(params.N, m)
    V = vf.v
    ev0 = sum(K[s.d, dn] * V[dn, idx[dn, s.delta]] for dn in range(params.N))
    succ = ps * ((1 - 2 * p) * V[0, 0] + 2 * p * V[1, 1])
    q0 = s.delta + ev0
    q1 = s.delta + mdp.lam + succ + params.p_f * ev0
    return q1 - q0
