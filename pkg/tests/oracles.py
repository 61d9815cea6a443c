"""Independent reference implementations used only by the tests.

Deliberately naive: the plain value iteration walks the materialized kernel
row by row with explicit minimum operators, and the stationary oracle gets
the distribution by repeatedly squaring the policy-induced transition matrix
on the truncated chain.  Nothing here shares code with the solver paths it
checks.
"""

from __future__ import annotations

import numpy as np

from aoii import (SysState, SystemParams, ThresholdPolicy, TruncatedMDP,
                  build_truncated_mdp, lower_bound)


def plain_rvi(mdp: TruncatedMDP, eps: float, max_iter: int = 200_000,
              ref: SysState = SysState(0, 0)):
    """Reference relative value iteration over the explicit kernel rows.

    Returns (thresholds as a plain list with m+1 sentinels, value dict).
    """
    V = {s: float(s.delta) for s in mdp.states}
    act = {}
    for _ in range(max_iter):
        q = {}
        for s in mdp.states:
            qa = []
            for a in (0, 1):
                total = mdp.cost(s, a)
                for nxt, prob in mdp.transitions(s, a):
                    total += prob * V[nxt]
                qa.append(total)
            if s == SysState(0, 0):
                act[s] = 0
            else:
                act[s] = 1 if qa[1] <= qa[0] else 0
            q[s] = qa[act[s]]
        q_ref = q[ref]
        Vn = {s: q[s] - q_ref for s in mdp.states}
        diff = max(abs(Vn[s] - V[s]) for s in mdp.states)
        V = Vn
        if diff < eps:
            break
    else:
        raise RuntimeError("oracle value iteration did not converge")
    thresholds = []
    for d in range(1, mdp.params.N):
        active = [s.delta for s in mdp.states if s.d == d and act[s] == 1]
        if active:
            first = min(active)
            thresholds.append(first if first < mdp.m else mdp.m + 1)
        else:
            thresholds.append(mdp.m + 1)
    return thresholds, V, act


def canonical_thresholds(thresholds, N):
    return [1 if t <= lower_bound(d) else t
            for d, t in enumerate(thresholds, start=1)]


def induced_chain(policy: ThresholdPolicy, params: SystemParams, m: int):
    """Dense transition matrix of the truncated chain under the policy,
    together with the state list."""
    mdp = build_truncated_mdp(params, 0.0, m)
    states = list(mdp.states)
    pos = {s: i for i, s in enumerate(states)}
    P = np.zeros((len(states), len(states)))
    for i, s in enumerate(states):
        a = policy.action(s.d, s.delta)
        for nxt, prob in mdp.transitions(s, a):
            P[i, pos[nxt]] += prob
    return P, states


def stationary_by_squaring(policy: ThresholdPolicy, params: SystemParams,
                           m: int, n_squarings: int = 60):
    """Stationary distribution of the truncated chain via matrix squaring
    (power iteration with doubling step counts), renormalized each step."""
    P, states = induced_chain(policy, params, m)
    Q = P.copy()
    for _ in range(n_squarings):
        Q = Q @ Q
        Q /= Q.sum(axis=1, keepdims=True)
    dist = Q[0]
    return {s: dist[i] for i, s in enumerate(states)}


def dense_solve(A, b):
    return np.linalg.solve(np.asarray(A.todense()), b)


def random_policy(rng: np.random.Generator, N: int,
                  max_threshold: int = 25) -> ThresholdPolicy:
    """A random valid (non-increasing, canonical) threshold vector."""
    vals = sorted(rng.integers(1, max_threshold + 1, size=N - 1),
                  reverse=True)
    return ThresholdPolicy(tuple(int(v) for v in vals)).canonical()
