"""Stationary analysis of the chain induced by a threshold policy.

The induced (d, Delta) chain is countable, but beyond the largest threshold
tau every state at mismatch level d behaves identically (always transmit),
so the balance equations close over the finite unknown set

    { pi_d(Delta) : l_d <= Delta <= tau-1 }  u  { Pi_d(tau) }  u  { pi_0(0) }

where Pi_d(tau) aggregates the tail mass at level d.  The balance row of the
synced state is a linear combination of the others and is replaced by the
normalization; its residual at the solution is kept as a whole-system check.
A cheaper approximate solve for huge thresholds replaces the sub-threshold
head by the scaled stationary distribution of a small uniform policy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .dynamics import SystemParams, d_kernel, lower_bound
from .errors import (ConfigError, NegativeMassError, SingularSystemError,
                     StructureViolationError)
from .rvi import ThresholdPolicy

_NEG_SLACK = 1e-10


@dataclass(frozen=True)
class StationarySolveResult:
    """Steady-state masses under a threshold policy.

    pi[d, Delta] holds the mass of (d, Delta) for Delta < tau (zero on
    virtual states); pi_tail[d] aggregates all Delta >= tau at level d;
    rate is the long-run transmission rate.  residual is the value of the
    excluded synced-state balance row at the solution.
    """

    pi: np.ndarray
    pi_tail: np.ndarray
    pi00: float
    rate: float
    tau: int
    residual: float


@dataclass(frozen=True)
class AoiiSolveResult:
    """Delta-weighted masses omega_d(Delta) = Delta * pi_d(Delta), their tail
    aggregates, and the resulting expected penalty."""

    omega: np.ndarray
    omega_tail: np.ndarray
    aoii: float


@dataclass(frozen=True)
class ApproxContext:
    """Diagnostics of the approximate rate solve: eta = min threshold - 1,
    the auxiliary uniform-policy distribution sigma, the head-mass aggregates
    Pi_d(eta), the scaling ratio rho = pi_0(0)/sigma_0(0), and the residual
    of the excluded balance row."""

    eta: int
    head_tail: np.ndarray
    rho: float
    sigma: StationarySolveResult
    residual: float


def _check_policy(policy: ThresholdPolicy, params: SystemParams):
    if policy.N != params.N:
        raise StructureViolationError(
            f"policy is for N={policy.N}, params have N={params.N}")


def solve_sparse(A: sp.spmatrix, b: np.ndarray) -> np.ndarray:
    """Direct sparse solve with a hard residual guarantee."""
    A = sp.csc_matrix(A)
    n = A.shape[0]
    if A.shape != (n, n):
        raise SingularSystemError("matrix is not square",
                                  metadata={"shape": A.shape})
    try:
        x = spla.spsolve(A, b)
    except Exception as exc:
        raise SingularSystemError(f"sparse solve failed: {exc}",
                                  metadata={"dim": n}) from exc
    if not np.all(np.isfinite(x)):
        raise SingularSystemError("singular stationary system",
                                  metadata={"dim": n})
    resid = float(np.max(np.abs(A @ x - b))) if n else 0.0
    if resid > 1e-9 * (1.0 + float(np.max(np.abs(b), initial=0.0))):
        raise SingularSystemError(
            f"solve residual {resid:.3g} exceeds tolerance",
            metadata={"dim": n, "residual": resid})
    return x


class _Builder:
    """COO triplet accumulator with insertion-ordered, deterministic layout."""

    def __init__(self, n):
        self.n = n
        self.rows, self.cols, self.vals = [], [], []
        self.b = np.zeros(n)

    def add(self, r, c, v):
        self.rows.append(r)
        self.cols.append(c)
        self.vals.append(v)

    def matrix(self):
        return sp.csr_matrix((self.vals, (self.rows, self.cols)),
                             shape=(self.n, self.n))


def _rate_layout(policy: ThresholdPolicy, N: int):
    """Unknown ordering: pi blocks d-major/Delta-minor, tails, then pi00."""
    tau = policy.tau
    index = {}
    k = 0
    for d in range(1, N):
        for delta in range(lower_bound(d), tau):
            index[("pi", d, delta)] = k
            k += 1
    for d in range(1, N):
        index[("tail", d)] = k
        k += 1
    index[("pi00",)] = k
    return index, k + 1


def _assemble_rate(policy: ThresholdPolicy, params: SystemParams):
    N, p, ps = params.N, params.p, params.p_s
    pf = params.p_f
    K = d_kernel(params)
    tau = policy.tau
    n = policy.n
    index, nun = _rate_layout(policy, N)
    bld = _Builder(nun)
    i00 = index[("pi00",)]

    def a(d, delta):
        return 1 if delta >= n[d - 1] else 0

    # the transmission rate as a linear functional of the unknowns
    rate_terms = []
    for d in range(1, N):
        for delta in range(max(lower_bound(d), n[d - 1]), tau):
            rate_terms.append((index[("pi", d, delta)], 1.0))
        rate_terms.append((index[("tail", d)], 1.0))

    def add_11_inflow(r):
        # inflow into (1, 1): births from the synced state plus the mass
        # recreated by successful transmissions while the source moves
        bld.add(r, i00, -2 * p)
        for c, v in rate_terms:
            bld.add(r, c, -2 * ps * p * v)

    for d in range(1, N):
        for delta in range(lower_bound(d), tau):
            r = index[("pi", d, delta)]
            bld.add(r, r, 1.0)
            if (d, delta) == (1, 1):
                add_11_inflow(r)
                continue
            dp_prev = delta - d
            for dprev in range(1, N):
                if K[dprev, d] == 0.0 or dp_prev < lower_bound(dprev) \
                        or dp_prev > tau - 1:
                    continue
                bld.add(r, index[("pi", dprev, dp_prev)],
                        -K[dprev, d] * (1 - ps * a(dprev, dp_prev)))
    for d in range(1, N):
        r = index[("tail", d)]
        bld.add(r, r, 1.0)
        for dprev in range(1, N):
            if K[dprev, d] == 0.0:
                continue
            bld.add(r, index[("tail", dprev)], -K[dprev, d] * pf)
            for delta in range(max(tau - d, lower_bound(dprev)), tau):
                bld.add(r, index[("pi", dprev, delta)],
                        -K[dprev, d] * (1 - ps * a(dprev, delta)))
        if d == 1 and tau == 1:
            add_11_inflow(r)
    r = i00
    bld.add(r, i00, 1.0)
    for d in range(1, N):
        for delta in range(lower_bound(d), tau):
            bld.add(r, index[("pi", d, delta)], 1.0)
        bld.add(r, index[("tail", d)], 1.0)
    bld.b[r] = 1.0
    return bld.matrix(), bld.b, index, rate_terms


def _rate_of(x, rate_terms):
    return float(sum(v * x[c] for c, v in rate_terms))


def _excluded_residual(policy, params, x, index, rate_terms):
    """Balance row of the synced state, dropped from the solve: outflow
    pi00 minus every inflow (stay, direct returns, successful resyncs)."""
    p, ps = params.p, params.p_s
    K = d_kernel(params)
    n = policy.n
    tau = policy.tau
    rate = _rate_of(x, rate_terms)
    res = x[index[("pi00",)]] * 2 * p - ps * (1 - 2 * p) * rate
    for delta in range(1, tau):
        a1 = 1 if delta >= n[0] else 0
        res -= K[1, 0] * (1 - ps * a1) * x[index[("pi", 1, delta)]]
    res -= K[1, 0] * params.p_f * x[index[("tail", 1)]]
    return float(res)


def _clamp(value):
    arr = np.asarray(value, dtype=float)
    worst = float(arr.min(initial=0.0))
    if worst < -_NEG_SLACK:
        raise NegativeMassError(
            f"stationary mass {worst:.3g} below the numerical slack")
    return np.clip(arr, 0.0, None)


def exact_rate(policy: ThresholdPolicy, params: SystemParams) -> StationarySolveResult:
    """Solve the induced chain's balance equations and return the stationary
    masses together with the transmission rate."""
    _check_policy(policy, params)
    N = params.N
    A, b, index, rate_terms = _assemble_rate(policy, params)
    x = solve_sparse(A, b)
    tau = policy.tau
    pi = np.zeros((N, max(tau, 1)))
    for key, k in index.items():
        if key[0] == "pi":
            _, d, delta = key
            pi[d, delta] = x[k]
    pi_tail = np.zeros(N)
    for d in range(1, N):
        pi_tail[d] = x[index[("tail", d)]]
    pi00 = float(x[index[("pi00",)]])
    pi = _clamp(pi)
    pi_tail = _clamp(pi_tail)
    pi00 = float(_clamp(pi00))
    total = pi.sum() + pi_tail.sum() + pi00
    if abs(total - 1.0) > 1e-8:
        raise SingularSystemError(
            f"stationary masses sum to {total}, expected 1",
            metadata={"policy": policy.n})
    rate = _rate_of(x, rate_terms)
    residual = _excluded_residual(policy, params, x, index, rate_terms)
    return StationarySolveResult(pi=pi, pi_tail=pi_tail, pi00=pi00,
                                 rate=rate, tau=tau, residual=residual)


def expected_aoii(policy: ThresholdPolicy, params: SystemParams,
                  stat: StationarySolveResult) -> AoiiSolveResult:
    """Expected penalty under the policy, from the solved masses.

    Head terms are Delta * pi_d(Delta) directly; the tail aggregates
    Omega_d = sum_{Delta >= tau} Delta * pi_d(Delta) satisfy a small linear
    system because every tail state transmits.
    """
    _check_policy(policy, params)
    N, ps = params.N, params.p_s
    pf = params.p_f
    K = d_kernel(params)
    tau = stat.tau
    n = policy.n
    omega = np.zeros_like(stat.pi)
    for d in range(1, N):
        for delta in range(lower_bound(d), tau):
            omega[d, delta] = delta * stat.pi[d, delta]
    M = np.eye(N - 1)
    rhs = np.zeros(N - 1)
    for d in range(1, N):
        for dprev in range(1, N):
            if K[dprev, d] == 0.0:
                continue
            M[d - 1, dprev - 1] -= K[dprev, d] * pf
            for delta in range(max(tau - d, lower_bound(dprev)), tau):
                a_prev = 1 if delta >= n[dprev - 1] else 0
                rhs[d - 1] += K[dprev, d] * (1 - ps * a_prev) * omega[dprev, delta]
        rhs[d - 1] += d * stat.pi_tail[d]
    try:
        tail = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"tail-weight system singular: {exc}",
                                  metadata={"dim": N - 1}) from exc
    omega_tail = np.zeros(N)
    omega_tail[1:] = tail
    aoii = float(omega.sum() + omega_tail.sum())
    return AoiiSolveResult(omega=omega, omega_tail=omega_tail, aoii=aoii)


def _approx_layout(policy: ThresholdPolicy, N: int, eta: int):
    """Unknowns: mid-range pi blocks, head aggregates Pi_d(eta), tail
    aggregates Pi_d(tau), then pi00."""
    tau = policy.tau
    dmax = {d: max(tau - 1, eta + d) for d in range(1, N)}
    index = {}
    k = 0
    for d in range(1, N):
        for delta in range(eta + 1, dmax[d] + 1):
            index[("mid", d, delta)] = k
            k += 1
    for d in range(1, N):
        index[("head", d)] = k
        k += 1
    for d in range(1, N):
        index[("tail", d)] = k
        k += 1
    index[("pi00",)] = k
    return index, k + 1, dmax


def _assemble_approx(policy: ThresholdPolicy, params: SystemParams,
                     sigma: StationarySolveResult):
    N, p, ps = params.N, params.p, params.p_s
    pf = params.p_f
    K = d_kernel(params)
    tau = policy.tau
    eta = min(policy.n) - 1
    n = policy.n
    index, nun, dmax = _approx_layout(policy, N, eta)
    bld = _Builder(nun)
    i00 = index[("pi00",)]
    s11 = sigma.pi[1, 1]

    def a(d, delta):
        return 1 if delta >= n[d - 1] else 0

    rate_terms = []
    for d in range(1, N):
        for delta in range(n[d - 1], tau):
            rate_terms.append((index[("mid", d, delta)], 1.0))
        rate_terms.append((index[("tail", d)], 1.0))

    def reference(r, d, delta, coef):
        """Add -coef * pi_d(delta) to row r.  Below the head boundary the
        mass is not an unknown: the sub-threshold chain is a scaled copy of
        the auxiliary one, anchored at (1,1) whose inflow balance is linear
        in pi00 and the rate."""
        if delta < 1 or delta < lower_bound(d):
            return
        if delta <= eta:
            c = coef * sigma.pi[d, delta] / s11
            bld.add(r, i00, -c * 2 * p)
            for cc, vv in rate_terms:
                bld.add(r, cc, -c * 2 * ps * p * vv)
        elif delta <= dmax[d]:
            bld.add(r, index[("mid", d, delta)], -coef)

    for d in range(1, N):
        for delta in range(eta + 1, dmax[d] + 1):
            r = index[("mid", d, delta)]
            bld.add(r, r, 1.0)
            if delta < lower_bound(d):
                continue
            for dprev in range(1, N):
                if K[dprev, d] == 0.0:
                    continue
                reference(r, dprev, delta - d,
                          K[dprev, d] * (1 - ps * a(dprev, delta - d)))
    for d in range(1, N):
        r = index[("head", d)]
        bld.add(r, r, 1.0)
        if d == 1:
            # level-1 head balance: inflow from the synced state and resyncs
            # feed (1,1); one mid cell drains out of the head window
            bld.add(r, i00, -2 * p)
            for c, v in rate_terms:
                bld.add(r, c, -2 * ps * p * v)
            bld.add(r, index[("mid", 1, eta + 1)], 1.0)
        else:
            for delta in range(eta + 1, eta + d + 1):
                bld.add(r, index[("mid", d, delta)], 1.0)
        for dprev in range(1, N):
            if K[dprev, d] != 0.0:
                bld.add(r, index[("head", dprev)], -K[dprev, d])
    for d in range(1, N):
        r = index[("tail", d)]
        bld.add(r, r, 1.0)
        for dprev in range(1, N):
            if K[dprev, d] == 0.0:
                continue
            bld.add(r, index[("tail", dprev)], -K[dprev, d] * pf)
            for delta in range(tau - d, tau):
                reference(r, dprev, delta,
                          K[dprev, d] * (1 - ps * a(dprev, delta)))
    r = i00
    bld.add(r, i00, 1.0)
    for d in range(1, N):
        bld.add(r, index[("head", d)], 1.0)
        bld.add(r, index[("tail", d)], 1.0)
        for delta in range(eta + 1, tau):
            bld.add(r, index[("mid", d, delta)], 1.0)
    bld.b[r] = 1.0
    return bld.matrix(), bld.b, index, rate_terms, eta


def approx_rate(policy: ThresholdPolicy,
                params: SystemParams) -> tuple[float, ApproxContext]:
    """Approximate transmission rate for large-threshold policies.

    The states below the smallest threshold are never decision-relevant, so
    their relative masses match those of a small uniform policy with
    threshold eta + 1; only the aggregates and the mid/tail ranges are solved
    for.  System size is O(N * (tau - eta)) instead of O(N * tau).
    """
    _check_policy(policy, params)
    eta = min(policy.n) - 1
    if eta < 1:
        raise StructureViolationError(
            "approximate solve needs every threshold >= 2")
    aux = ThresholdPolicy(tuple([eta + 1] * (params.N - 1)))
    sigma = exact_rate(aux, params)
    if params.p == 0.0:
        # frozen source: all mass sits at the synced state and the scaled
        # head chain is empty
        ctx = ApproxContext(eta=eta, head_tail=np.zeros(params.N), rho=1.0,
                            sigma=sigma, residual=0.0)
        return 0.0, ctx
    A, b, index, rate_terms, eta = _assemble_approx(policy, params, sigma)
    x = solve_sparse(A, b)
    rate = _rate_of(x, rate_terms)
    pi00 = float(x[index[("pi00",)]])
    head_tail = np.zeros(params.N)
    for d in range(1, params.N):
        head_tail[d] = x[index[("head", d)]]
    # residual of the excluded synced-state balance row
    p, ps = params.p, params.p_s
    K = d_kernel(params)
    res = pi00 * 2 * p - K[1, 0] * x[index[("head", 1)]] \
        - K[1, 0] * params.p_f * x[index[("tail", 1)]] - ps * (1 - 2 * p) * rate
    for delta in range(eta + 1, policy.tau):
        a1 = 1 if delta >= policy.n[0] else 0
        res -= K[1, 0] * (1 - ps * a1) * x[index[("mid", 1, delta)]]
    ctx = ApproxContext(eta=eta, head_tail=_clamp(head_tail),
                        rho=pi00 / sigma.pi00, sigma=sigma,
                        residual=float(res))
    return rate, ctx


def assemble_sparse(policy: ThresholdPolicy, params: SystemParams,
                    system_kind: str = "rate"):
    """Expose the assembled balance system (A, b, unknown index map) for the
    requested solve; ordering is deterministic so reassembly is bit-stable."""
    _check_policy(policy, params)
    if system_kind == "rate":
        A, b, index, _ = _assemble_rate(policy, params)
        return A, b, index
    if system_kind == "approx":
        eta = min(policy.n) - 1
        if eta < 1:
            raise StructureViolationError(
                "approximate solve needs every threshold >= 2")
        aux = ThresholdPolicy(tuple([eta + 1] * (params.N - 1)))
        sigma = exact_rate(aux, params)
        A, b, index, _, _ = _assemble_approx(policy, params, sigma)
        return A, b, index
    raise ConfigError(f"unknown system kind {system_kind!r}")
