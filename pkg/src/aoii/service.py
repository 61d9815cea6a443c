"""HTTP facade over the core solvers.

A small FastAPI app exposing the constrained solve, the stationary analysis
of a given threshold policy, and the Monte-Carlo simulator.  Long sweeps are
better served by the CLI; the service targets interactive, single-point use.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .constrained import MixedPolicy, solve_constrained
from .dynamics import SystemParams
from .errors import AoiiError
from .mdp import SolverConfig
from .rvi import ThresholdPolicy
from .simulate import SimConfig, simulate
from .stationary import exact_rate, expected_aoii


class SolveRequest(BaseModel):
    N: int = Field(ge=2)
    p: float = Field(ge=0.0, le=1.0 / 3.0)
    p_s: float = Field(gt=0.0, le=1.0)
    alpha: float = Field(gt=0.0, lt=1.0)
    m: int = 800
    eps: float = Field(default=0.01, gt=0)
    xi: float = Field(default=0.01, gt=0)


class SolveResponse(BaseModel):
    lambda_minus: float
    lambda_plus: float
    mu: float
    thresholds_minus: list[int]
    thresholds_plus: list[int]
    rate: float
    aoii: float
    saturated: bool


class PolicyRequest(BaseModel):
    N: int = Field(ge=2)
    p: float = Field(ge=0.0, le=1.0 / 3.0)
    p_s: float = Field(gt=0.0, le=1.0)
    thresholds: list[int]


class PolicyResponse(BaseModel):
    rate: float
    aoii: float
    pi00: float
    tau: int


class SimulateRequest(BaseModel):
    N: int = Field(ge=2)
    p: float = Field(ge=0.0, le=1.0 / 3.0)
    p_s: float = Field(gt=0.0, le=1.0)
    thresholds: list[int]
    thresholds_alt: list[int] | None = None
    mu: float = Field(default=1.0, ge=0.0, le=1.0)
    horizon: int = Field(default=1_000_000, gt=0)
    seed: int = 0
    warmup: int = Field(default=10_000, ge=0)


class SimulateResponse(BaseModel):
    rate_hat: float
    rate_se: float
    aoii_hat: float
    aoii_se: float
    aoi_hat: float
    seed: int
    generator: str


app = FastAPI(title="aoii-toolkit", version="0.1.0")


def _params(req, alpha: float = 0.5) -> SystemParams:
    try:
        return SystemParams(req.N, req.p, req.p_s, getattr(req, "alpha", alpha))
    except AoiiError as exc:
        raise HTTPException(status_code=422, detail=str(exc))


def _policy(thresholds: list[int], N: int) -> ThresholdPolicy:
    if len(thresholds) != N - 1:
        raise HTTPException(status_code=422,
                            detail=f"need {N - 1} thresholds for N={N}")
    try:
        return ThresholdPolicy(tuple(thresholds))
    except AoiiError as exc:
        raise HTTPException(status_code=422, detail=str(exc))


@app.get("/health")
def health() -> dict:
    return {"status": "ok"}


@app.post("/solve", response_model=SolveResponse)
def solve(req: SolveRequest) -> SolveResponse:
    params = _params(req)
    try:
        cfg = SolverConfig(m=req.m, eps=req.eps, xi=req.xi)
        cfg.validate_for(params)
        sol = solve_constrained(params, cfg)
    except AoiiError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    return SolveResponse(
        lambda_minus=sol.policy.lambda_minus,
        lambda_plus=sol.policy.lambda_plus,
        mu=sol.policy.mu,
        thresholds_minus=list(sol.policy.n_minus.n),
        thresholds_plus=list(sol.policy.n_plus.n),
        rate=sol.rate,
        aoii=sol.aoii,
        saturated=bool(sol.diagnostics.get("saturated", False)),
    )


@app.post("/rate", response_model=PolicyResponse)
def rate(req: PolicyRequest) -> PolicyResponse:
    params = _params(req)
    policy = _policy(req.thresholds, req.N)
    try:
        stat = exact_rate(policy, params)
        aoii = expected_aoii(policy, params, stat)
    except AoiiError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    return PolicyResponse(rate=stat.rate, aoii=aoii.aoii,
                          pi00=stat.pi00, tau=stat.tau)


@app.post("/simulate", response_model=SimulateResponse)
def run_simulation(req: SimulateRequest) -> SimulateResponse:
    params = _params(req)
    primary = _policy(req.thresholds, req.N)
    if req.thresholds_alt is not None:
        alt = _policy(req.thresholds_alt, req.N)
        try:
            policy = MixedPolicy(primary, alt, mu=req.mu)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
    else:
        policy = primary
    try:
        cfg = SimConfig(horizon=req.horizon, seed=req.seed, warmup=req.warmup)
        report = simulate(policy, params, cfg)
    except AoiiError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    return SimulateResponse(
        rate_hat=report.rate_hat, rate_se=report.rate_se,
        aoii_hat=report.aoii_hat, aoii_se=report.aoii_se,
        aoi_hat=report.aoi_hat, seed=report.seed,
        generator=report.generator)
