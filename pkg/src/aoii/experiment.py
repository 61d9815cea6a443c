"""Experiment runner: flat key=value configs in, deterministic CSV out.

Modes: a single constrained solve, parameter sweeps over p / p_s / alpha,
and simulate/validate modes that cross-check the solved policy against the
Monte-Carlo simulator.  Grid points are solved concurrently (capped by the
AOII_THREADS environment variable) but rows are always written in grid
order, so output is stable.
"""

from __future__ import annotations

import csv
import io
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .constrained import solve_constrained
from .dynamics import SystemParams
from .errors import ConfigError
from .mdp import SolverConfig
from .simulate import SimConfig, simulate

MODES = ("solve", "sweep-p", "sweep-ps", "sweep-alpha", "simulate", "validate")

_GRID_OF_MODE = {"sweep-p": "p", "sweep-ps": "ps", "sweep-alpha": "alpha"}

COLUMNS = [
    "mode", "N", "p", "p_s", "alpha", "m", "eps", "xi",
    "horizon", "seed", "warmup",
    "lambda_minus", "lambda_plus", "mu",
    "thresholds_minus", "thresholds_plus",
    "rate", "aoii", "sim_rate", "sim_aoii", "runtime_ms",
]


@dataclass(frozen=True)
class ExperimentSpec:
    mode: str
    N: int
    p: float | None
    p_s: float | None
    alpha: float | None
    solver: SolverConfig = SolverConfig()
    grids: dict = field(default_factory=dict)
    horizon: int = 10_000_000
    seed: int = 0
    warmup: int = 10_000
    output_path: str = "results.csv"


_SCALAR_KEYS = {
    "N": int,
    "p": float,
    "p_s": float,
    "alpha": float,
    "m": int,
    "eps": float,
    "xi": float,
    "horizon": int,
    "seed": int,
    "warmup": int,
}
_GRID_KEYS = ("grid.p", "grid.ps", "grid.alpha")


_RANGE_CHECKS = {
    "N": (lambda v: v >= 2, "N must be >= 2"),
    "p": (lambda v: 0.0 <= v <= 1.0 / 3.0 + 1e-12, "p must lie in [0, 1/3]"),
    "p_s": (lambda v: 0.0 < v <= 1.0, "p_s must lie in (0, 1]"),
    "alpha": (lambda v: 0.0 < v < 1.0, "alpha must lie in (0, 1)"),
    "m": (lambda v: v >= 1, "m must be >= 1"),
    "eps": (lambda v: v > 0, "eps must be positive"),
    "xi": (lambda v: v > 0, "xi must be positive"),
    "horizon": (lambda v: v > 0, "horizon must be positive"),
    "warmup": (lambda v: v >= 0, "warmup must be non-negative"),
}


def _parse_value(key, raw, caster, line):
    try:
        value = caster(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r} ({exc})", line=line)
    base = key.split(".", 1)[1] if key.startswith("grid.") else key
    base = {"ps": "p_s"}.get(base, base)
    check = _RANGE_CHECKS.get(base)
    if check is not None and not check[0](value):
        raise ConfigError(f"{check[1]} (got {value})", line=line)
    return value


def parse_config(text: str, overrides: dict | None = None,
                 mode: str | None = None) -> ExperimentSpec:
    """Parse the flat key=value format into a validated ExperimentSpec.

    ``overrides`` (e.g. from command-line flags) replace file values; an
    explicit ``mode`` wins over a mode= line.  Unknown keys and malformed
    values are reported with their line number.
    """
    values: dict = {}
    grids: dict = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"expected key=value, got {line!r}", line=lineno)
        key, _, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if key in _SCALAR_KEYS:
            values[key] = _parse_value(key, raw, _SCALAR_KEYS[key], lineno)
        elif key == "mode":
            if raw not in MODES:
                raise ConfigError(
                    f"mode must be one of {'|'.join(MODES)}, got {raw!r}",
                    line=lineno)
            values["mode"] = raw
        elif key == "out":
            values["out"] = raw
        elif key in _GRID_KEYS:
            parts = [s for s in raw.split(",") if s.strip()]
            if not parts:
                raise ConfigError(f"empty grid for {key}", line=lineno)
            grids[key.split(".", 1)[1]] = tuple(
                _parse_value(key, s.strip(), float, lineno) for s in parts)
        else:
            raise ConfigError(f"unknown key {key!r}", line=lineno)
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key == "out":
            values["out"] = val
        elif key in _SCALAR_KEYS:
            values[key] = _SCALAR_KEYS[key](val)
        else:
            raise ConfigError(f"unknown override {key!r}")
    if mode is not None:
        values["mode"] = mode
    if "mode" not in values or not values["mode"]:
        raise ConfigError("mode is required (solve|sweep-p|sweep-ps|"
                          "sweep-alpha|simulate|validate)")
    chosen = values["mode"]
    grid_key = _GRID_OF_MODE.get(chosen)
    if grid_key is not None and grid_key not in grids:
        raise ConfigError(f"mode {chosen} requires grid.{grid_key}")
    if "N" not in values:
        raise ConfigError("N is required")
    for name, gkey in (("p", "p"), ("p_s", "ps"), ("alpha", "alpha")):
        if name not in values and _GRID_OF_MODE.get(chosen) != gkey:
            raise ConfigError(f"{name} is required for mode {chosen}")
    solver = SolverConfig(m=values.get("m", 800),
                          eps=values.get("eps", 0.01),
                          xi=values.get("xi", 0.01))
    spec = ExperimentSpec(
        mode=chosen,
        N=values["N"],
        p=values.get("p"),
        p_s=values.get("p_s"),
        alpha=values.get("alpha"),
        solver=solver,
        grids=grids,
        horizon=values.get("horizon", 10_000_000),
        seed=values.get("seed", 0),
        warmup=values.get("warmup", 10_000),
        output_path=values.get("out", "results.csv"),
    )
    _grid_points(spec)  # validates every grid point's parameters eagerly
    return spec


def _grid_points(spec: ExperimentSpec) -> list[SystemParams]:
    gkey = _GRID_OF_MODE.get(spec.mode)
    if gkey is None:
        return [SystemParams(spec.N, spec.p, spec.p_s, spec.alpha)]
    points = []
    for v in spec.grids[gkey]:
        p = v if gkey == "p" else spec.p
        ps = v if gkey == "ps" else spec.p_s
        alpha = v if gkey == "alpha" else spec.alpha
        points.append(SystemParams(spec.N, p, ps, alpha))
    return points


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".6g")
    return str(value)


def _fmt_thresholds(policy) -> str:
    return "[" + ",".join(str(t) for t in policy.n) + "]"


def _solve_point(spec: ExperimentSpec, params: SystemParams, idx: int) -> dict:
    t0 = time.perf_counter()
    sol = solve_constrained(params, spec.solver)
    row = {
        "mode": spec.mode,
        "N": params.N,
        "p": params.p,
        "p_s": params.p_s,
        "alpha": params.alpha,
        "m": spec.solver.m,
        "eps": spec.solver.eps,
        "xi": spec.solver.xi,
        "horizon": None,
        "seed": None,
        "warmup": None,
        "lambda_minus": sol.policy.lambda_minus,
        "lambda_plus": sol.policy.lambda_plus,
        "mu": sol.policy.mu,
        "thresholds_minus": _fmt_thresholds(sol.policy.n_minus),
        "thresholds_plus": _fmt_thresholds(sol.policy.n_plus),
        "rate": sol.rate,
        "aoii": sol.aoii,
        "sim_rate": None,
        "sim_aoii": None,
    }
    if spec.mode in ("simulate", "validate"):
        cfg = SimConfig(horizon=spec.horizon, seed=spec.seed + idx,
                        warmup=spec.warmup)
        report = simulate(sol.policy, params, cfg)
        row.update(horizon=spec.horizon, seed=cfg.seed, warmup=spec.warmup,
                   sim_rate=report.rate_hat, sim_aoii=report.aoii_hat)
    row["runtime_ms"] = int(round((time.perf_counter() - t0) * 1000))
    return row


def _max_workers(n_points: int) -> int:
    env = os.environ.get("AOII_THREADS", "")
    if env:
        try:
            cap = int(env)
        except ValueError:
            raise ConfigError(f"AOII_THREADS must be an integer, got {env!r}")
        if cap < 1:
            raise ConfigError("AOII_THREADS must be >= 1")
    else:
        cap = os.cpu_count() or 1
    return max(1, min(cap, n_points))


def render_rows(spec: ExperimentSpec) -> list[dict]:
    """Solve every grid point (concurrently) and return rows in grid order."""
    points = _grid_points(spec)
    workers = _max_workers(len(points))
    if workers == 1:
        return [_solve_point(spec, prm, i) for i, prm in enumerate(points)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_solve_point, spec, prm, i)
                   for i, prm in enumerate(points)]
        return [f.result() for f in futures]


def write_csv(rows: list[dict], stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row.get(col)) for col in COLUMNS])


def run(spec: ExperimentSpec) -> int:
    """Execute the experiment and write the CSV; returns the exit code."""
    rows = render_rows(spec)
    buf = io.StringIO()
    write_csv(rows, buf)
    with open(spec.output_path, "w", newline="") as fh:
        fh.write(buf.getvalue())
    return 0
