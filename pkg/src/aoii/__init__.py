"""AoII-optimal transmission scheduling toolkit.

Computes the transmission policy minimizing the long-run Age of Incorrect
Information of an N-state birth-death source tracked over an unreliable
channel, subject to a transmission-rate budget, and validates it with an
independent Monte-Carlo simulator.
"""

from .constrained import (BisectionResult, ConstrainedSolution, MixedPolicy,
                          bisection, mix_coefficient, solve_constrained)
from .dynamics import (SourceState, SysState, SystemParams, TransitionEntry,
                       d_kernel, is_reachable, lower_bound,
                       next_state_distribution, step_source)
from .errors import (AoiiError, ConfigError, NegativeMassError,
                     NonConvergenceError, SingularSystemError,
                     StructureViolationError, TruncationError)
from .mdp import (SolverConfig, TruncatedMDP, build_truncated_mdp,
                  instant_cost, min_truncation)
from .rvi import (ThresholdPolicy, ValueFunction, delta_v, extract_thresholds,
                  rvi_solve)
from .simulate import SimConfig, SimReport, empirical_stationary, simulate
from .stationary import (AoiiSolveResult, ApproxContext,
                         StationarySolveResult, approx_rate, assemble_sparse,
                         exact_rate, expected_aoii, solve_sparse)

__version__ = "0.1.0"

__all__ = [
    "AoiiError", "AoiiSolveResult", "ApproxContext", "BisectionResult",
    "ConfigError", "ConstrainedSolution", "MixedPolicy", "NegativeMassError",
    "NonConvergenceError", "SimConfig", "SimReport", "SingularSystemError",
    "SolverConfig", "SourceState", "StationarySolveResult",
    "StructureViolationError", "SysState", "SystemParams", "ThresholdPolicy",
    "TransitionEntry", "TruncatedMDP", "TruncationError", "ValueFunction",
    "approx_rate", "assemble_sparse", "bisection", "build_truncated_mdp",
    "d_kernel", "delta_v", "empirical_stationary", "exact_rate",
    "expected_aoii", "extract_thresholds", "instant_cost", "is_reachable",
    "lower_bound", "min_truncation", "mix_coefficient",
    "next_state_distribution", "rvi_solve", "simulate", "solve_constrained",
    "solve_sparse", "step_source",
]
