"""Exception hierarchy shared across the toolkit.

Exit-code mapping used by the CLI lives here so the codes stay in one place:
config problems exit 2, solver non-convergence 3, truncation-too-small 4.
"""


class AoiiError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class ConfigError(AoiiError):
    """Invalid configuration (bad parameter values, malformed config files)."""

    exit_code = 2

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NonConvergenceError(AoiiError):
    """Value iteration exceeded its iteration cap without converging."""

    exit_code = 3


class TruncationError(AoiiError):
    """A threshold hit the truncation cap m; results would be unreliable."""

    exit_code = 4


class StructureViolationError(AoiiError):
    """An action map or value function violates its proven structure."""


class SingularSystemError(AoiiError):
    """A stationary linear system was singular or solved with a bad residual."""

    def __init__(self, message, metadata=None):
        super().__init__(message)
        self.metadata = metadata or {}


class NegativeMassError(AoiiError):
    """A solved stationary mass was negative beyond numerical slack."""
