"""
Exception hierarchy shared by all binding-bench modules

Every error carries the process exit code the CLI reports for it and can be
rendered as a machine-readable record.
"""
from typing import Any, Dict, Optional


class BindingBenchError(Exception):
    """Base class for all expected failures"""

    exit_code = 1

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_record(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization"""
        return {
            "error": type(self).__name__,
            "message": self.message,
            "exit_code": self.exit_code,
            "details": self.details,
        }


class ConfigError(BindingBenchError):
    """Malformed potential, mode set or run configuration"""

    exit_code = 2


class DomainError(BindingBenchError):
    """Momentum outside the domain of a per-mode function (k = 0, k+l = 0)"""

    exit_code = 3


class UnboundedSupportError(BindingBenchError):
    """Support requested for a potential with unbounded Fourier support"""

    exit_code = 3


class UnsupportedError(BindingBenchError):
    """Order, operator index or potential kind outside what is implemented"""

    exit_code = 4


class SizeLimitError(BindingBenchError):
    """Mode set or Fock basis larger than the configured guard"""

    exit_code = 5

    def __init__(self, message: str, size: int, limit: int):
        super().__init__(message, {"size": size, "limit": limit})
        self.size = size
        self.limit = limit


class ConvergenceError(BindingBenchError):
    """Eigensolver did not reach the requested residual"""

    exit_code = 6

    def __init__(self, message: str, residual: float, iterations: Optional[int] = None):
        super().__init__(message, {"residual": residual, "iterations": iterations})
        self.residual = residual


class SolverStagnationError(ConvergenceError):
    """Projected resolvent solve stagnated (near-degenerate truncation)"""


class FitError(BindingBenchError):
    """Least-squares fit impossible or ill-conditioned"""

    exit_code = 7

    def __init__(self, message: str, condition: Optional[float] = None):
        super().__init__(message, {"condition": condition})
        self.condition = condition
