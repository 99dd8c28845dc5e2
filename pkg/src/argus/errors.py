"""Exception types shared across the engine, plus process exit codes."""

from __future__ import annotations


class ArgusError(Exception):
    """Base class for all planner errors."""


class ValidationError(ArgusError):
    """Invalid input data or parameters; the message names the offending field."""


class ParseError(ValidationError):
    """Unreadable input file (syntax level); names file and line where possible."""


class ShapeError(ValidationError):
    """Raster shape does not match the declared grid dimensions."""


class NoPathError(ArgusError):
    """Start and goal are not connected under the active constraints."""


class InfeasibleBudgetError(ArgusError):
    """The time budget is below the minimum achievable travel time."""

    def __init__(self, message: str, min_time_s: float):
        super().__init__(message)
        self.min_time_s = min_time_s


class ResourceExhaustedError(ArgusError):
    """Solver hit its timeout or expansion limit before finding any solution."""


EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INFEASIBLE = 3
EXIT_TIMEOUT = 4
