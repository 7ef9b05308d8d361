"""Exception types shared across the package.

Each class mirrors one failure category of the public operations, so callers
can distinguish configuration mistakes from numerical breakdowns and from
verdict-style failures (which are reported, never raised).
"""

from __future__ import annotations


class CollarError(Exception):
    """Base class for every error raised by this package."""


class DomainError(CollarError):
    """Geometry input is inconsistent (bad endpoints, point outside domain)."""


class ResolutionError(CollarError):
    """A collar level is too thin for the grid to resolve it."""


class GeometryError(CollarError):
    """An exterior-sphere construction is geometrically infeasible."""


class ConfigError(CollarError):
    """A user-supplied parameter is outside its documented range."""


class ConfigParseError(ConfigError):
    """Strict config parsing failed; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ModelError(CollarError):
    """A density/nonlinearity/data evaluator violates its hypotheses."""


class SpliceError(CollarError):
    """The nondegenerate surrogate cannot keep the requested derivative floor."""


class RegimeError(CollarError):
    """A construction was requested outside its validity regime."""


class RangeError(CollarError):
    """The inverse nonlinearity was evaluated outside its range."""

    def __init__(self, message: str, node: int | None = None, argument: float | None = None):
        self.node = node
        self.argument = argument
        super().__init__(message)


class StepError(CollarError):
    """One implicit time step failed to converge; carries the last residual."""

    def __init__(self, message: str, residual: float | None = None):
        self.residual = residual
        super().__init__(message)


class SolveError(CollarError):
    """A full trajectory solve failed after exhausting time-step retries."""


class SourceError(CollarError):
    """A duality source term is invalid (negative entries, empty support)."""


class ShapeError(CollarError):
    """Two fields that must share grid and time stamps do not."""


class HypothesisError(CollarError):
    """The ordering hypothesis of a comparison check is itself violated."""
