# app/core/errors.py
from typing import Optional


class GrushinError(Exception):
    """Base class for every error raised by the library."""


class DomainError(GrushinError, ValueError):
    """A precondition on the inputs does not hold."""


class ComputationError(GrushinError):
    """A quadrature or triangulation step could not produce a value."""


class ConvergenceError(GrushinError):
    """An iteration hit its limit before reaching the tolerance."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (residual={residual:.3e}, iterations={iterations})")
        self.residual = residual
        self.iterations = iterations


class DegeneracyError(GrushinError):
    """The nonlinear iteration collapsed to the trivial solution."""


class GridFormatError(GrushinError):
    """A grid file could not be parsed."""

    def __init__(self, message: str, line: Optional[int] = None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line
