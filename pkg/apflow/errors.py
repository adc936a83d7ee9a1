"""
Exception hierarchy for apflow.

Everything raised on purpose derives from ApflowError so the command line
front end can map failures to exit codes.
"""

from typing import Optional, Tuple


class ApflowError(Exception):
    """Base class for all solver, diagnostics and configuration errors."""


# Grid

class GridError(ApflowError):
    pass


class InvalidGrid(GridError):
    pass


class NonSquareCells(GridError):
    pass


class TooFewCells(GridError):
    pass


# Operators

class OperatorError(ApflowError):
    pass


class TooLarge(OperatorError):
    pass


# Spectral solves

class SpectralError(ApflowError):
    pass


class EpsilonTooLarge(SpectralError):
    pass


class ImaginaryResidue(SpectralError):
    """The discarded imaginary part of an inverse transform exceeded tolerance."""


# Scheme

class SchemeError(ApflowError):
    pass


class InvalidParameters(SchemeError):
    pass


class NonPositiveDensity(SchemeError):
    pass


class PositivityLost(SchemeError):
    def __init__(self, cell: Tuple[int, ...], step: int, value: float):
        self.cell = cell
        self.step = step
        self.value = value
        super().__init__(
            f"density lost positivity at cell {cell} in step {step} (rho = {value!r}); "
            f"the numerical diffusion lambda is too small"
        )


class StepLimitExceeded(SchemeError):
    pass


# Diagnostics

class DiagnosticsError(ApflowError):
    pass


class NonNestedGrids(DiagnosticsError):
    pass


# Configuration

class ConfigError(ApflowError):
    def __init__(self, message: str, line_no: Optional[int] = None, line: Optional[str] = None):
        self.line_no = line_no
        self.line = line
        if line_no is not None:
            message = f"line {line_no}: {message} ({line!r})"
        super().__init__(message)


class UnknownKey(ConfigError):
    pass


class BadValue(ConfigError):
    pass


# Benchmarks

class BenchmarkError(ApflowError):
    pass


class WrongDimension(BenchmarkError):
    pass


class UnknownProblem(ConfigError, BenchmarkError):
    """Raised for unregistered problem names, by the registry and by the parser."""
