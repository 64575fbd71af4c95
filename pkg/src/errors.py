"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes (see ``src.cli.EXIT_CODES``).
"""
from __future__ import annotations

from typing import Optional


class ChannelToolkitError(Exception):
    """Base class for all toolkit failures."""


class DomainError(ChannelToolkitError, ValueError):
    """Input outside the documented domain of an operation."""


class NumericError(ChannelToolkitError, ArithmeticError):
    """A numerical procedure failed to converge or to bracket its target."""


class SimulationError(NumericError):
    """The particle simulator produced non-finite state."""


class NoIntersectionError(DomainError):
    """A step segment does not touch the receiver sphere."""


class NoInteriorOptimum(NumericError):
    """The closed-form optimum left the arccos domain.

    ``boundary_alpha`` is the admissible endpoint (0 or pi) the optimum
    saturates at; ``argument`` is the offending arccos argument.
    """

    def __init__(self, message: str, boundary_alpha: float, argument: Optional[float] = None):
        super().__init__(message)
        self.boundary_alpha = boundary_alpha
        self.argument = argument
