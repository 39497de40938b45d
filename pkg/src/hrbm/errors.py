"""Semantic exception hierarchy for the hrbm package."""

from __future__ import annotations


class HrbmError(Exception):
    """Base error for this package."""


class InputError(HrbmError, ValueError):
    """Inputs violate a contract: domain, shape, file format, or configuration."""


class NumericError(HrbmError, ArithmeticError):
    """A numerical routine could not meet its accuracy or convergence contract."""


class QuadratureError(NumericError):
    """Adaptive quadrature exhausted its refinement cap.

    Carries the best available estimate so callers can report partial results.
    """

    def __init__(self, message: str, value: float, error_estimate: float):
        super().__init__(message)
        self.value = value
        self.error_estimate = error_estimate
