"""Utility functions and exceptions for game-lab."""

import json
import sys
from fractions import Fraction
from typing import Any, Dict, Optional, Sequence, Union

import numpy as np
from loguru import logger
from pydantic import BeforeValidator
from typing_extensions import Annotated


def _json_default(obj: Any) -> Any:
    """Convert numpy and complex values for ``json.dumps``."""
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, np.floating):
        return float(obj)
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    if hasattr(obj, "model_dump"):
        return obj.model_dump(mode="json")
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")


def format_json_response(data: Any, indent: int = 2) -> str:
    """
    Format data as pretty-printed JSON.

    Floats are written with ``repr`` precision, so every value round-trips.

    Args:
        data: Data to format
        indent: JSON indentation level

    Returns:
        Formatted JSON string
    """
    try:
        return json.dumps(data, indent=indent, ensure_ascii=False, default=_json_default)
    except (TypeError, ValueError) as e:
        logger.error(f"Error formatting JSON: {str(e)}")
        return str(data)


def parse_real(value: Any) -> Any:
    """
    Accept reals written as fractions, e.g. ``"8/15"``.

    Args:
        value: Number or numeric string

    Returns:
        Float for strings, the value unchanged otherwise
    """
    if isinstance(value, str):
        try:
            return float(Fraction(value.strip()))
        except (ValueError, ZeroDivisionError) as e:
            raise ValueError(f"not a real number: {value!r}") from e
    return value


Real = Annotated[float, BeforeValidator(parse_real)]


def as_state(q: Union[Sequence[float], np.ndarray], dimension: Optional[int] = None) -> np.ndarray:
    """
    Coerce a strategy vector to a 1-D float array.

    Args:
        q: Strategy vector
        dimension: Expected length, if any

    Returns:
        Float copy of ``q``
    """
    state = np.array(q, dtype=float)
    if state.ndim != 1:
        raise DomainError("Strategy vector must be one-dimensional", {"shape": list(state.shape)})
    if dimension is not None and state.shape[0] != dimension:
        raise DomainError(
            f"Strategy vector has {state.shape[0]} components, expected {dimension}",
            {"q": state.tolist()},
        )
    return state


class GameLabException(Exception):
    """Base exception for game-lab."""

    def __init__(self, message: str, error_code: str = "UNKNOWN_ERROR", details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.error_code = error_code
        self.details = details or {}


class ConfigurationError(GameLabException):
    """Exception for scenario and settings errors."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, "CONFIGURATION_ERROR", details)


class DomainError(GameLabException):
    """Argument outside the mathematical domain of an operation."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, "DOMAIN_ERROR", details)


class NoSolutionError(GameLabException):
    """An inverse map has no preimage for the requested value."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, "NO_SOLUTION", details)


class UnsupportedError(GameLabException):
    """Operation not defined for this utility family, scheme or player count."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, "UNSUPPORTED", details)


class SingularInputError(GameLabException):
    """Input hits a pole of the evaluated function."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, "SINGULAR_INPUT", details)


class NoUniqueNEPError(SingularInputError):
    """The power-control equilibrium system is singular."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        GameLabException.__init__(self, message, "NO_UNIQUE_NEP", details)


class PreconditionError(GameLabException):
    """Caller violated an operation precondition."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, "PRECONDITION_FAILED", details)


class NotAnEquilibriumError(PreconditionError):
    """A point passed as an equilibrium has a large residual."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        GameLabException.__init__(self, message, "NOT_AN_EQUILIBRIUM", details)


class BoundaryError(GameLabException):
    """State lies on or outside the box where the operation needs an interior point."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, "BOUNDARY", details)


class IntegrationError(GameLabException):
    """Integration produced a non-finite state; ``details["log"]`` holds the partial trajectory."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, "INTEGRATION_FAILED", details)


class ConvergenceError(GameLabException):
    """Iteration stopped before reaching tolerance; ``details`` holds the last iterate."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, "NO_CONVERGENCE", details)


class DegenerateError(GameLabException):
    """A closed-form threshold has a vanishing denominator."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, "DEGENERATE", details)


def setup_error_handling():
    """Setup global error handling for the application."""

    def handle_exception(exc_type, exc_value, exc_traceback):
        """Global exception handler."""
        if issubclass(exc_type, KeyboardInterrupt):
            sys.__excepthook__(exc_type, exc_value, exc_traceback)
            return

        logger.opt(exception=(exc_type, exc_value, exc_traceback)).error("Uncaught exception")

    sys.excepthook = handle_exception
