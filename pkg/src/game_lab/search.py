"""Bracketed one-dimensional maximization used by the partial-altruism responses."""

import math
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from loguru import logger
from scipy.optimize import brentq

from .config import config

ScalarFunction = Callable[[float], float]
VectorizedFunction = Callable[[np.ndarray], np.ndarray]

GOLDEN_RATIO = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(
    fhandle: ScalarFunction, a: float, b: float, xtol: float = 1e-10, n_iter: Optional[int] = None
) -> Tuple[float, float, Dict[str, float]]:
    """
    Golden-section search for the maximum of a unimodal function on [a, b].

    Args:
        fhandle: Function to maximize
        a: Lower end of the bracket
        b: Upper end of the bracket
        xtol: Final bracket width
        n_iter: Iteration count override

    Returns:
        Tuple of (argmax, max value, debug info)
    """
    lo, hi = float(a), float(b)
    length = hi - lo
    if length <= xtol:
        x = 0.5 * (lo + hi)
        return x, fhandle(x), {"n_iter": 0, "n_eval": 1, "x_bracket_length": length}
    if not n_iter:
        n_iter = int(np.ceil(np.log(xtol / length) / np.log(GOLDEN_RATIO)))

    x2 = lo + (1.0 - GOLDEN_RATIO) * (hi - lo)
    x3 = lo + GOLDEN_RATIO * (hi - lo)
    f2, f3 = fhandle(x2), fhandle(x3)
    n_eval = 2
    for _ in range(n_iter):
        if f2 < f3:
            lo, x2, f2 = x2, x3, f3
            x3 = lo + GOLDEN_RATIO * (hi - lo)
            f3 = fhandle(x3)
        else:
            hi, x3, f3 = x3, x2, f2
            x2 = lo + (1.0 - GOLDEN_RATIO) * (hi - lo)
            f2 = fhandle(x2)
        n_eval += 1

    x, fval = (x2, f2) if f2 >= f3 else (x3, f3)
    return x, fval, {"n_iter": n_iter, "n_eval": n_eval, "x_bracket_length": hi - lo}


def coarse_bracket(
    objective: VectorizedFunction, lo: float, hi: float, points: int
) -> Tuple[float, float, float]:
    """
    Evaluate the objective on a uniform grid and bracket its best point.

    Returns:
        Tuple of (bracket low, bracket high, best grid point)
    """
    grid = np.linspace(lo, hi, points)
    values = np.asarray(objective(grid), dtype=float)
    values = np.where(np.isfinite(values), values, -np.inf)
    k = int(np.argmax(values))
    return float(grid[max(k - 1, 0)]), float(grid[min(k + 1, points - 1)]), float(grid[k])


def maximize_scalar(
    objective: VectorizedFunction,
    lo: float,
    hi: float,
    slope: Optional[ScalarFunction] = None,
    grid_points: Optional[int] = None,
    xtol: Optional[float] = None,
) -> float:
    """
    Maximize a scalar objective on [lo, hi].

    A coarse grid pass picks the bracket around the best grid point. When an
    analytic slope is supplied and changes sign on the bracket, the stationary
    point is located with ``brentq``; otherwise golden-section search refines
    the bracket.

    Args:
        objective: Vectorized objective
        lo: Lower bound
        hi: Upper bound
        slope: Derivative of the objective, if known
        grid_points: Coarse grid size
        xtol: Final bracket width

    Returns:
        The maximizer
    """
    points = grid_points or config.numerics.coarse_grid_points
    tol = xtol if xtol is not None else config.numerics.search_xtol
    a, b, best = coarse_bracket(objective, lo, hi, points)

    if slope is not None:
        s_lo, s_hi = slope(a), slope(b)
        if a == lo and s_lo <= 0.0:
            return lo
        if b == hi and s_hi >= 0.0:
            return hi
        if s_lo > 0.0 > s_hi:
            return float(brentq(slope, a, b, xtol=min(tol, 1e-14)))
        logger.debug(f"Slope has no sign change on [{a}, {b}], falling back to golden section")

    x, _, _ = golden_section_max(lambda v: float(objective(np.asarray(v))), a, b, xtol=tol)
    if best in (lo, hi) and float(objective(np.asarray(best))) >= float(objective(np.asarray(x))):
        return best
    return x
