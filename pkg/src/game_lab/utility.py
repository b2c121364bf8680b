"""Utility-function families, marginals, inverse marginals and demand levels.

All evaluators accept a scalar or a numpy array and return the same shape.
"""

from enum import Enum
from typing import List, Optional, Sequence, Union

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.optimize import bisect

from .config import config
from .utils import DomainError, NoSolutionError, Real, UnsupportedError

ArrayLike = Union[float, Sequence[float], np.ndarray]


class UtilityFamily(str, Enum):
    """Supported utility families."""

    ARCTAN = "arctan"
    ARCTAN_SCALED = "arctan_scaled"
    LINEAR = "linear"
    SATURATING = "saturating"


class UtilitySpec(BaseModel):
    """
    A player's utility function.

    ``arctan`` is parameterized by its demand ``y``:
    U(g) = M (1 + y^2) arctan(g), so that U'(y) = M.
    ``arctan_scaled`` is U(g) = (M u / beta) arctan(beta g).
    ``linear`` is U(g) = u g.
    ``saturating`` is the arctan form up to ``saturation`` and flat beyond it.
    """

    model_config = ConfigDict(frozen=True, use_enum_values=False)

    family: UtilityFamily = UtilityFamily.ARCTAN
    price: Real = Field(default=1.0, gt=0.0)
    demand: Optional[Real] = None
    u: Optional[Real] = None
    beta: Optional[Real] = None
    saturation: Optional[Real] = None

    @model_validator(mode="after")
    def _check_family_params(self) -> "UtilitySpec":
        family = self.family
        if family in (UtilityFamily.ARCTAN, UtilityFamily.SATURATING):
            if self.demand is None or not 0.0 < self.demand < 1.0:
                raise ValueError(f"{family.value} utility needs demand y in (0, 1), got {self.demand}")
        if family is UtilityFamily.SATURATING:
            if self.saturation is None or not 0.0 < self.saturation < 1.0:
                raise ValueError(f"saturation point must lie in (0, 1), got {self.saturation}")
        if family is UtilityFamily.ARCTAN_SCALED:
            if self.u is None or self.u <= 0.0:
                raise ValueError(f"arctan_scaled utility needs u > 0, got {self.u}")
            if self.beta is None or self.beta <= 0.0:
                raise ValueError(f"arctan_scaled utility needs beta > 0, got {self.beta}")
        if family is UtilityFamily.LINEAR and self.u is None:
            raise ValueError("linear utility needs a slope u")
        return self

    @classmethod
    def arctan(cls, demand: float, price: float = 1.0) -> "UtilitySpec":
        return cls(family=UtilityFamily.ARCTAN, demand=demand, price=price)

    @classmethod
    def arctan_scaled(cls, u: float, beta: float, price: float = 1.0) -> "UtilitySpec":
        return cls(family=UtilityFamily.ARCTAN_SCALED, u=u, beta=beta, price=price)

    @classmethod
    def linear(cls, u: float, price: float = 1.0) -> "UtilitySpec":
        return cls(family=UtilityFamily.LINEAR, u=u, price=price)

    @classmethod
    def saturating(cls, demand: float, saturation: float, price: float = 1.0) -> "UtilitySpec":
        return cls(family=UtilityFamily.SATURATING, demand=demand, saturation=saturation, price=price)

    @property
    def strictly_concave(self) -> bool:
        return self.family is not UtilityFamily.LINEAR

    @property
    def marginal_sup(self) -> float:
        """Supremum of U' over g >= 0, attained at g = 0."""
        if self.family is UtilityFamily.ARCTAN_SCALED:
            return self.price * self.u
        if self.family is UtilityFamily.LINEAR:
            return float(self.u)
        return self.price * (1.0 + self.demand**2)


def arctan_players(demands: Sequence[float], price: float = 1.0) -> List[UtilitySpec]:
    """Arctan utilities with the given demands and a common price."""
    return [UtilitySpec.arctan(y, price) for y in demands]


def _gamma_array(gamma: ArrayLike) -> np.ndarray:
    values = np.asarray(gamma, dtype=float)
    if np.any(np.isnan(values)) or np.any(values < 0.0):
        raise DomainError("Throughput argument must be nonnegative", {"gamma": values.tolist()})
    return values


def _unwrap(values: np.ndarray, template: ArrayLike):
    if np.ndim(template) == 0:
        return float(values)
    return values


def utility_value(u: UtilitySpec, gamma: ArrayLike):
    """
    Evaluate U(gamma).

    Args:
        u: Utility specification
        gamma: Nonnegative throughput (scalar or array)

    Returns:
        Utility value(s)
    """
    g = _gamma_array(gamma)
    family = u.family
    if family is UtilityFamily.LINEAR:
        values = u.u * g
    elif family is UtilityFamily.ARCTAN_SCALED:
        values = (u.price * u.u / u.beta) * np.arctan(u.beta * g)
    else:
        scale = u.price * (1.0 + u.demand**2)
        if family is UtilityFamily.SATURATING:
            g = np.minimum(g, u.saturation)
        values = scale * np.arctan(g)
    return _unwrap(values, gamma)


def utility_marginal(u: UtilitySpec, gamma: ArrayLike):
    """
    Evaluate U'(gamma). The saturating family has zero marginal past its saturation point.

    Args:
        u: Utility specification
        gamma: Nonnegative throughput (scalar or array)

    Returns:
        Marginal utility value(s)
    """
    g = _gamma_array(gamma)
    family = u.family
    if family is UtilityFamily.LINEAR:
        values = np.full_like(g, float(u.u))
    elif family is UtilityFamily.ARCTAN_SCALED:
        values = u.price * u.u / (1.0 + (u.beta * g) ** 2)
    else:
        values = u.price * (1.0 + u.demand**2) / (1.0 + g**2)
        if family is UtilityFamily.SATURATING:
            values = np.where(g > u.saturation, 0.0, values)
    return _unwrap(values, gamma)


def _inverse_scalar(u: UtilitySpec, z: float) -> float:
    top = u.marginal_sup
    if not 0.0 < z <= top:
        raise NoSolutionError(
            f"Marginal value {z} outside the range (0, {top}] of the {u.family.value} family",
            {"z": z, "sup": top},
        )
    if u.family is UtilityFamily.ARCTAN_SCALED:
        return float(np.sqrt(max(top / z - 1.0, 0.0)) / u.beta)
    if u.family is UtilityFamily.ARCTAN:
        return float(np.sqrt(max(top / z - 1.0, 0.0)))

    # saturating: invert the arctan branch on [0, saturation] only
    floor = top / (1.0 + u.saturation**2)
    if z < floor:
        raise NoSolutionError(
            f"Marginal value {z} falls in the jump of the saturating utility at {u.saturation}",
            {"z": z, "jump": [0.0, floor]},
        )
    return float(
        bisect(
            lambda g: top / (1.0 + g * g) - z,
            0.0,
            u.saturation,
            xtol=config.numerics.bisect_xtol,
        )
    )


def inverse_marginal(u: UtilitySpec, z: ArrayLike):
    """
    Solve U'(gamma) = z for gamma.

    Args:
        u: Utility specification
        z: Positive marginal value(s)

    Returns:
        gamma with U'(gamma) = z

    Raises:
        UnsupportedError: for the linear family
        NoSolutionError: when z is outside the marginal's range
    """
    if u.family is UtilityFamily.LINEAR:
        raise UnsupportedError("Linear utilities have a constant marginal and no inverse")
    values = np.asarray(z, dtype=float)
    if values.ndim == 0:
        return _inverse_scalar(u, float(values))
    return np.array([_inverse_scalar(u, float(v)) for v in values.ravel()]).reshape(values.shape)


def demand(u: UtilitySpec) -> float:
    """
    Demand level y = (U')^{-1}(M).

    Args:
        u: Utility specification

    Returns:
        The throughput at which marginal utility equals the price
    """
    if not u.strictly_concave:
        raise UnsupportedError("Demand is undefined for linear utilities")
    if u.family is UtilityFamily.ARCTAN:
        return float(u.demand)
    if u.family is UtilityFamily.SATURATING:
        if u.demand > u.saturation:
            raise NoSolutionError(
                f"Demand {u.demand} lies beyond the saturation point {u.saturation}",
                {"demand": u.demand, "saturation": u.saturation},
            )
        return float(u.demand)
    y = inverse_marginal(u, u.price)
    logger.debug(f"Demand of {u.family.value} utility: {y}")
    return y
