"""Game variants: linear utilities and power-based costs."""

from dataclasses import dataclass
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .aloha import AlohaGame, CostBasis, throughput
from .config import config
from .dynamics import VectorField
from .utility import UtilityFamily, UtilitySpec
from .utils import DegenerateError, Real, SingularInputError, UnsupportedError, as_state


class LinearGame(BaseModel):
    """Two-player ALOHA game with linear utilities U_i(g) = u_i g."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["linear"] = "linear"
    u: Tuple[Real, Real]
    price: Real = Field(default=1.0, ge=0.0)
    alpha: Real = Field(default=1.0, ge=0.0, le=1.0)
    cost_basis: CostBasis = CostBasis.THROUGHPUT

    @model_validator(mode="after")
    def _check_slopes(self) -> "LinearGame":
        u = np.asarray(self.u, dtype=float)
        if np.any(u <= 0.0):
            raise ValueError(f"linear slopes must be positive, got {u.tolist()}")
        if self.cost_basis is CostBasis.THROUGHPUT and np.any(u <= self.price):
            raise ValueError(f"throughput-priced linear games need u_i > M, got u={u.tolist()}, M={self.price}")
        return self

    def with_alpha(self, alpha: float) -> "LinearGame":
        return self.model_copy(update={"alpha": float(alpha)})


def linear_threshold(g: LinearGame, i: int) -> float:
    """
    Threshold phi_{3-i}(alpha) on the opponent's play that switches player i.

    phi = alpha (u_i - M) / (alpha (u_i - M) + (1 - alpha)(u_{3-i} - M))
    """
    u_i, u_j = float(g.u[i]), float(g.u[1 - i])
    alpha, m = float(g.alpha), float(g.price)
    numerator = alpha * (u_i - m)
    denominator = numerator + (1.0 - alpha) * (u_j - m)
    if denominator == 0.0:
        raise DegenerateError("Linear threshold has a zero denominator", {"u": list(g.u), "alpha": alpha})
    return numerator / denominator


def power_linear_threshold(g: LinearGame, i: int) -> float:
    """
    Power-priced threshold psi^M_{3-i}(alpha) = alpha (u_i - M) / (alpha u_i + (1 - alpha) u_{3-i}).
    """
    u_i, u_j = float(g.u[i]), float(g.u[1 - i])
    alpha, m = float(g.alpha), float(g.price)
    denominator = alpha * u_i + (1.0 - alpha) * u_j
    if denominator == 0.0:
        raise DegenerateError("Power-priced threshold has a zero denominator", {"u": list(g.u), "alpha": alpha})
    return alpha * (u_i - m) / denominator


def _threshold(g: LinearGame, i: int) -> float:
    if g.cost_basis is CostBasis.POWER:
        return power_linear_threshold(g, i)
    return linear_threshold(g, i)


def linear_response(g: LinearGame, i: int, q: Sequence[float]) -> float:
    """
    Best response of player i: transmit when the opponent plays below the
    threshold, back off above it, hold the current play on the threshold.
    """
    state = as_state(q, 2)
    other = state[1 - i]
    phi = _threshold(g, i)
    if other < phi:
        return 1.0
    if other > phi:
        return 0.0
    return float(state[i])


def linear_saddle(g: LinearGame) -> np.ndarray:
    """Interior saddle equilibrium (phi_1, phi_2), or (psi_1, psi_2) under power pricing."""
    return np.array([_threshold(g, 1), _threshold(g, 0)])


def linear_endpoints() -> List[Tuple[float, float]]:
    """Equilibria (0, 1) and (1, 0), fixed for every alpha."""
    return [(0.0, 1.0), (1.0, 0.0)]


def linear_field(g: LinearGame) -> VectorField:
    """Jacobi field of the linear game on [0, 1]^2."""
    return VectorField.on_box(
        lambda q: np.array([linear_response(g, 0, q), linear_response(g, 1, q)]),
        [0.0, 0.0],
        [1.0, 1.0],
        name="linear",
    )


def linear_attractors(g: LinearGame) -> dict:
    """Named equilibria used for basin labelling."""
    saddle = linear_saddle(g)
    return {"(0,1)": (0.0, 1.0), "(1,0)": (1.0, 0.0), "phi": tuple(saddle.tolist())}


def mirror_price(u: float, M: float, alpha: float) -> float:
    """Price M^(alpha) = u - alpha (u - M) at which selfish play mirrors alpha-altruism."""
    return u - alpha * (u - M)


def _power_cost_players(game: AlohaGame) -> List[UtilitySpec]:
    if game.n_players != 2:
        raise UnsupportedError("Power-cost responses are defined for two players only")
    if any(p.family is not UtilityFamily.ARCTAN_SCALED for p in game.players):
        raise UnsupportedError("Power-cost closed forms need arctan_scaled utilities")
    return game.players


def power_cost_demand(spec: UtilitySpec) -> float:
    """Large-u demand sqrt(u) / beta of an arctan_scaled utility."""
    if spec.family is not UtilityFamily.ARCTAN_SCALED:
        raise UnsupportedError("Power-cost demand needs an arctan_scaled utility")
    return float(np.sqrt(spec.u) / spec.beta)


def power_cost_best_reply(spec: UtilitySpec, q_other: float, approximate: bool = False) -> float:
    """
    Unclipped selfish reply under power pricing.

    Exact: sqrt(u (1 - q_o) - 1) / (beta (1 - q_o)) where u (1 - q_o) > 1, else 0.
    Approximate: y / sqrt(1 - q_o) with y = sqrt(u) / beta; +inf at q_o = 1.
    """
    if spec.family is not UtilityFamily.ARCTAN_SCALED:
        raise UnsupportedError("Power-cost replies need an arctan_scaled utility")
    free = 1.0 - float(q_other)
    if approximate:
        if free <= 0.0:
            return float("inf")
        return power_cost_demand(spec) / np.sqrt(free)
    ratio = spec.u * free
    if ratio <= 1.0:
        return 0.0
    return float(np.sqrt(ratio - 1.0) / (spec.beta * free))


def power_cost_regime(game: AlohaGame, q: Sequence[float], ratio: Optional[float] = None) -> np.ndarray:
    """Whether the large-u approximation is in force, u_i (1 - q_{3-i}) >= ratio, per player."""
    players = _power_cost_players(game)
    state = as_state(q, 2)
    limit = ratio if ratio is not None else config.numerics.regime_ratio
    return np.array([players[i].u * (1.0 - state[1 - i]) >= limit for i in range(2)])


def power_cost_selfish_response(
    game: AlohaGame, q: Sequence[float], approximate: bool = False, clipped: bool = True
) -> np.ndarray:
    """
    Selfish response F^# of the power-priced game with arctan_scaled utilities.

    Args:
        game: Two-player game with the power cost basis
        q: Current joint play
        approximate: Use the large-u form y_i / sqrt(1 - q_{3-i})
        clipped: Clip to the game's box

    Returns:
        F^#(q)
    """
    players = _power_cost_players(game)
    if game.cost_basis is not CostBasis.POWER:
        logger.warning("power_cost_selfish_response called on a throughput-priced game")
    state = as_state(q, 2)
    raw = np.array([power_cost_best_reply(players[i], state[1 - i], approximate) for i in range(2)])
    if not clipped:
        return raw
    # a zero exact reply means no profitable transmission; it clips to q_min
    return np.clip(raw, game.q_min, game.q_max)


def power_cost_field(game: AlohaGame, approximate: bool = True) -> VectorField:
    """Jacobi field of the power-priced selfish game on the clip box."""
    return VectorField.on_box(
        lambda q: power_cost_selfish_response(game, q, approximate=approximate),
        [game.q_min] * 2,
        [game.q_max] * 2,
        name="power-cost-approx" if approximate else "power-cost",
    )


def lyapunov_powercost(game: AlohaGame, q: Sequence[float]) -> float:
    """
    Lyapunov function of the approximate power-priced selfish dynamics:
    -prod y_i/sqrt(1-q_i) + sum_i (sqrt(1-q_i) + 1/sqrt(1-q_i)) prod_{j != i} y_j.
    """
    players = _power_cost_players(game)
    state = as_state(q, 2)
    if np.any(state >= 1.0):
        raise SingularInputError("lyapunov_powercost is singular at q_i = 1", {"q": state.tolist()})
    y = np.array([power_cost_demand(p) for p in players])
    root = np.sqrt(1.0 - state)
    return float(-np.prod(y / root) + np.sum((root + 1.0 / root) * y[::-1]))


def lyapunov_powercost_gradient(game: AlohaGame, q: Sequence[float]) -> np.ndarray:
    """(y_{3-i}/2)(1 - q_i)^{-3/2}(q_i - y_i / sqrt(1 - q_{3-i}))."""
    players = _power_cost_players(game)
    state = as_state(q, 2)
    if np.any(state >= 1.0):
        raise SingularInputError("lyapunov_powercost is singular at q_i = 1", {"q": state.tolist()})
    y = np.array([power_cost_demand(p) for p in players])
    return 0.5 * y[::-1] * (1.0 - state) ** -1.5 * (state - y / np.sqrt(1.0 - state[::-1]))


@dataclass(frozen=True)
class AltruisticNepSet:
    """
    Equilibria of the purely altruistic power-priced game.

    Every play where some player opts out (min(q) = 0) is an equilibrium.
    With saturating utilities, so is every play where all throughputs exceed
    their saturation points.
    """

    saturation: Optional[Tuple[float, float]] = None
    tol: float = 0.0

    @property
    def region_is_empty(self) -> bool:
        """The saturation region is empty iff sqrt(g^_1) + sqrt(g^_2) >= 1."""
        if self.saturation is None:
            return True
        return float(np.sum(np.sqrt(self.saturation))) >= 1.0

    def on_boundary_family(self, q: Sequence[float]) -> bool:
        return bool(np.min(as_state(q, 2)) <= self.tol)

    def in_saturation_region(self, q: Sequence[float]) -> bool:
        if self.saturation is None:
            return False
        return bool(np.all(throughput(as_state(q, 2)) > np.asarray(self.saturation)))

    def contains(self, q: Sequence[float]) -> bool:
        return self.on_boundary_family(q) or self.in_saturation_region(q)

    def describe(self) -> dict:
        summary = {"boundary_family": "min(q_1, q_2) = 0"}
        if self.saturation is not None:
            summary["saturation_region"] = (
                f"gamma_1(q) > {self.saturation[0]} and gamma_2(q) > {self.saturation[1]}"
            )
            summary["saturation_region_empty"] = self.region_is_empty
        return summary


def power_cost_altruistic_neps(game: AlohaGame) -> AltruisticNepSet:
    """Equilibrium set of the purely altruistic game under power pricing."""
    if game.n_players != 2:
        raise UnsupportedError("Power-cost equilibria are defined for two players only")
    if not all(p.strictly_concave for p in game.players):
        raise UnsupportedError("Power-cost equilibria need concave utilities")
    families = {p.family for p in game.players}
    if families == {UtilityFamily.SATURATING}:
        saturation = (float(game.players[0].saturation), float(game.players[1].saturation))
        nep_set = AltruisticNepSet(saturation=saturation)
        if nep_set.region_is_empty:
            logger.info(f"Saturation region for thresholds {saturation} is empty")
        return nep_set
    return AltruisticNepSet()
