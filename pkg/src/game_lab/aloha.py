"""The slotted-ALOHA game under symmetric altruism.

Players choose transmission probabilities q_i; player i succeeds with
probability gamma_i = q_i * prod_{j != i} (1 - q_j). The module provides the
selfish, altruistic, partially altruistic and blended response maps, the
closed-form interior equilibria of the two-player game, the Lyapunov
functions of the associated Jacobi dynamics and the local stability criteria.
"""

from dataclasses import dataclass
from enum import Enum
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .config import config
from .search import maximize_scalar
from .utility import UtilitySpec, arctan_players, demand, utility_marginal, utility_value
from .utils import (
    DomainError,
    NotAnEquilibriumError,
    Real,
    SingularInputError,
    UnsupportedError,
    as_state,
)


class CostBasis(str, Enum):
    """What a player pays for: delivered throughput (M gamma) or transmit effort (M q)."""

    THROUGHPUT = "throughput"
    POWER = "power"


def symmetric_altruism(n_players: int, alpha: float) -> np.ndarray:
    """Altruism matrix with alpha on the diagonal and (1 - alpha)/(N - 1) elsewhere."""
    off = (1.0 - alpha) / (n_players - 1)
    matrix = np.full((n_players, n_players), off)
    np.fill_diagonal(matrix, alpha)
    return matrix


class AlohaGame(BaseModel):
    """A slotted-ALOHA game instance."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["aloha"] = "aloha"
    players: List[UtilitySpec] = Field(min_length=2)
    alpha: Real = Field(default=1.0, ge=0.0, le=1.0)
    clip: Tuple[Real, Real] = Field(
        default_factory=lambda: (config.numerics.q_min, config.numerics.q_max)
    )
    cost_basis: CostBasis = CostBasis.THROUGHPUT
    altruism: Optional[List[List[Real]]] = None

    @field_validator("clip")
    @classmethod
    def _check_clip(cls, clip: Tuple[float, float]) -> Tuple[float, float]:
        q_min, q_max = clip
        if not 0.0 < q_min < q_max < 1.0:
            raise ValueError(f"clip box must satisfy 0 < q_min < q_max < 1, got {clip}")
        return clip

    @model_validator(mode="after")
    def _check_game(self) -> "AlohaGame":
        y = self.demands
        throughput_basis = self.cost_basis is CostBasis.THROUGHPUT
        if throughput_basis and (np.any(y <= 0.0) or np.any(y >= 1.0)):
            raise ValueError(f"ALOHA demands must lie in (0, 1), got {y.tolist()}")
        if not throughput_basis and (np.any(y <= 0.0) or not np.all(np.isfinite(y))):
            raise ValueError(f"Power-priced demands must be positive and finite, got {y.tolist()}")

        if self.altruism is not None:
            matrix = np.asarray(self.altruism, dtype=float)
            n = self.n_players
            if matrix.shape != (n, n):
                raise ValueError(f"altruism matrix must be {n}x{n}, got {matrix.shape}")
            if np.any(matrix < 0.0) or not np.allclose(matrix.sum(axis=1), 1.0):
                raise ValueError("altruism matrix rows must be nonnegative and sum to 1")
            if not np.allclose(matrix, symmetric_altruism(n, self.alpha)):
                logger.warning("Altruism matrix is not symmetric in alpha; only alpha drives the responses")

        if throughput_basis and self.n_players == 2:
            disc = self.discriminant
            if disc < 0.0:
                logger.warning(f"Demands {y.tolist()} admit no interior NEP (discriminant {disc:.6g})")
        return self

    @classmethod
    def from_demands(cls, demands: Sequence[float], alpha: float = 1.0, **kwargs) -> "AlohaGame":
        """Game with arctan utilities of unit price and the given demands."""
        return cls(players=arctan_players(demands), alpha=alpha, **kwargs)

    @property
    def n_players(self) -> int:
        return len(self.players)

    @property
    def demands(self) -> np.ndarray:
        return np.array([demand(p) for p in self.players])

    @property
    def q_min(self) -> float:
        return float(self.clip[0])

    @property
    def q_max(self) -> float:
        return float(self.clip[1])

    @property
    def discriminant(self) -> float:
        y1, y2 = self.demands[:2]
        return float((1.0 + y1 - y2) ** 2 - 4.0 * y1)

    def with_alpha(self, alpha: float) -> "AlohaGame":
        return self.model_copy(update={"alpha": float(alpha)})


@dataclass(frozen=True)
class InteriorNep:
    """An interior equilibrium of the two-player game."""

    q: Tuple[float, float]
    outside_clip: bool

    def to_dict(self) -> dict:
        return {"q": list(self.q), "outside_clip": self.outside_clip}


@dataclass(frozen=True)
class StabilityCriteria:
    """Local stability indices at an interior equilibrium."""

    sigma_selfish: float
    sigma_altruistic: float

    @property
    def stable_selfish(self) -> bool:
        return self.sigma_selfish < 1.0

    @property
    def stable_altruistic(self) -> bool:
        return self.sigma_altruistic < 1.0

    def to_dict(self) -> dict:
        return {
            "sigma_selfish": self.sigma_selfish,
            "sigma_altruistic": self.sigma_altruistic,
            "stable_selfish": self.stable_selfish,
            "stable_altruistic": self.stable_altruistic,
        }


def _require_two_players(game: AlohaGame, operation: str) -> None:
    if game.n_players != 2:
        raise UnsupportedError(
            f"{operation} is defined for two players only", {"n_players": game.n_players}
        )


def _others_product(values: np.ndarray) -> np.ndarray:
    """prod_{j != i} values_j for every i, without dividing."""
    return np.array([np.prod(np.delete(values, i)) for i in range(values.shape[0])])


def _clip(game: AlohaGame, raw: np.ndarray) -> np.ndarray:
    """Clip raw responses; +inf goes to q_max, -inf and nan to q_min."""
    raw = np.where(np.isnan(raw), -np.inf, raw)
    return np.clip(raw, game.q_min, game.q_max)


def throughput(q: Sequence[float]) -> np.ndarray:
    """
    Per-player success probabilities gamma_i = q_i prod_{j != i}(1 - q_j).

    Args:
        q: Transmission probabilities

    Returns:
        Throughput vector

    Raises:
        DomainError: if a component lies outside [0, 1]
    """
    state = as_state(q)
    if np.any(state < 0.0) or np.any(state > 1.0):
        raise DomainError("Transmission probabilities must lie in [0, 1]", {"q": state.tolist()})
    return state * _others_product(1.0 - state)


def nep_residual(game: AlohaGame, q: Sequence[float]) -> float:
    """Max-norm distance between throughput and demand at q."""
    state = as_state(q, game.n_players)
    return float(np.max(np.abs(throughput(state) - game.demands)))


def selfish_response(game: AlohaGame, q: Sequence[float]) -> np.ndarray:
    """
    Clipped selfish best response F_i = y_i / prod_{j != i}(1 - q_j).

    Args:
        game: ALOHA game
        q: Current joint play

    Returns:
        F(q)
    """
    state = as_state(q, game.n_players)
    denominator = _others_product(1.0 - state)
    with np.errstate(divide="ignore"):
        raw = game.demands / denominator
    return _clip(game, raw)


def _altruistic_raw(game: AlohaGame, state: np.ndarray) -> np.ndarray:
    y = game.demands
    other_q, other_y = state[::-1], y[::-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        return 1.0 - other_y / other_q


def altruistic_response(game: AlohaGame, q: Sequence[float]) -> np.ndarray:
    """
    Clipped purely altruistic response G_i = 1 - y_{3-i} / q_{3-i}.

    Args:
        game: Two-player ALOHA game
        q: Current joint play

    Returns:
        G(q)
    """
    _require_two_players(game, "altruistic_response")
    state = as_state(q, 2)
    return _clip(game, _altruistic_raw(game, state))


def _net_values(game: AlohaGame, gamma: np.ndarray, player: int) -> np.ndarray:
    spec = game.players[player]
    value = np.asarray(utility_value(spec, gamma))
    if game.cost_basis is CostBasis.THROUGHPUT:
        value = value - spec.price * gamma
    return value


def partial_response(game: AlohaGame, i: int, q: Sequence[float]) -> float:
    """
    Play of player i maximizing alpha V_i + (1 - alpha) V_{3-i} on the clip box.

    With the throughput cost basis V_j = U_j(gamma_j) - M_j gamma_j. With the
    power basis the acting player pays M_i q_i for its own transmissions and
    the objective is alpha U_i + (1 - alpha) U_{3-i} - M_i q_i.

    Args:
        game: Two-player ALOHA game
        i: Player index (0 or 1)
        q: Current joint play

    Returns:
        The partial-altruism response Q_i(alpha, q_{3-i})
    """
    _require_two_players(game, "partial_response")
    if not all(p.strictly_concave for p in game.players):
        raise UnsupportedError("partial_response needs concave utilities")

    state = as_state(q, 2)
    j = 1 - i
    q_j = float(state[j])
    alpha = float(game.alpha)
    me, other = game.players[i], game.players[j]
    power_basis = game.cost_basis is CostBasis.POWER

    def objective(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        gamma_i = x * (1.0 - q_j)
        gamma_j = q_j * (1.0 - x)
        total = alpha * _net_values(game, gamma_i, i) + (1.0 - alpha) * _net_values(game, gamma_j, j)
        if power_basis:
            total = total - me.price * x
        return total

    def slope(x: float) -> float:
        gamma_i = x * (1.0 - q_j)
        gamma_j = q_j * (1.0 - x)
        du_i = utility_marginal(me, gamma_i)
        du_j = utility_marginal(other, gamma_j)
        if power_basis:
            return alpha * du_i * (1.0 - q_j) - (1.0 - alpha) * du_j * q_j - me.price
        return alpha * (du_i - me.price) * (1.0 - q_j) - (1.0 - alpha) * (du_j - other.price) * q_j

    return maximize_scalar(objective, game.q_min, game.q_max, slope=slope)


def partial_response_map(game: AlohaGame, q: Sequence[float]) -> np.ndarray:
    """Both players' partial-altruism responses at q."""
    return np.array([partial_response(game, i, q) for i in range(2)])


def blended_response_linear(game: AlohaGame, q: Sequence[float]) -> np.ndarray:
    """Convex combination alpha F + (1 - alpha) G of the clipped responses."""
    _require_two_players(game, "blended_response_linear")
    alpha = float(game.alpha)
    return alpha * selfish_response(game, q) + (1.0 - alpha) * altruistic_response(game, q)


def blended_response_tilde(game: AlohaGame, q: Sequence[float]) -> np.ndarray:
    """
    Clipped alpha F_i + (1 - alpha) G~_i with
    G~_i = (1 - y_{3-i}/q_{3-i}) y_i^2 (1/q_i - 1)^2.

    Singular terms follow the clip convention: +inf saturates at q_max,
    -inf and undefined values at q_min. A term with zero weight is skipped.
    """
    _require_two_players(game, "blended_response_tilde")
    state = as_state(q, 2)
    alpha = float(game.alpha)
    y = game.demands
    raw = np.zeros(2)
    with np.errstate(divide="ignore", invalid="ignore"):
        if alpha > 0.0:
            raw = raw + alpha * (y / (1.0 - state[::-1]))
        if alpha < 1.0:
            tilde = _altruistic_raw(game, state) * y**2 * (1.0 / state - 1.0) ** 2
            raw = raw + (1.0 - alpha) * tilde
    return _clip(game, raw)


def interior_neps(game: AlohaGame) -> List[InteriorNep]:
    """
    Closed-form interior equilibria of the two-player game.

    Solves q_1^2 - (1 + y_1 - y_2) q_1 + y_1 = 0 with q_2 = y_2 / (1 - q_1).

    Args:
        game: Two-player ALOHA game

    Returns:
        Equilibria in (0, 1)^2 sorted by q_1; empty when the discriminant is negative
    """
    _require_two_players(game, "interior_neps")
    y1, y2 = (float(v) for v in game.demands)
    b = 1.0 + y1 - y2
    disc = b * b - 4.0 * y1
    if disc < 0.0:
        logger.info(f"No interior NEP: discriminant {disc:.6g} < 0")
        return []

    # numerically stable pair of roots
    big = 0.5 * (b + np.copysign(np.sqrt(disc), b))
    roots = sorted({big, y1 / big}) if big != 0.0 else [0.0]

    neps: List[InteriorNep] = []
    for q1 in roots:
        if not 0.0 < q1 < 1.0:
            continue
        q2 = y2 / (1.0 - q1)
        if not 0.0 < q2 < 1.0:
            continue
        inside = game.q_min <= q1 <= game.q_max and game.q_min <= q2 <= game.q_max
        neps.append(InteriorNep(q=(float(q1), float(q2)), outside_clip=not inside))
    logger.info(f"Found {len(neps)} interior NEP(s) for demands ({y1:.6g}, {y2:.6g})")
    return neps


def _require_below_one(state: np.ndarray, name: str) -> None:
    if np.any(state >= 1.0):
        raise SingularInputError(f"{name} is singular at q_i = 1", {"q": state.tolist()})


def _require_positive(state: np.ndarray, name: str) -> None:
    if np.any(state <= 0.0):
        raise SingularInputError(f"{name} is singular at q_i = 0", {"q": state.tolist()})


def lyapunov_selfish(game: AlohaGame, q: Sequence[float]) -> float:
    """
    Lyapunov function of the selfish Jacobi dynamics for N players:
    -prod y_i/(1-q_i) + sum_i (q_i/(1-q_i) + log(1-q_i)) prod_{j != i} y_j.
    """
    state = as_state(q, game.n_players)
    _require_below_one(state, "lyapunov_selfish")
    y = game.demands
    others = _others_product(y)
    return float(-np.prod(y / (1.0 - state)) + np.sum((state / (1.0 - state) + np.log1p(-state)) * others))


def lyapunov_selfish_gradient(game: AlohaGame, q: Sequence[float]) -> np.ndarray:
    """Analytic gradient (prod_{j != i} y_j / (1 - q_i)^2)(q_i - y_i / prod_{j != i}(1 - q_j))."""
    state = as_state(q, game.n_players)
    _require_below_one(state, "lyapunov_selfish")
    y = game.demands
    raw_f = y / _others_product(1.0 - state)
    return _others_product(y) / (1.0 - state) ** 2 * (state - raw_f)


def lyapunov_altruistic(game: AlohaGame, q: Sequence[float]) -> float:
    """Lyapunov function -prod(1 - y_i/q_i) + sum y_i log q_i of the altruistic dynamics."""
    _require_two_players(game, "lyapunov_altruistic")
    state = as_state(q, 2)
    _require_positive(state, "lyapunov_altruistic")
    y = game.demands
    return float(-np.prod(1.0 - y / state) + np.sum(y * np.log(state)))


def lyapunov_altruistic_gradient(game: AlohaGame, q: Sequence[float]) -> np.ndarray:
    """(y_i / q_i^2)(q_i - G_i) with the unclipped G."""
    _require_two_players(game, "lyapunov_altruistic")
    state = as_state(q, 2)
    _require_positive(state, "lyapunov_altruistic")
    y = game.demands
    return y / state**2 * (state - _altruistic_raw(game, state))


def lyapunov_blend(game: AlohaGame, q: Sequence[float]) -> float:
    """
    Lyapunov function of the dynamics driven by blended_response_tilde:
    -alpha prod y_i/(1-q_i) - (1-alpha) prod h_i(q_i)
    + sum_i (q_i/(1-q_i) + log(1-q_i)) y_{3-i}, with h_i(q) = y_i - y_i^2/q.
    """
    _require_two_players(game, "lyapunov_blend")
    state = as_state(q, 2)
    _require_positive(state, "lyapunov_blend")
    _require_below_one(state, "lyapunov_blend")
    y = game.demands
    alpha = float(game.alpha)
    h = y - y**2 / state
    return float(
        -alpha * np.prod(y / (1.0 - state))
        - (1.0 - alpha) * np.prod(h)
        + np.sum((state / (1.0 - state) + np.log1p(-state)) * y[::-1])
    )


def lyapunov_blend_gradient(game: AlohaGame, q: Sequence[float]) -> np.ndarray:
    """(y_{3-i} / (1 - q_i)^2)(q_i - Q~_i) with the unclipped Q~."""
    _require_two_players(game, "lyapunov_blend")
    state = as_state(q, 2)
    _require_positive(state, "lyapunov_blend")
    _require_below_one(state, "lyapunov_blend")
    y = game.demands
    alpha = float(game.alpha)
    tilde = _altruistic_raw(game, state) * y**2 * (1.0 / state - 1.0) ** 2
    raw = alpha * y / (1.0 - state[::-1]) + (1.0 - alpha) * tilde
    return y[::-1] / (1.0 - state) ** 2 * (state - raw)


def stability_criteria(game: AlohaGame, q: Sequence[float], tol: Optional[float] = None) -> StabilityCriteria:
    """
    Stability indices at an interior equilibrium.

    sigma = y_1 y_2 / ((1-q_1)^2 (1-q_2)^2) governs the selfish dynamics and
    sigma* = y_1 y_2 / (q_1^2 q_2^2) the altruistic ones; each is stable
    exactly when its index is below one.

    Args:
        game: Two-player ALOHA game
        q: Interior equilibrium
        tol: Residual tolerance for the equilibrium check

    Returns:
        The two indices

    Raises:
        NotAnEquilibriumError: if q does not meet the demands
    """
    _require_two_players(game, "stability_criteria")
    state = as_state(q, 2)
    residual = nep_residual(game, state)
    limit = tol if tol is not None else config.numerics.residual_tol
    if residual > limit or np.any(state <= 0.0) or np.any(state >= 1.0):
        raise NotAnEquilibriumError(
            "Stability criteria are defined only at interior equilibria",
            {"q": state.tolist(), "residual": residual},
        )
    y1y2 = float(np.prod(game.demands))
    sigma = y1y2 / float(np.prod((1.0 - state) ** 2))
    sigma_star = y1y2 / float(np.prod(state**2))
    return StabilityCriteria(sigma_selfish=sigma, sigma_altruistic=sigma_star)
