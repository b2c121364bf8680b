"""Distributed SINR power-control game.

Flow i transmits with power q_i; its receiver sees
SINR_i = q_i h_ii / (N + sum_{j != i} h_ji q_j), and a frame succeeds with
probability Gamma(SINR_i). Gains are indexed ``gains[j][i]`` for the path
from the transmitter of flow j to the receiver of flow i.
"""

from dataclasses import dataclass
from enum import Enum
from typing import List, Literal, Optional, Sequence

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.optimize import bisect
from scipy.special import erfc

from .aloha import CostBasis
from .config import config
from .dynamics import VectorField, find_fixed_point
from .search import maximize_scalar
from .utility import UtilitySpec, utility_value
from .utils import (
    ConvergenceError,
    DomainError,
    GameLabException,
    NoSolutionError,
    NoUniqueNEPError,
    Real,
    SingularInputError,
    UnsupportedError,
    as_state,
)


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


class ChannelModel(BaseModel):
    """Noise power and path gains, in linear units or dB."""

    model_config = ConfigDict(frozen=True)

    noise: Real = Field(default=1.0, gt=0.0)
    gains: Optional[List[List[Real]]] = None
    gains_db: Optional[List[List[Real]]] = None
    processing_gain: Optional[Real] = Field(default=None, ge=1.0)
    processing_gain_db: Optional[Real] = Field(default=None, ge=0.0)

    @model_validator(mode="after")
    def _check_gains(self) -> "ChannelModel":
        if (self.gains is None) == (self.gains_db is None):
            raise ValueError("give exactly one of 'gains' (linear) or 'gains_db'")
        if self.processing_gain is not None and self.processing_gain_db is not None:
            raise ValueError("give at most one of 'processing_gain' or 'processing_gain_db'")
        matrix = self.raw_matrix
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] < 1:
            raise ValueError(f"gain matrix must be square, got shape {matrix.shape}")
        if np.any(matrix < 0.0) or np.any(np.diag(matrix) <= 0.0):
            raise ValueError("gains must be nonnegative with positive direct gains")
        return self

    @classmethod
    def symmetric(cls, n_flows: int, direct: float, cross: float, noise: float = 1.0) -> "ChannelModel":
        gains = np.full((n_flows, n_flows), cross)
        np.fill_diagonal(gains, direct)
        return cls(noise=noise, gains=gains.tolist())

    @property
    def raw_matrix(self) -> np.ndarray:
        if self.gains is not None:
            return np.asarray(self.gains, dtype=float)
        return 10.0 ** (np.asarray(self.gains_db, dtype=float) / 10.0)

    @property
    def processing_factor(self) -> float:
        if self.processing_gain_db is not None:
            return db_to_linear(self.processing_gain_db)
        return float(self.processing_gain or 1.0)

    @property
    def matrix(self) -> np.ndarray:
        """Effective gains; cross gains are divided by the processing gain."""
        matrix = self.raw_matrix.copy()
        off = ~np.eye(matrix.shape[0], dtype=bool)
        matrix[off] /= self.processing_factor
        return matrix

    @property
    def n_flows(self) -> int:
        return int(self.raw_matrix.shape[0])


class ModulationScheme(str, Enum):
    GMSK = "GMSK"
    DBPSK = "DBPSK"
    GFSK = "GFSK"
    QPSK = "QPSK"
    QAM16 = "QAM16"
    QAM64 = "QAM64"
    LARGE_N_APPROX = "LargeNApprox"


EXACT_SCHEMES = [s for s in ModulationScheme if s is not ModulationScheme.LARGE_N_APPROX]


class ModulationModel(BaseModel):
    """Bit-error model and frame length."""

    model_config = ConfigDict(frozen=True)

    scheme: ModulationScheme = ModulationScheme.LARGE_N_APPROX
    n_bits: int = Field(default=1024, ge=1)
    kappa: Optional[Real] = Field(default=None, gt=0.0)

    @model_validator(mode="after")
    def _check_kappa(self) -> "ModulationModel":
        if self.scheme is ModulationScheme.GMSK and self.kappa is None:
            raise ValueError("GMSK needs the constant kappa")
        if self.scheme is not ModulationScheme.GMSK and self.kappa is not None:
            raise ValueError(f"kappa applies to GMSK only, not {self.scheme.value}")
        return self


class PowerGame(BaseModel):
    """Power-control game instance."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["power"] = "power"
    channel: ChannelModel
    modulation: ModulationModel = Field(default_factory=ModulationModel)
    demands: List[Real] = Field(min_length=1)
    price: Real = Field(default=1.0, gt=0.0)
    alpha: Real = Field(default=1.0, ge=0.0, le=1.0)
    cost_basis: CostBasis = CostBasis.THROUGHPUT
    power_price: Real = Field(default_factory=lambda: config.numerics.power_price, gt=0.0)
    q_cap: Optional[Real] = Field(default=None, gt=0.0)

    @model_validator(mode="after")
    def _check_demands(self) -> "PowerGame":
        y = np.asarray(self.demands, dtype=float)
        if y.shape[0] != self.channel.n_flows:
            raise ValueError(f"{y.shape[0]} demands for {self.channel.n_flows} flows")
        if np.any(y <= 0.0) or np.any(y >= 1.0):
            raise ValueError(f"frame-success demands must lie in (0, 1), got {y.tolist()}")
        return self

    @property
    def n_flows(self) -> int:
        return self.channel.n_flows

    @property
    def utilities(self) -> List[UtilitySpec]:
        return [UtilitySpec.arctan(y, self.price) for y in self.demands]

    def with_alpha(self, alpha: float) -> "PowerGame":
        return self.model_copy(update={"alpha": float(alpha)})


def _require_nonnegative(q: np.ndarray) -> None:
    if np.any(q < 0.0):
        raise DomainError("Transmit powers must be nonnegative", {"q": q.tolist()})


def _require_two_flows(game: PowerGame, operation: str) -> None:
    if game.n_flows != 2:
        raise UnsupportedError(f"{operation} is defined for two flows only", {"n_flows": game.n_flows})


def sinr_vector(channel: ChannelModel, q: Sequence[float]) -> np.ndarray:
    """SINR of every flow."""
    h = channel.matrix
    state = as_state(q, channel.n_flows)
    _require_nonnegative(state)
    direct = np.diag(h)
    interference = (h.T - np.diag(direct)) @ state
    return state * direct / (channel.noise + interference)


def sinr(channel: ChannelModel, q: Sequence[float], i: int) -> float:
    """SINR_i = q_i h_ii / (N + sum_{j != i} h_ji q_j)."""
    return float(sinr_vector(channel, q)[i])


def _sinr_array(value) -> np.ndarray:
    s = np.asarray(value, dtype=float)
    if np.any(np.isnan(s)) or np.any(s < 0.0):
        raise DomainError("SINR must be nonnegative", {"sinr": s.tolist()})
    return s


def _unwrap(values: np.ndarray, template):
    return float(values) if np.ndim(template) == 0 else values


def bit_error(mod: ModulationModel, sinr_value):
    """
    Bit error probability of the modulation scheme.

    Raises:
        UnsupportedError: for the large-n approximation, which has no bit model
    """
    s = _sinr_array(sinr_value)
    scheme = mod.scheme
    if scheme is ModulationScheme.LARGE_N_APPROX:
        raise UnsupportedError("The large-n approximation maps SINR to frame success directly")
    if scheme is ModulationScheme.GMSK:
        p = 0.5 * erfc(np.sqrt(mod.kappa * s))
    elif scheme is ModulationScheme.DBPSK:
        p = 0.5 * np.exp(-s)
    elif scheme is ModulationScheme.GFSK:
        p = 0.5 * np.exp(-0.5 * s)
    elif scheme is ModulationScheme.QPSK:
        p = 0.5 * erfc(np.sqrt(s))
    elif scheme is ModulationScheme.QAM16:
        p = 0.375 * erfc(np.sqrt(0.4 * s))
    else:
        p = (7.0 / 32.0) * erfc(np.sqrt(4.0 * s / 21.0))
    return _unwrap(p, sinr_value)


def frame_success(mod: ModulationModel, sinr_value):
    """
    Frame success probability Gamma(SINR).

    (1 - p_e)^n for the exact schemes, exp(-n exp(-SINR)) for the large-n approximation.
    """
    s = _sinr_array(sinr_value)
    if mod.scheme is ModulationScheme.LARGE_N_APPROX:
        values = np.exp(-mod.n_bits * np.exp(-s))
    else:
        values = np.exp(mod.n_bits * np.log1p(-np.asarray(bit_error(mod, s))))
    return _unwrap(values, sinr_value)


def gamma_inverse(mod: ModulationModel, y: float, method: str = "auto") -> float:
    """
    SINR at which Gamma reaches y.

    Args:
        mod: Modulation model
        y: Target frame success in (0, 1)
        method: ``auto`` (closed form where available), ``closed`` or ``bisect``

    Returns:
        The required SINR

    Raises:
        DomainError: if y is outside (0, 1)
        NoSolutionError: if y is below Gamma(0)
    """
    if not 0.0 < y < 1.0:
        raise DomainError(f"Frame success target must lie in (0, 1), got {y}")
    floor = frame_success(mod, 0.0)
    if y < floor:
        raise NoSolutionError(f"Target {y} is below Gamma(0) = {floor:.6g}", {"y": y, "floor": floor})
    if y == floor:
        return 0.0

    large_n = mod.scheme is ModulationScheme.LARGE_N_APPROX
    if method == "closed" or (method == "auto" and large_n):
        if not large_n:
            raise UnsupportedError(f"No closed-form inverse for {mod.scheme.value}")
        return float(np.log(mod.n_bits / -np.log(y)))
    if method not in ("auto", "bisect"):
        raise DomainError(f"Unknown inversion method '{method}'")

    hi = 1.0
    while frame_success(mod, hi) < y:
        hi *= 2.0
        if hi > 1e6:
            raise NoSolutionError(f"Could not bracket the inverse of Gamma at {y}")
    return float(bisect(lambda s: frame_success(mod, s) - y, 0.0, hi, xtol=config.numerics.bisect_xtol))


def upsilon(game: PowerGame) -> np.ndarray:
    """Required SINR over direct gain, Gamma^{-1}(y_i) / h_ii."""
    direct = np.diag(game.channel.matrix)
    return np.array([gamma_inverse(game.modulation, float(y)) for y in game.demands]) / direct


def selfish_power_response(game: PowerGame, q: Sequence[float]) -> np.ndarray:
    """F°_i = Upsilon_i (N + sum_{j != i} q_j h_ji)."""
    state = as_state(q, game.n_flows)
    _require_nonnegative(state)
    h = game.channel.matrix
    cross = h - np.diag(np.diag(h))
    return upsilon(game) * (game.channel.noise + cross.T @ state)


def altruistic_power_response(game: PowerGame, q: Sequence[float]) -> np.ndarray:
    """
    G°_i = (1 / h_{i,3-i})(q_{3-i} / Upsilon_{3-i} - N), floored at 0.

    Player i raises its power until the other flow's SINR target binds;
    h_{i,3-i} is the gain from transmitter i into receiver 3-i.
    """
    _require_two_flows(game, "altruistic_power_response")
    state = as_state(q, 2)
    _require_nonnegative(state)
    h = game.channel.matrix
    into_other = np.array([h[0, 1], h[1, 0]])
    if np.any(into_other <= 0.0):
        raise SingularInputError("Altruistic power response needs positive cross gains")
    ups = upsilon(game)
    raw = (state[::-1] / ups[::-1] - game.channel.noise) / into_other
    return np.maximum(raw, 0.0)


def psi_matrix(game: PowerGame) -> np.ndarray:
    """Psi_ji = h_ji Upsilon_i off the diagonal, zero on it."""
    h = game.channel.matrix
    psi = h * upsilon(game)[np.newaxis, :]
    np.fill_diagonal(psi, 0.0)
    return psi


@dataclass(frozen=True)
class PowerNep:
    q: np.ndarray
    feasible: bool
    sinr: np.ndarray

    def to_dict(self) -> dict:
        return {"q": self.q.tolist(), "feasible": self.feasible, "sinr": self.sinr.tolist()}


def power_nep(game: PowerGame) -> PowerNep:
    """
    Unique equilibrium of the affine selfish response, solving
    (I - Psi)^T q = N Upsilon.

    Raises:
        NoUniqueNEPError: if I - Psi is singular
    """
    n = game.n_flows
    ups = upsilon(game)
    system = (np.eye(n) - psi_matrix(game)).T
    if np.linalg.cond(system) > 1.0 / np.finfo(float).eps:
        raise NoUniqueNEPError("I - Psi is singular; the equilibrium is not unique", {"psi": psi_matrix(game).tolist()})
    q = np.linalg.solve(system, game.channel.noise * ups)

    # componentwise fixed-point equations are the reference
    h = game.channel.matrix
    componentwise = ups * (game.channel.noise + (h - np.diag(np.diag(h))).T @ q)
    mismatch = float(np.max(np.abs(componentwise - q)))
    if mismatch > 1e-8 * max(1.0, float(np.max(np.abs(q)))):
        logger.warning(f"Matrix equilibrium misses the componentwise equations by {mismatch:.3g}")

    feasible = bool(np.all(q >= 0.0))
    if not feasible:
        logger.warning(f"Power equilibrium {q.tolist()} is infeasible")
        return PowerNep(q=q, feasible=False, sinr=np.full(n, np.nan))
    return PowerNep(q=q, feasible=True, sinr=sinr_vector(game.channel, q))


def _cross_upsilon(game: PowerGame):
    _require_two_flows(game, "two-flow Lyapunov functions")
    h = game.channel.matrix
    return h[0, 1], h[1, 0], upsilon(game)


def lyapunov_power_selfish(game: PowerGame, q: Sequence[float]) -> float:
    """
    Quadratic Lyapunov function of q' = F°(q) - q:
    sum_i h_{i,3-i} Upsilon_{3-i} (q_i^2/2 - N Upsilon_i q_i) - prod_i q_i h_{i,3-i} Upsilon_i.
    """
    h01, h10, ups = _cross_upsilon(game)
    state = as_state(q, 2)
    n = game.channel.noise
    weights = np.array([h01 * ups[1], h10 * ups[0]])
    return float(np.sum(weights * (0.5 * state**2 - n * ups * state)) - state[0] * h01 * ups[0] * state[1] * h10 * ups[1])


def lyapunov_power_selfish_gradient(game: PowerGame, q: Sequence[float]) -> np.ndarray:
    h01, h10, ups = _cross_upsilon(game)
    state = as_state(q, 2)
    weights = np.array([h01 * ups[1], h10 * ups[0]])
    return weights * (state - selfish_power_response(game, state))


def lyapunov_power_selfish_hessian(game: PowerGame) -> np.ndarray:
    h01, h10, ups = _cross_upsilon(game)
    p = h01 * ups[0] * h10 * ups[1]
    return np.array([[h01 * ups[1], -p], [-p, h10 * ups[0]]])


def lyapunov_power_altruistic(game: PowerGame, q: Sequence[float]) -> float:
    """
    Quadratic function whose gradient is a positive multiple of q - G°(q):
    sum_i (1/(h_{3-i,i} Upsilon_i))(N q_i / h_{i,3-i} + q_i^2/2) - q_1 q_2 / p.
    """
    h01, h10, ups = _cross_upsilon(game)
    state = as_state(q, 2)
    n = game.channel.noise
    p = h01 * ups[0] * h10 * ups[1]
    weights = np.array([1.0 / (h10 * ups[0]), 1.0 / (h01 * ups[1])])
    into_other = np.array([h01, h10])
    return float(np.sum(weights * (n * state / into_other + 0.5 * state**2)) - state[0] * state[1] / p)


def lyapunov_power_altruistic_gradient(game: PowerGame, q: Sequence[float]) -> np.ndarray:
    h01, h10, ups = _cross_upsilon(game)
    state = as_state(q, 2)
    n = game.channel.noise
    into_other = np.array([h01, h10])
    weights = np.array([1.0 / (h10 * ups[0]), 1.0 / (h01 * ups[1])])
    unfloored = (state[::-1] / ups[::-1] - n) / into_other
    return weights * (state - unfloored)


def lyapunov_power_altruistic_hessian(game: PowerGame) -> np.ndarray:
    h01, h10, ups = _cross_upsilon(game)
    p = h01 * ups[0] * h10 * ups[1]
    return np.array([[1.0 / (h10 * ups[0]), -1.0 / p], [-1.0 / p, 1.0 / (h01 * ups[1])]])


@dataclass(frozen=True)
class StabilityProducts:
    p: float
    selfish_stable: bool
    altruistic_stable: bool
    marginal: bool

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "selfish_stable": self.selfish_stable,
            "altruistic_stable": self.altruistic_stable,
            "marginal": self.marginal,
        }


def stability_products(game: PowerGame) -> StabilityProducts:
    """
    p = prod_i h_{i,3-i} Upsilon_i. Selfish dynamics are stable iff p < 1,
    altruistic ones iff p > 1; p = 1 is marginal for both.
    """
    h01, h10, ups = _cross_upsilon(game)
    p = float(h01 * ups[0] * h10 * ups[1])
    if abs(p - 1.0) <= 1e-12:
        return StabilityProducts(p=p, selfish_stable=False, altruistic_stable=False, marginal=True)
    return StabilityProducts(p=p, selfish_stable=p < 1.0, altruistic_stable=p > 1.0, marginal=False)


def power_cap(game: PowerGame) -> float:
    """Upper edge of the power box; defaults to a multiple of the equilibrium norm."""
    if game.q_cap is not None:
        return float(game.q_cap)
    factor = config.numerics.power_box_factor
    try:
        nep = power_nep(game)
        if nep.feasible:
            return factor * float(np.linalg.norm(nep.q))
    except NoUniqueNEPError:
        pass
    fallback = factor * float(np.linalg.norm(game.channel.noise * upsilon(game)))
    logger.warning(f"No feasible equilibrium to size the power box; using {fallback:.6g}")
    return fallback


def power_partial_response(game: PowerGame, i: int, q: Sequence[float], cap: Optional[float] = None) -> float:
    """
    Power of flow i maximizing alpha V_i + (1 - alpha) V_{3-i} on [0, cap], with
    arctan utilities at the demands.

    With the power cost basis V_j = U_j(Gamma_j) and the acting flow pays c q_i,
    c the power price. With the throughput basis V_j = U_j(Gamma_j) - M Gamma_j
    and transmit power is free.
    """
    _require_two_flows(game, "power_partial_response")
    state = as_state(q, 2)
    _require_nonnegative(state)
    j = 1 - i
    h = game.channel.matrix
    n = game.channel.noise
    alpha = float(game.alpha)
    me, other = game.utilities[i], game.utilities[j]
    top = cap if cap is not None else power_cap(game)
    q_j = float(state[j])
    power_basis = game.cost_basis is CostBasis.POWER

    def objective(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        s_i = x * h[i, i] / (n + h[j, i] * q_j)
        s_j = q_j * h[j, j] / (n + h[i, j] * x)
        gamma_i = frame_success(game.modulation, s_i)
        gamma_j = frame_success(game.modulation, s_j)
        own = np.asarray(utility_value(me, gamma_i))
        theirs = np.asarray(utility_value(other, gamma_j))
        if power_basis:
            return alpha * own + (1.0 - alpha) * theirs - game.power_price * x
        return alpha * (own - me.price * gamma_i) + (1.0 - alpha) * (theirs - other.price * gamma_j)

    return maximize_scalar(
        objective,
        0.0,
        top,
        grid_points=config.numerics.power_grid_points,
        xtol=config.numerics.search_xtol * top,
    )


def power_field(game: PowerGame, kind: str = "selfish", cap: Optional[float] = None) -> VectorField:
    """
    Jacobi field of the power game on [0, cap]^n.

    Args:
        game: Power-control game
        kind: ``selfish``, ``altruistic`` or ``partial``
        cap: Box edge; defaults to power_cap(game)
    """
    top = cap if cap is not None else power_cap(game)
    if kind == "selfish":
        response = lambda q: selfish_power_response(game, q)  # noqa: E731
    elif kind == "altruistic":
        response = lambda q: altruistic_power_response(game, q)  # noqa: E731
    elif kind == "partial":
        response = lambda q: np.array([power_partial_response(game, i, q, top) for i in range(2)])  # noqa: E731
    else:
        raise DomainError(f"Unknown power field '{kind}'", {"choices": ["selfish", "altruistic", "partial"]})
    n = game.n_flows
    return VectorField.on_box(response, [0.0] * n, [top] * n, name=f"power-{kind}")


def power_cost_alpha_sweep(
    game: PowerGame,
    alphas: Optional[Sequence[float]] = None,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
) -> pd.DataFrame:
    """
    Equilibria of the power-priced partial-altruism game for descending alpha.

    Each alpha starts from the previous equilibrium; the first starts from the
    selfish equilibrium. Non-convergent alphas are recorded and the sweep goes on.

    Args:
        game: Two-flow power game
        alphas: Alpha values, visited in descending order
        tol: Fixed-point residual tolerance
        max_iter: Iteration cap per alpha

    Returns:
        Table with columns alpha, q_0, q_1, norm, converged, iterations, residual, error

    Raises:
        UnsupportedError: for more than two flows or a throughput-priced game
    """
    _require_two_flows(game, "power_cost_alpha_sweep")
    if game.cost_basis is not CostBasis.POWER:
        raise UnsupportedError(
            "power_cost_alpha_sweep needs the power cost basis", {"cost_basis": game.cost_basis.value}
        )
    numerics = config.numerics
    grid = sorted((float(a) for a in (alphas if alphas is not None else np.linspace(1.0, 0.0, 11))), reverse=True)
    tol = tol if tol is not None else numerics.power_sweep_tol
    max_iter = max_iter if max_iter is not None else numerics.power_sweep_max_iter
    cap = power_cap(game)

    try:
        nep = power_nep(game)
        start = nep.q if nep.feasible else game.channel.noise * upsilon(game)
    except NoUniqueNEPError:
        start = game.channel.noise * upsilon(game)
    start = np.clip(start, 0.0, cap)

    rows = []
    for alpha in grid:
        vector_field = power_field(game.with_alpha(alpha), "partial", cap)
        try:
            point = find_fixed_point(vector_field, start, tol=tol, max_iter=max_iter)
            q, converged, iterations, residual, error = point.location, True, point.iterations, point.residual, ""
        except ConvergenceError as e:
            q = np.asarray(e.details["last"])
            converged, iterations, residual, error = False, max_iter, e.details["residual"], e.message
            logger.warning(f"alpha={alpha:.4g}: {e.message}")
        except GameLabException as e:
            q = start
            converged, iterations, residual, error = False, 0, float("nan"), e.message
            logger.warning(f"alpha={alpha:.4g}: {e.message}")
        rows.append(
            {
                "alpha": alpha,
                "q_0": float(q[0]),
                "q_1": float(q[1]),
                "norm": float(np.linalg.norm(q)),
                "converged": converged,
                "iterations": iterations,
                "residual": residual,
                "error": error,
            }
        )
        start = q
        logger.info(f"alpha={alpha:.4g}: equilibrium {np.round(q, 6).tolist()}")

    return pd.DataFrame(rows)
