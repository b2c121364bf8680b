"""Continuous-time Jacobi dynamics q' = R(q) - q on a box.

Fixed-step RK4 integration with projection, damped fixed-point refinement,
finite-difference linearization and eigenvalue classification, alpha
bifurcation sweeps and basin sampling. Shared by the ALOHA, linear-utility
and power-control games.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel, Field, field_validator

from .aloha import (
    AlohaGame,
    StabilityCriteria,
    altruistic_response,
    blended_response_linear,
    blended_response_tilde,
    interior_neps,
    partial_response_map,
    selfish_response,
)
from .config import config
from .utils import (
    BoundaryError,
    ConvergenceError,
    GameLabException,
    IntegrationError,
    NotAnEquilibriumError,
    PreconditionError,
    as_state,
)

ResponseMap = Callable[[np.ndarray], np.ndarray]
ScalarField = Callable[[np.ndarray], float]


@dataclass(frozen=True, eq=False)
class VectorField:
    """Relaxation field q' = response(q) - q restricted to [lower, upper]."""

    response: ResponseMap
    lower: np.ndarray
    upper: np.ndarray
    name: str = "field"

    @classmethod
    def on_box(cls, response: ResponseMap, lower: Sequence[float], upper: Sequence[float], name: str = "field") -> "VectorField":
        lo = np.asarray(lower, dtype=float)
        hi = np.asarray(upper, dtype=float)
        if lo.shape != hi.shape or np.any(lo >= hi):
            raise PreconditionError("Box bounds must satisfy lower < upper", {"lower": lo.tolist(), "upper": hi.tolist()})
        return cls(response=response, lower=lo, upper=hi, name=name)

    @property
    def dimension(self) -> int:
        return int(self.lower.shape[0])

    def velocity(self, q: np.ndarray) -> np.ndarray:
        return np.asarray(self.response(q), dtype=float) - q

    def project(self, q: np.ndarray) -> np.ndarray:
        return np.clip(q, self.lower, self.upper)

    def contains(self, q: np.ndarray) -> bool:
        return bool(np.all(q >= self.lower) and np.all(q <= self.upper))

    def on_boundary(self, q: np.ndarray) -> bool:
        return bool(np.any(q <= self.lower) or np.any(q >= self.upper))


def aloha_field(game: AlohaGame, kind: str = "selfish") -> VectorField:
    """
    Jacobi field of an ALOHA game on its clip box.

    Args:
        game: ALOHA game
        kind: One of selfish, altruistic, partial, blend_linear, blend_tilde

    Returns:
        The vector field
    """
    responses: Dict[str, ResponseMap] = {
        "selfish": lambda q: selfish_response(game, q),
        "altruistic": lambda q: altruistic_response(game, q),
        "partial": lambda q: partial_response_map(game, q),
        "blend_linear": lambda q: blended_response_linear(game, q),
        "blend_tilde": lambda q: blended_response_tilde(game, q),
    }
    if kind not in responses:
        raise PreconditionError(f"Unknown ALOHA field '{kind}'", {"choices": sorted(responses)})
    n = game.n_players
    return VectorField.on_box(responses[kind], [game.q_min] * n, [game.q_max] * n, name=f"aloha-{kind}")


class Classification(str, Enum):
    """Local character of an equilibrium."""

    STABLE_NODE = "StableNode"
    STABLE_FOCUS = "StableFocus"
    SADDLE = "Saddle"
    UNSTABLE = "Unstable"
    BOUNDARY = "Boundary"
    INCONCLUSIVE = "Inconclusive"

    @property
    def is_stable(self) -> bool:
        return self in (Classification.STABLE_NODE, Classification.STABLE_FOCUS)


@dataclass
class TrajectoryLog:
    """Time-stamped states of an integrated path."""

    times: np.ndarray
    states: np.ndarray
    lyapunov: Optional[np.ndarray] = None
    descent_tol: float = 1e-9

    @property
    def increments(self) -> np.ndarray:
        if self.lyapunov is None or self.lyapunov.shape[0] < 2:
            return np.zeros(0)
        return np.diff(self.lyapunov)

    @property
    def descent_violations(self) -> int:
        return int(np.count_nonzero(self.increments > self.descent_tol))

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def to_frame(self) -> pd.DataFrame:
        """Columns t, q_1..q_N, lyapunov, descent_flag."""
        frame = pd.DataFrame({"t": self.times})
        for k in range(self.states.shape[1]):
            frame[f"q_{k + 1}"] = self.states[:, k]
        if self.lyapunov is not None:
            frame["lyapunov"] = self.lyapunov
            frame["descent_flag"] = np.concatenate([[False], self.increments > self.descent_tol])
        else:
            frame["lyapunov"] = np.nan
            frame["descent_flag"] = False
        return frame


@dataclass(frozen=True)
class DescentReport:
    """Largest Lyapunov increment and number of steps above tolerance."""

    max_increment: float
    violations: int


@dataclass(frozen=True)
class FixedPoint:
    location: np.ndarray
    residual: float
    iterations: int


@dataclass(frozen=True)
class EquilibriumReport:
    """Linearization summary at an equilibrium."""

    location: np.ndarray
    residual: float
    eigenvalues: np.ndarray
    classification: Classification
    criteria: Optional[StabilityCriteria] = None

    @property
    def max_real_part(self) -> float:
        if self.eigenvalues.size == 0:
            return float("nan")
        return float(np.max(self.eigenvalues.real))

    def to_dict(self) -> dict:
        return {
            "location": self.location.tolist(),
            "residual": self.residual,
            "eigenvalues": [{"re": float(v.real), "im": float(v.imag)} for v in self.eigenvalues],
            "classification": self.classification.value,
            "criteria": self.criteria.to_dict() if self.criteria else None,
        }


def _rk4_step(vector_field: VectorField, q: np.ndarray, dt: float) -> np.ndarray:
    """One projected RK4 step of the autonomous field."""
    v = vector_field.velocity
    p = vector_field.project
    k1 = dt * v(q)
    k2 = dt * v(p(q + 0.5 * k1))
    k3 = dt * v(p(q + 0.5 * k2))
    k4 = dt * v(p(q + k3))
    return p(q + (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0)


def _check_step(dt: float, t_end: float) -> int:
    if dt <= 0.0 or t_end <= 0.0:
        raise PreconditionError("dt and t_end must be positive", {"dt": dt, "t_end": t_end})
    if dt > config.numerics.max_dt:
        raise PreconditionError(
            f"dt={dt} exceeds {config.numerics.max_dt} for explicit stepping at unit relaxation rate",
            {"dt": dt},
        )
    return int(np.ceil(t_end / dt - 1e-9))


def integrate(
    vector_field: VectorField,
    q0: Sequence[float],
    dt: float,
    t_end: float,
    lyapunov: Optional[ScalarField] = None,
    descent_tol: Optional[float] = None,
) -> TrajectoryLog:
    """
    Integrate q' = R(q) - q with fixed-step RK4, projecting onto the box.

    Args:
        vector_field: Field to integrate
        q0: Start inside the box
        dt: Step size (at most 0.1)
        t_end: Final time
        lyapunov: Optional function logged along the path
        descent_tol: Increment above which a step counts as a descent violation

    Returns:
        The trajectory log

    Raises:
        IntegrationError: if a non-finite state appears; the partial log is in ``details["log"]``
    """
    state = as_state(q0, vector_field.dimension)
    if not vector_field.contains(state):
        raise BoundaryError("Initial state lies outside the box", {"q0": state.tolist()})
    n_steps = _check_step(dt, t_end)
    tol = descent_tol if descent_tol is not None else config.numerics.descent_tol

    times = np.arange(n_steps + 1) * dt
    states = np.empty((n_steps + 1, vector_field.dimension))
    states[0] = state
    values = np.empty(n_steps + 1) if lyapunov is not None else None
    if values is not None:
        values[0] = lyapunov(state)

    for k in range(1, n_steps + 1):
        state = _rk4_step(vector_field, state, dt)
        if not np.all(np.isfinite(state)):
            partial = TrajectoryLog(
                times=times[:k],
                states=states[:k],
                lyapunov=values[:k] if values is not None else None,
                descent_tol=tol,
            )
            raise IntegrationError(f"Non-finite state at t={times[k]:.6g}", {"log": partial})
        states[k] = state
        if values is not None:
            values[k] = lyapunov(state)

    log = TrajectoryLog(times=times, states=states, lyapunov=values, descent_tol=tol)
    if values is not None and log.descent_violations:
        logger.warning(f"{log.descent_violations} Lyapunov increase(s) along {vector_field.name}")
    logger.debug(f"Integrated {vector_field.name} for {n_steps} steps to {state.tolist()}")
    return log


def descent_report(traj: TrajectoryLog) -> DescentReport:
    """Summarize the finite-difference Lyapunov increments of a trajectory."""
    if traj.lyapunov is None:
        raise PreconditionError("Trajectory carries no Lyapunov values")
    increments = traj.increments
    max_increment = float(np.max(increments)) if increments.size else 0.0
    return DescentReport(max_increment=max_increment, violations=traj.descent_violations)


def find_fixed_point(
    vector_field: VectorField,
    q_start: Sequence[float],
    tol: Optional[float] = None,
    eta: Optional[float] = None,
    max_iter: Optional[int] = None,
) -> FixedPoint:
    """
    Damped fixed-point iteration q <- q + eta (R(q) - q).

    Args:
        vector_field: Field whose response map is iterated
        q_start: Start inside the box
        tol: Residual tolerance in the max norm
        eta: Damping factor
        max_iter: Iteration cap

    Returns:
        Location, residual and iteration count

    Raises:
        ConvergenceError: if the cap is reached; ``details`` holds the last iterate
    """
    numerics = config.numerics
    tol = tol if tol is not None else numerics.fixed_point_tol
    eta = eta if eta is not None else numerics.eta
    max_iter = max_iter if max_iter is not None else numerics.max_iter

    q = as_state(q_start, vector_field.dimension)
    if not vector_field.contains(q):
        raise BoundaryError("Start lies outside the box", {"q_start": q.tolist()})

    residual = float("inf")
    for iteration in range(max_iter + 1):
        step = vector_field.velocity(q)
        residual = float(np.max(np.abs(step)))
        if residual < tol:
            logger.debug(f"Fixed point of {vector_field.name} after {iteration} iterations")
            return FixedPoint(location=q, residual=residual, iterations=iteration)
        if iteration < max_iter:
            q = vector_field.project(q + eta * step)

    raise ConvergenceError(
        f"No fixed point of {vector_field.name} within {max_iter} iterations",
        {"last": q.tolist(), "residual": residual},
    )


def jacobian_fd(vector_field: VectorField, q: Sequence[float], h: Optional[float] = None) -> np.ndarray:
    """
    Central-difference Jacobian of the velocity field.

    The step shrinks near the box so that no evaluation crosses it.

    Raises:
        BoundaryError: if q is on or outside the box
    """
    state = as_state(q, vector_field.dimension)
    if vector_field.on_boundary(state):
        raise BoundaryError("Finite differences need a point strictly inside the box", {"q": state.tolist()})
    step = h if h is not None else config.numerics.fd_step

    n = vector_field.dimension
    jac = np.empty((n, n))
    for k in range(n):
        hk = min(step, 0.5 * (state[k] - vector_field.lower[k]), 0.5 * (vector_field.upper[k] - state[k]))
        offset = np.zeros(n)
        offset[k] = hk
        jac[:, k] = (vector_field.velocity(state + offset) - vector_field.velocity(state - offset)) / (2.0 * hk)
    return jac


def eigenvalues(jac: np.ndarray) -> np.ndarray:
    """Eigenvalues, closed form for 2x2 matrices."""
    if jac.shape == (2, 2):
        half_trace = 0.5 * (jac[0, 0] + jac[1, 1])
        det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
        root = np.emath.sqrt(half_trace**2 - det)
        return np.array([half_trace + root, half_trace - root], dtype=complex)
    return np.linalg.eigvals(jac).astype(complex)


def classify_eigenvalues(values: np.ndarray, eps: Optional[float] = None) -> Classification:
    """Hartman-Grobman classification from real-part signs."""
    eps = eps if eps is not None else config.numerics.eps
    real = values.real
    if np.all(real < -eps):
        if np.any(np.abs(values.imag) > eps):
            return Classification.STABLE_FOCUS
        return Classification.STABLE_NODE
    if np.any(real > eps) and np.any(real < -eps):
        return Classification.SADDLE
    if np.any(real > eps):
        return Classification.UNSTABLE
    return Classification.INCONCLUSIVE


def classify(
    vector_field: VectorField,
    q: Sequence[float],
    criteria: Optional[StabilityCriteria] = None,
    residual_tol: Optional[float] = None,
    eps: Optional[float] = None,
) -> EquilibriumReport:
    """
    Classify an equilibrium by linearization.

    Raises:
        NotAnEquilibriumError: if the residual exceeds the tolerance
    """
    state = as_state(q, vector_field.dimension)
    residual = float(np.max(np.abs(vector_field.velocity(state))))
    limit = residual_tol if residual_tol is not None else config.numerics.residual_tol
    if residual > limit:
        raise NotAnEquilibriumError(
            f"Residual {residual:.3g} exceeds {limit:.3g}", {"q": state.tolist(), "residual": residual}
        )
    if vector_field.on_boundary(state):
        return EquilibriumReport(state, residual, np.zeros(0, dtype=complex), Classification.BOUNDARY, criteria)

    values = eigenvalues(jacobian_fd(vector_field, state))
    label = classify_eigenvalues(values, eps)
    logger.debug(f"{vector_field.name} at {state.tolist()}: {label.value}, eigenvalues {values.tolist()}")
    return EquilibriumReport(state, residual, values, label, criteria)


@dataclass(frozen=True)
class SweepCell:
    alpha: float
    nep_index: int
    nep: Tuple[float, ...]
    max_re_eigenvalue: float
    classification: str
    error: Optional[str] = None


@dataclass(frozen=True)
class Threshold:
    """An alpha where the largest eigenvalue real part changes sign."""

    nep_index: int
    alpha: float
    lower: float
    upper: float
    stable_above: bool

    def to_dict(self) -> dict:
        return {
            "nep_index": self.nep_index,
            "alpha": self.alpha,
            "bracket": [self.lower, self.upper],
            "stable_above": self.stable_above,
        }


@dataclass
class AlphaSweep:
    cells: List[SweepCell]
    thresholds: List[Threshold] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {
                    "alpha": c.alpha,
                    "nep_index": c.nep_index,
                    **{f"q_{k + 1}": v for k, v in enumerate(c.nep)},
                    "max_re_eigenvalue": c.max_re_eigenvalue,
                    "classification": c.classification,
                    "error": c.error or "",
                }
                for c in self.cells
            ]
        )

    def classification_at(self, nep_index: int, alpha: float) -> str:
        for c in self.cells:
            if c.nep_index == nep_index and np.isclose(c.alpha, alpha):
                return c.classification
        raise KeyError((nep_index, alpha))


def _partial_report(game: AlohaGame, alpha: float, nep: Sequence[float]) -> EquilibriumReport:
    return classify(aloha_field(game.with_alpha(alpha), "partial"), nep)


def _sweep_cell(game: AlohaGame, alpha: float, index: int, nep: Tuple[float, ...]) -> SweepCell:
    try:
        report = _partial_report(game, alpha, nep)
        return SweepCell(alpha, index, nep, report.max_real_part, report.classification.value)
    except GameLabException as e:
        logger.warning(f"Sweep cell alpha={alpha:.4g}, NEP {index} failed: {e.message}")
        return SweepCell(alpha, index, nep, float("nan"), "Error", e.message)


def _sign(value: float, eps: float) -> int:
    if not np.isfinite(value):
        return 0
    if value > eps:
        return 1
    if value < -eps:
        return -1
    return 0


def _bisect_threshold(game: AlohaGame, nep: Tuple[float, ...], lo: float, hi: float, sign_lo: int, width: float, eps: float) -> Tuple[float, float, float]:
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        s = _sign(_partial_report(game, mid, nep).max_real_part, eps)
        if s == 0:
            return mid, mid, mid
        if s == sign_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), lo, hi


def sweep_alpha(
    game: AlohaGame,
    neps: Optional[Sequence[Sequence[float]]] = None,
    alphas: Optional[Sequence[float]] = None,
    width: Optional[float] = None,
    max_workers: Optional[int] = None,
) -> AlphaSweep:
    """
    Classify interior equilibria under the partial-altruism field across alpha.

    Cells are evaluated concurrently; a failing cell is recorded, not raised.
    Sign changes of the largest eigenvalue real part between neighbouring
    grid values are refined by bisection to the given width.

    Args:
        game: Two-player ALOHA game with concave utilities
        neps: Equilibria to track; defaults to interior_neps(game)
        alphas: Alpha grid; defaults to an evenly spaced grid on [0, 1]
        width: Bisection width in alpha
        max_workers: Thread cap

    Returns:
        Per-cell classifications and the located thresholds
    """
    numerics = config.numerics
    if neps is None:
        neps = [n.q for n in interior_neps(game)]
    grid = np.sort(np.asarray(alphas if alphas is not None else np.linspace(0.0, 1.0, numerics.alpha_grid_points), dtype=float))
    if grid.size == 0:
        raise PreconditionError("Alpha grid is empty")
    width = width if width is not None else numerics.threshold_width
    workers = max_workers or config.max_workers()

    jobs = [(float(a), i, tuple(float(v) for v in nep)) for i, nep in enumerate(neps) for a in grid]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        cells = list(pool.map(lambda job: _sweep_cell(game, *job), jobs))

    thresholds: List[Threshold] = []
    eps = numerics.eps
    for i, nep in enumerate(neps):
        nep_t = tuple(float(v) for v in nep)
        row = [c for c in cells if c.nep_index == i]
        for left, right in zip(row, row[1:]):
            s_left = _sign(left.max_re_eigenvalue, eps)
            s_right = _sign(right.max_re_eigenvalue, eps)
            if s_left * s_right >= 0:
                continue
            alpha, lo, hi = _bisect_threshold(game, nep_t, left.alpha, right.alpha, s_left, width, eps)
            thresholds.append(Threshold(i, alpha, lo, hi, stable_above=s_right < 0))
            logger.info(f"NEP {i} {nep_t}: stability changes at alpha ~ {alpha:.4f}")
    return AlphaSweep(cells=cells, thresholds=thresholds)


class GridSpec(BaseModel):
    """Uniform two-axis grid of starting points, endpoints included."""

    lower: Tuple[float, float] = (0.0, 0.0)
    upper: Tuple[float, float] = (1.0, 1.0)
    points: Tuple[int, int] = Field(default=(50, 50))

    @field_validator("points")
    @classmethod
    def _non_empty(cls, points: Tuple[int, int]) -> Tuple[int, int]:
        if min(points) < 1:
            raise ValueError("grid must have at least one point per axis")
        return points

    def axes(self) -> Tuple[np.ndarray, np.ndarray]:
        return (
            np.linspace(self.lower[0], self.upper[0], self.points[0]),
            np.linspace(self.lower[1], self.upper[1], self.points[1]),
        )


@dataclass
class BasinGrid:
    """Attractor labels; ``labels[a, b]`` belongs to the start (q1[a], q2[b])."""

    q1: np.ndarray
    q2: np.ndarray
    labels: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        g1, g2 = np.meshgrid(self.q1, self.q2, indexing="ij")
        return pd.DataFrame({"q1": g1.ravel(), "q2": g2.ravel(), "label": self.labels.ravel()})


NO_ATTRACTOR = "none"


def _captured(state: np.ndarray, attractors: Mapping[str, np.ndarray], radius: float) -> Optional[str]:
    for name, point in attractors.items():
        if np.linalg.norm(state - point) <= radius:
            return name
    return None


def _capture_label(vector_field: VectorField, start: np.ndarray, attractors: Mapping[str, np.ndarray], dt: float, n_steps: int, radius: float) -> str:
    state = vector_field.project(start)
    for _ in range(n_steps):
        name = _captured(state, attractors, radius)
        if name is not None:
            return name
        state = _rk4_step(vector_field, state, dt)
        if not np.all(np.isfinite(state)):
            return NO_ATTRACTOR
    return _captured(state, attractors, radius) or NO_ATTRACTOR


def _heading_label(vector_field: VectorField, start: np.ndarray, attractors: Mapping[str, np.ndarray], radius: float) -> str:
    state = vector_field.project(start)
    name = _captured(state, attractors, radius)
    if name is not None:
        return name
    direction = np.sign(vector_field.velocity(state))
    for name, point in attractors.items():
        if np.array_equal(direction, np.sign(point - state)):
            return name
    return NO_ATTRACTOR


def basin_sample(
    vector_field: VectorField,
    grid_spec: GridSpec,
    attractors: Mapping[str, Sequence[float]],
    t_end: Optional[float] = None,
    capture_radius: Optional[float] = None,
    dt: float = 0.05,
    mode: str = "capture",
    max_workers: Optional[int] = None,
) -> BasinGrid:
    """
    Label each grid start by the attractor it reaches.

    ``capture`` integrates until the path enters an attractor's capture
    radius. ``heading`` labels by the attractor every velocity component
    initially points toward. Unresolved starts are labelled ``"none"``.

    Args:
        vector_field: Two-dimensional field
        grid_spec: Starting grid
        attractors: Named attractor locations
        t_end: Integration horizon for capture mode
        capture_radius: Euclidean capture radius
        dt: Step size for capture mode
        mode: ``capture`` or ``heading``
        max_workers: Thread cap

    Returns:
        The label grid
    """
    if mode not in ("capture", "heading"):
        raise PreconditionError(f"Unknown basin mode '{mode}'", {"choices": ["capture", "heading"]})
    numerics = config.numerics
    radius = capture_radius if capture_radius is not None else numerics.capture_radius
    horizon = t_end if t_end is not None else numerics.basin_t_end
    n_steps = _check_step(dt, horizon)
    targets = {name: as_state(point, vector_field.dimension) for name, point in attractors.items()}

    q1, q2 = grid_spec.axes()
    starts = [np.array([a, b]) for a in q1 for b in q2]

    def label(start: np.ndarray) -> str:
        if mode == "heading":
            return _heading_label(vector_field, start, targets, radius)
        return _capture_label(vector_field, start, targets, dt, n_steps, radius)

    with ThreadPoolExecutor(max_workers=max_workers or config.max_workers()) as pool:
        labels = list(pool.map(label, starts))

    grid = np.array(labels, dtype=object).reshape(q1.shape[0], q2.shape[0])
    logger.info(f"Sampled {len(starts)} starts on {vector_field.name} ({mode} mode)")
    return BasinGrid(q1=q1, q2=q2, labels=grid)


def evaluate_grid(function: ScalarField, grid_spec: GridSpec) -> pd.DataFrame:
    """Tabulate a scalar function on a grid; singular points become NaN."""
    q1, q2 = grid_spec.axes()
    rows = []
    for a in q1:
        for b in q2:
            try:
                value = float(function(np.array([a, b])))
            except GameLabException:
                value = float("nan")
            rows.append((float(a), float(b), value))
    return pd.DataFrame(rows, columns=["q1", "q2", "value"])
