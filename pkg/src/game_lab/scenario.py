"""Scenario documents: one JSON file describing a game and command parameters."""

import json
from pathlib import Path
from typing import Callable, Dict, List, Optional, Union

import numpy as np
from loguru import logger
from pydantic import BaseModel, Field, ValidationError
from typing_extensions import Annotated

from . import aloha, powerctl, variations
from .aloha import AlohaGame
from .dynamics import GridSpec, VectorField, aloha_field
from .powerctl import PowerGame
from .utils import ConfigurationError, GameLabException, Real
from .variations import LinearGame

GameSpec = Annotated[Union[AlohaGame, PowerGame, LinearGame], Field(discriminator="kind")]


class SimulateParams(BaseModel):
    dynamics: str = "selfish"
    q0: Optional[List[Real]] = None
    dt: float = Field(default=0.01, gt=0.0)
    t_end: float = Field(default=50.0, gt=0.0)
    lyapunov: Optional[str] = None


class SweepParams(BaseModel):
    alphas: Optional[List[Real]] = Field(default=None, min_length=1)
    nep_indices: Optional[List[int]] = Field(default=None, min_length=1)
    width: Optional[float] = Field(default=None, gt=0.0)


class ContourParams(BaseModel):
    function: str = "selfish"
    grid: GridSpec = Field(default_factory=lambda: GridSpec(lower=(0.01, 0.01), upper=(0.99, 0.99), points=(99, 99)))


class BasinParams(BaseModel):
    dynamics: str = "selfish"
    grid: GridSpec = Field(default_factory=GridSpec)
    mode: str = Field(default="capture", pattern="^(capture|heading)$")
    dt: float = Field(default=0.05, gt=0.0)
    t_end: Optional[float] = Field(default=None, gt=0.0)
    capture_radius: Optional[float] = Field(default=None, gt=0.0)
    attractors: Optional[Dict[str, List[Real]]] = None


class Scenario(BaseModel):
    """A game plus the parameters of every command that may run on it."""

    game: GameSpec
    simulate: SimulateParams = Field(default_factory=SimulateParams)
    sweep: SweepParams = Field(default_factory=SweepParams)
    contour: ContourParams = Field(default_factory=ContourParams)
    basin: BasinParams = Field(default_factory=BasinParams)
    seed: int = 0


def _validation_message(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        location = ".".join(str(p) for p in item["loc"]) or "<root>"
        parts.append(f"{location}: {item['msg']}")
    return "; ".join(parts)


def parse_scenario(text: str, source: str = "<scenario>") -> Scenario:
    """
    Parse and validate a scenario document.

    Raises:
        ConfigurationError: with line/column for JSON errors and field paths for schema errors
    """
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigurationError(
            f"{source}:{e.lineno}:{e.colno}: {e.msg}", {"line": e.lineno, "column": e.colno}
        ) from e
    try:
        return Scenario.model_validate(document)
    except ValidationError as e:
        raise ConfigurationError(
            f"{source}: {_validation_message(e)}",
            {"errors": [{"loc": list(i["loc"]), "msg": i["msg"]} for i in e.errors()]},
        ) from e
    except GameLabException as e:
        raise ConfigurationError(f"{source}: {e.message}", e.details) from e


def load_scenario(path: Union[str, Path]) -> Scenario:
    """Read a scenario file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(f"Cannot read scenario {path}: {e}") from e
    scenario = parse_scenario(text, str(path))
    logger.debug(f"Loaded {scenario.game.kind} scenario from {path}")
    return scenario


def _unknown(kind: str, what: str, name: str, choices) -> ConfigurationError:
    return ConfigurationError(f"Unknown {what} '{name}' for {kind} games", {"choices": sorted(choices)})


def resolve_field(game: Union[AlohaGame, PowerGame, LinearGame], name: str) -> VectorField:
    """Vector field named in a scenario."""
    if isinstance(game, LinearGame):
        if name not in ("linear", "selfish"):
            raise _unknown("linear", "dynamics", name, ["linear"])
        return variations.linear_field(game)
    if isinstance(game, PowerGame):
        if name not in ("selfish", "altruistic", "partial"):
            raise _unknown("power", "dynamics", name, ["selfish", "altruistic", "partial"])
        return powerctl.power_field(game, name)
    if name == "powercost":
        return variations.power_cost_field(game, approximate=True)
    if name == "powercost_exact":
        return variations.power_cost_field(game, approximate=False)
    choices = ["selfish", "altruistic", "partial", "blend_linear", "blend_tilde", "powercost", "powercost_exact"]
    if name not in choices:
        raise _unknown("aloha", "dynamics", name, choices)
    return aloha_field(game, name)


def resolve_lyapunov(
    game: Union[AlohaGame, PowerGame, LinearGame], name: str
) -> Callable[[np.ndarray], float]:
    """Lyapunov function named in a scenario."""
    if isinstance(game, AlohaGame):
        table = {
            "selfish": aloha.lyapunov_selfish,
            "altruistic": aloha.lyapunov_altruistic,
            "blend": aloha.lyapunov_blend,
            "powercost": variations.lyapunov_powercost,
        }
    elif isinstance(game, PowerGame):
        table = {
            "power_selfish": powerctl.lyapunov_power_selfish,
            "power_altruistic": powerctl.lyapunov_power_altruistic,
        }
    else:
        table = {}
    if name not in table:
        raise _unknown(game.kind, "Lyapunov function", name, table)
    function = table[name]
    return lambda q: function(game, q)
