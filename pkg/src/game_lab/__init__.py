"""game-lab: altruism games for slotted ALOHA and SINR power control."""

from .__about__ import __author__, __description__, __version__
from .aloha import AlohaGame, CostBasis, interior_neps, stability_criteria
from .config import config
from .dynamics import Classification, VectorField, aloha_field, classify, integrate, sweep_alpha
from .powerctl import ChannelModel, ModulationModel, ModulationScheme, PowerGame, power_nep
from .scenario import Scenario, load_scenario
from .utility import UtilityFamily, UtilitySpec
from .utils import (
    ConfigurationError,
    DomainError,
    GameLabException,
    NoSolutionError,
    NotAnEquilibriumError,
    UnsupportedError,
)
from .variations import LinearGame

__all__ = [
    "__author__",
    "__description__",
    "__version__",
    "AlohaGame",
    "ChannelModel",
    "Classification",
    "ConfigurationError",
    "CostBasis",
    "DomainError",
    "GameLabException",
    "LinearGame",
    "ModulationModel",
    "ModulationScheme",
    "NoSolutionError",
    "NotAnEquilibriumError",
    "PowerGame",
    "Scenario",
    "UnsupportedError",
    "UtilityFamily",
    "UtilitySpec",
    "VectorField",
    "aloha_field",
    "classify",
    "config",
    "integrate",
    "interior_neps",
    "load_scenario",
    "power_nep",
    "stability_criteria",
    "sweep_alpha",
]
