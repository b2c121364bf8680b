"""Pytest configuration and fixtures for game-lab tests."""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from game_lab.aloha import AlohaGame, CostBasis  # noqa: E402
from game_lab.powerctl import ChannelModel, ModulationModel, PowerGame  # noqa: E402
from game_lab.utility import UtilitySpec  # noqa: E402
from game_lab.variations import LinearGame  # noqa: E402

SCENARIO_DIR = Path(__file__).parent.parent / "scenarios"


@pytest.fixture
def two_nep_game():
    """Arctan game with demands (8/15, 1/15) and interior NEPs (2/3, 1/5), (4/5, 1/3)."""
    return AlohaGame.from_demands([8 / 15, 1 / 15])


@pytest.fixture
def low_nep():
    return np.array([2 / 3, 1 / 5])


@pytest.fixture
def high_nep():
    return np.array([4 / 5, 1 / 3])


@pytest.fixture
def power_cost_game():
    """arctan_scaled players with u = (400, 400), beta = (50, 100); demands (0.4, 0.2)."""
    return AlohaGame(
        players=[UtilitySpec.arctan_scaled(400.0, 50.0), UtilitySpec.arctan_scaled(400.0, 100.0)],
        cost_basis=CostBasis.POWER,
    )


@pytest.fixture
def power_game():
    """Two flows: N = 1, h_ii = 0.1, cross gain 0.005, demands (0.97, 0.98), n = 1024."""
    return PowerGame(
        channel=ChannelModel.symmetric(2, 0.1, 0.005, noise=1.0),
        modulation=ModulationModel(n_bits=1024),
        demands=[0.97, 0.98],
    )


@pytest.fixture
def linear_game():
    return LinearGame(u=(3.0, 2.0), price=1.0, alpha=0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def scenario_dir():
    return SCENARIO_DIR
