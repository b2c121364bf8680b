"""Tests for scenario parsing and name resolution."""

import json
from pathlib import Path

import pytest

from game_lab.aloha import AlohaGame, lyapunov_selfish
from game_lab.powerctl import PowerGame
from game_lab.scenario import load_scenario, parse_scenario, resolve_field, resolve_lyapunov
from game_lab.utils import ConfigurationError
from game_lab.variations import LinearGame

SCENARIO_FILES = sorted((Path(__file__).parent.parent / "scenarios").glob("*.json"))


def _document(game: dict, **sections) -> str:
    return json.dumps({"game": game, **sections})


ALOHA = {"kind": "aloha", "players": [{"demand": "8/15"}, {"demand": "1/15"}]}


class TestParseScenario:
    """Validation of scenario documents."""

    def test_aloha_game(self):
        scenario = parse_scenario(_document(ALOHA, seed=3))
        assert isinstance(scenario.game, AlohaGame)
        assert scenario.game.demands[0] == pytest.approx(8 / 15, abs=1e-16)
        assert scenario.seed == 3
        assert scenario.simulate.dynamics == "selfish"

    def test_power_game(self):
        game = {"kind": "power", "channel": {"gains_db": [[-10, -23], [-23, -10]]}, "demands": [0.9, 0.9]}
        scenario = parse_scenario(_document(game))
        assert isinstance(scenario.game, PowerGame)
        assert scenario.game.modulation.n_bits == 1024

    def test_linear_game(self):
        scenario = parse_scenario(_document({"kind": "linear", "u": [3, 2]}))
        assert isinstance(scenario.game, LinearGame)
        assert scenario.game.alpha == 1.0

    def test_json_error_position(self):
        with pytest.raises(ConfigurationError) as excinfo:
            parse_scenario('{\n  "game": }', "broken.json")
        assert excinfo.value.details == {"line": 2, "column": 11}
        assert excinfo.value.message.startswith("broken.json:2:11:")

    def test_unknown_kind(self):
        with pytest.raises(ConfigurationError):
            parse_scenario(_document({"kind": "csma"}))

    def test_field_path_in_message(self):
        """Schema errors name the offending field."""
        with pytest.raises(ConfigurationError) as excinfo:
            parse_scenario(_document(ALOHA, simulate={"dt": -0.1}))
        locations = [error["loc"] for error in excinfo.value.details["errors"]]
        assert ["simulate", "dt"] in locations
        assert "simulate.dt" in excinfo.value.message

    def test_demand_out_of_range(self):
        with pytest.raises(ConfigurationError):
            parse_scenario(_document({"kind": "aloha", "players": [{"demand": 1.5}, {"demand": 0.1}]}))

    def test_both_gain_forms(self):
        channel = {"gains": [[0.1, 0.01], [0.01, 0.1]], "gains_db": [[-10, -20], [-20, -10]]}
        with pytest.raises(ConfigurationError):
            parse_scenario(_document({"kind": "power", "channel": channel, "demands": [0.9, 0.9]}))

    def test_basin_mode(self):
        with pytest.raises(ConfigurationError):
            parse_scenario(_document(ALOHA, basin={"mode": "sideways"}))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_scenario(tmp_path / "absent.json")

    @pytest.mark.parametrize("path", SCENARIO_FILES, ids=lambda p: p.name)
    def test_bundled_scenarios_load(self, path):
        scenario = load_scenario(path)
        assert scenario.game.kind in ("aloha", "power", "linear")


class TestResolution:
    """Dynamics and Lyapunov names."""

    def test_aloha_fields(self, two_nep_game):
        for name in ("selfish", "altruistic", "partial", "blend_linear", "blend_tilde"):
            assert resolve_field(two_nep_game, name).dimension == 2

    def test_power_cost_field(self, power_cost_game):
        assert resolve_field(power_cost_game, "powercost").name == "power-cost-approx"

    def test_unknown_field(self, two_nep_game, linear_game):
        with pytest.raises(ConfigurationError) as excinfo:
            resolve_field(two_nep_game, "greedy")
        assert "selfish" in excinfo.value.details["choices"]
        with pytest.raises(ConfigurationError):
            resolve_field(linear_game, "altruistic")

    def test_lyapunov(self, two_nep_game, low_nep):
        function = resolve_lyapunov(two_nep_game, "selfish")
        assert function(low_nep) == lyapunov_selfish(two_nep_game, low_nep)

    def test_unknown_lyapunov(self, linear_game, power_game):
        with pytest.raises(ConfigurationError):
            resolve_lyapunov(linear_game, "selfish")
        with pytest.raises(ConfigurationError):
            resolve_lyapunov(power_game, "selfish")
