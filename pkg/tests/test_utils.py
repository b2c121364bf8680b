"""Tests for shared helpers and the exception hierarchy."""

import json

import numpy as np
import pytest

from game_lab.utils import (
    ConfigurationError,
    GameLabException,
    NotAnEquilibriumError,
    NoUniqueNEPError,
    PreconditionError,
    SingularInputError,
    as_state,
    format_json_response,
    parse_real,
)


class TestParseReal:
    def test_fraction(self):
        assert parse_real("1/15") == pytest.approx(1 / 15, abs=1e-17)

    def test_passthrough(self):
        assert parse_real(0.25) == 0.25

    @pytest.mark.parametrize("bad", ["abc", "1/0", ""])
    def test_rejects_garbage(self, bad):
        with pytest.raises(ValueError):
            parse_real(bad)


class TestJsonFormatting:
    def test_numpy_values(self):
        """Arrays, numpy scalars and complex numbers serialize."""
        text = format_json_response(
            {"a": np.array([1.0, 2.0]), "b": np.float64(0.1), "c": np.bool_(True), "d": complex(1, -2)}
        )
        data = json.loads(text)
        assert data == {"a": [1.0, 2.0], "b": 0.1, "c": True, "d": {"re": 1.0, "im": -2.0}}

    def test_full_precision(self):
        """Floats round-trip exactly."""
        value = 2.0 / 3.0
        assert json.loads(format_json_response({"x": value}))["x"] == value


class TestExceptions:
    def test_error_codes(self):
        assert ConfigurationError("x").error_code == "CONFIGURATION_ERROR"
        assert NotAnEquilibriumError("x").error_code == "NOT_AN_EQUILIBRIUM"
        assert NoUniqueNEPError("x").error_code == "NO_UNIQUE_NEP"

    def test_hierarchy(self):
        """Specific failures remain catchable by their broader kind."""
        assert issubclass(NotAnEquilibriumError, PreconditionError)
        assert issubclass(NoUniqueNEPError, SingularInputError)
        assert issubclass(SingularInputError, GameLabException)

    def test_details_default(self):
        error = PreconditionError("bad box")
        assert error.message == "bad box"
        assert error.details == {}


class TestAsState:
    def test_dimension_check(self):
        with pytest.raises(GameLabException):
            as_state([0.1, 0.2, 0.3], 2)

    def test_copy(self):
        source = np.array([0.1, 0.2])
        state = as_state(source)
        state[0] = 0.9
        assert source[0] == 0.1
