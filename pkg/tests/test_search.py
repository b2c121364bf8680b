"""Tests for the bracketed scalar maximizer."""

import numpy as np
import pytest

from game_lab.search import coarse_bracket, golden_section_max, maximize_scalar


class TestGoldenSection:
    """Golden-section search."""

    def test_quadratic_peak(self):
        """The maximizer of -(x - 0.3)^2 is found to the requested width."""
        x, fval, debug = golden_section_max(lambda v: -((v - 0.3) ** 2), 0.0, 1.0, xtol=1e-10)
        assert x == pytest.approx(0.3, abs=1e-9)
        assert fval == pytest.approx(0.0, abs=1e-18)
        assert debug["x_bracket_length"] <= 1e-10 * 1.0001

    def test_degenerate_bracket(self):
        x, _, debug = golden_section_max(lambda v: v, 0.5, 0.5)
        assert x == 0.5
        assert debug["n_iter"] == 0


class TestMaximizeScalar:
    """Grid bracketing followed by refinement."""

    def test_bracket_contains_grid_best(self):
        a, b, best = coarse_bracket(lambda v: -np.abs(v - 0.62), 0.0, 1.0, 11)
        assert a <= best <= b
        assert best == pytest.approx(0.6)

    def test_interior_with_slope(self):
        """An analytic slope is solved with a root finder."""
        x = maximize_scalar(lambda v: np.sin(np.pi * v), 0.0, 1.0, slope=lambda v: np.pi * np.cos(np.pi * v))
        assert x == pytest.approx(0.5, abs=1e-12)

    def test_interior_without_slope(self):
        x = maximize_scalar(lambda v: -((v - 0.271) ** 2), 0.0, 1.0, xtol=1e-11)
        assert x == pytest.approx(0.271, abs=1e-9)

    def test_monotone_increasing_hits_upper_end(self):
        """A nondecreasing objective is maximized at the upper bound."""
        assert maximize_scalar(lambda v: v, 0.0, 2.0, slope=lambda v: 1.0) == 2.0
        assert maximize_scalar(lambda v: v, 0.0, 2.0) == 2.0

    def test_monotone_decreasing_hits_lower_end(self):
        assert maximize_scalar(lambda v: -v, 0.1, 0.9, slope=lambda v: -1.0) == 0.1
        assert maximize_scalar(lambda v: -v, 0.1, 0.9) == 0.1

    def test_non_finite_values_ignored(self):
        """Non-finite objective values never win the grid pass."""

        def objective(v):
            v = np.asarray(v, dtype=float)
            return np.where(v > 0.8, np.nan, -((v - 0.4) ** 2))

        assert maximize_scalar(objective, 0.0, 1.0) == pytest.approx(0.4, abs=1e-8)
