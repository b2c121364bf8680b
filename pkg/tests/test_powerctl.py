"""Tests for the SINR power-control game."""

import numpy as np
import pytest
from pydantic import ValidationError
from scipy.special import erfc

from game_lab.powerctl import (
    EXACT_SCHEMES,
    ChannelModel,
    ModulationModel,
    ModulationScheme,
    PowerGame,
    altruistic_power_response,
    bit_error,
    db_to_linear,
    frame_success,
    gamma_inverse,
    lyapunov_power_altruistic,
    lyapunov_power_altruistic_gradient,
    lyapunov_power_altruistic_hessian,
    lyapunov_power_selfish,
    lyapunov_power_selfish_gradient,
    lyapunov_power_selfish_hessian,
    power_cap,
    power_cost_alpha_sweep,
    power_nep,
    power_partial_response,
    selfish_power_response,
    sinr,
    stability_products,
    upsilon,
)
from game_lab.aloha import CostBasis
from game_lab.utils import DomainError, NoSolutionError, NoUniqueNEPError, UnsupportedError


def _model(scheme: ModulationScheme, n_bits: int = 1024) -> ModulationModel:
    kappa = 0.68 if scheme is ModulationScheme.GMSK else None
    return ModulationModel(scheme=scheme, n_bits=n_bits, kappa=kappa)


def _central_gradient(function, q, h=1e-3):
    q = np.asarray(q, dtype=float)
    steps = np.eye(len(q)) * h
    return np.array([(function(q + d) - function(q - d)) / (2 * h) for d in steps])


class TestChannelModel:
    """Gain matrices, dB input and processing gain."""

    def test_db_to_linear(self):
        assert db_to_linear(10.0) == pytest.approx(10.0)
        assert db_to_linear(-3.0) == pytest.approx(0.50118723, rel=1e-8)

    def test_gains_from_db(self):
        channel = ChannelModel(gains_db=[[-10.0, -23.0], [-23.0, -10.0]])
        assert channel.matrix[0, 0] == pytest.approx(0.1)
        assert channel.matrix[0, 1] == pytest.approx(db_to_linear(-23.0))

    def test_exactly_one_gain_form(self):
        with pytest.raises(ValidationError):
            ChannelModel()
        with pytest.raises(ValidationError):
            ChannelModel(gains=[[1.0]], gains_db=[[0.0]])

    def test_rejects_negative_gains(self):
        with pytest.raises(ValidationError):
            ChannelModel(gains=[[0.1, -0.01], [0.01, 0.1]])

    def test_processing_gain_divides_cross_gains(self):
        channel = ChannelModel(gains=[[0.1, 0.02], [0.02, 0.1]], processing_gain_db=10.0)
        np.testing.assert_allclose(channel.matrix, [[0.1, 0.002], [0.002, 0.1]])

    def test_sinr(self, power_game):
        """SINR_1 = q_1 h_11 / (N + h_21 q_2)."""
        assert sinr(power_game.channel, [200.0, 100.0], 0) == pytest.approx(20.0 / 1.5)

    def test_sinr_rejects_negative_power(self, power_game):
        with pytest.raises(DomainError):
            sinr(power_game.channel, [-1.0, 1.0], 0)


class TestModulation:
    """Bit-error models and the frame-success inverse."""

    def test_qpsk_bit_error(self):
        assert bit_error(_model(ModulationScheme.QPSK), 1.0) == pytest.approx(0.5 * erfc(1.0), rel=1e-15)

    def test_large_n_has_no_bit_model(self):
        with pytest.raises(UnsupportedError):
            bit_error(ModulationModel(), 1.0)

    def test_gmsk_needs_kappa(self):
        with pytest.raises(ValidationError):
            ModulationModel(scheme=ModulationScheme.GMSK)
        with pytest.raises(ValidationError):
            ModulationModel(scheme=ModulationScheme.QPSK, kappa=0.68)

    def test_frame_success_increases(self):
        """Gamma is increasing on sampled SINR values."""
        for scheme in list(EXACT_SCHEMES) + [ModulationScheme.LARGE_N_APPROX]:
            values = frame_success(_model(scheme), np.linspace(0.0, 30.0, 301))
            assert np.all(np.diff(values) >= 0.0)

    @pytest.mark.parametrize("scheme", list(EXACT_SCHEMES) + [ModulationScheme.LARGE_N_APPROX])
    @pytest.mark.parametrize("y", [0.5, 0.9, 0.99])
    def test_inverse_round_trip(self, scheme, y):
        mod = _model(scheme)
        assert frame_success(mod, gamma_inverse(mod, y)) == pytest.approx(y, abs=1e-10)

    def test_closed_form_matches_bisection(self):
        mod = ModulationModel()
        closed = gamma_inverse(mod, 0.97, method="closed")
        assert closed == pytest.approx(np.log(1024 / -np.log(0.97)), rel=1e-15)
        assert gamma_inverse(mod, 0.97, method="bisect") == pytest.approx(closed, abs=1e-9)

    def test_no_closed_form_for_exact_schemes(self):
        with pytest.raises(UnsupportedError):
            gamma_inverse(_model(ModulationScheme.QPSK), 0.9, method="closed")

    @pytest.mark.parametrize("y", [0.0, 1.0, -0.2])
    def test_inverse_domain(self, y):
        with pytest.raises(DomainError):
            gamma_inverse(ModulationModel(), y)

    def test_target_below_floor(self):
        """With one bit, Gamma(0) = 1/2 for QPSK; lower targets are unreachable."""
        with pytest.raises(NoSolutionError):
            gamma_inverse(_model(ModulationScheme.QPSK, n_bits=1), 0.2)


class TestEquilibrium:
    """The selfish power equilibrium and its responses."""

    def test_upsilon(self, power_game):
        np.testing.assert_allclose(upsilon(power_game), [104.228, 108.334], atol=1e-3)

    def test_nep(self, power_game):
        nep = power_nep(power_game)
        assert nep.feasible
        np.testing.assert_allclose(nep.q, [223.89, 229.61], atol=0.05)
        np.testing.assert_allclose(nep.sinr, [10.4229, 10.8334], atol=1e-3)

    def test_nep_is_selfish_fixed_point(self, power_game):
        q = power_nep(power_game).q
        np.testing.assert_allclose(selfish_power_response(power_game, q), q, rtol=1e-12)

    def test_nep_is_altruistic_fixed_point(self, power_game):
        """Each flow lowers the other's SINR to exactly its target at the equilibrium."""
        q = power_nep(power_game).q
        np.testing.assert_allclose(altruistic_power_response(power_game, q), q, rtol=1e-10)

    def test_singular_system(self, power_game, mocker):
        mocker.patch("game_lab.powerctl.psi_matrix", return_value=np.array([[0.0, 2.0], [0.5, 0.0]]))
        with pytest.raises(NoUniqueNEPError):
            power_nep(power_game)

    def test_infeasible(self):
        game = PowerGame(channel=ChannelModel.symmetric(2, 0.1, 0.2), demands=[0.97, 0.98])
        nep = power_nep(game)
        assert not nep.feasible
        assert np.all(np.isnan(nep.sinr))
        assert nep.to_dict()["feasible"] is False

    def test_default_cap(self, power_game):
        assert power_cap(power_game) == pytest.approx(10.0 * np.linalg.norm(power_nep(power_game).q))
        assert power_cap(power_game.model_copy(update={"q_cap": 500.0})) == 500.0


class TestPowerStability:
    """Quadratic Lyapunov functions and the stability product."""

    def test_product(self, power_game):
        products = stability_products(power_game)
        assert products.p == pytest.approx(0.28229, abs=1e-5)
        assert products.selfish_stable
        assert not products.altruistic_stable
        assert not products.marginal

    def test_selfish_hessian_positive_definite(self, power_game):
        assert np.all(np.linalg.eigvalsh(lyapunov_power_selfish_hessian(power_game)) > 0.0)

    def test_altruistic_hessian_indefinite(self, power_game):
        """det = (p - 1) / p^2 < 0 when p < 1."""
        hessian = lyapunov_power_altruistic_hessian(power_game)
        eigenvalues = np.linalg.eigvalsh(hessian)
        assert eigenvalues[0] < 0.0 < eigenvalues[1]
        p = stability_products(power_game).p
        assert np.linalg.det(hessian) == pytest.approx((p - 1.0) / p**2, rel=1e-10)

    def test_selfish_gradient(self, power_game):
        q = np.array([180.0, 260.0])
        numeric = _central_gradient(lambda x: lyapunov_power_selfish(power_game, x), q)
        np.testing.assert_allclose(lyapunov_power_selfish_gradient(power_game, q), numeric, rtol=1e-6)

    def test_altruistic_gradient(self, power_game):
        q = np.array([180.0, 260.0])
        numeric = _central_gradient(lambda x: lyapunov_power_altruistic(power_game, x), q)
        np.testing.assert_allclose(lyapunov_power_altruistic_gradient(power_game, q), numeric, rtol=1e-6)

    def test_gradients_vanish_at_nep(self, power_game):
        q = power_nep(power_game).q
        np.testing.assert_allclose(lyapunov_power_selfish_gradient(power_game, q), 0.0, atol=1e-9)
        np.testing.assert_allclose(lyapunov_power_altruistic_gradient(power_game, q), 0.0, atol=1e-9)


class TestPowerCostSweep:
    """Power-priced partial altruism across alpha."""

    def test_rejects_three_flows(self):
        game = PowerGame(channel=ChannelModel.symmetric(3, 0.1, 0.005), demands=[0.9, 0.9, 0.9])
        with pytest.raises(UnsupportedError):
            power_cost_alpha_sweep(game, [1.0])

    def test_rejects_throughput_basis(self, power_game):
        """The sweep charges transmit power, so the game must be power-priced."""
        assert power_game.cost_basis is CostBasis.THROUGHPUT
        with pytest.raises(UnsupportedError) as excinfo:
            power_cost_alpha_sweep(power_game, [1.0])
        assert excinfo.value.details == {"cost_basis": "throughput"}

    def test_throughput_basis_selfish_reply_meets_demand(self, power_game):
        """Charging M Gamma, the selfish reply at the NEP is the NEP power itself."""
        nep = power_nep(power_game)
        for i in range(2):
            assert power_partial_response(power_game, i, nep.q) == pytest.approx(nep.q[i], rel=1e-4)

    @pytest.mark.slow
    def test_altruism_collapses_power(self, power_game):
        """Near-pure altruism drives the equilibrium powers toward zero."""
        game = power_game.model_copy(update={"cost_basis": CostBasis.POWER})
        table = power_cost_alpha_sweep(game, [1.0, 0.01])
        assert list(table.columns) == ["alpha", "q_0", "q_1", "norm", "converged", "iterations", "residual", "error"]
        selfish, altruistic = table.iloc[0], table.iloc[1]
        assert selfish["alpha"] == 1.0
        assert altruistic["norm"] < 0.01 * selfish["norm"]
