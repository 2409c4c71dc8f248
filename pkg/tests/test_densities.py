import numpy as np
import pytest
from scipy import stats
from scipy.integrate import quad

import transdens as td
from transdens.densities import TransitionDensityOracle, bessel_i
from transdens.errors import DomainError, EvaluationError, ParameterError

# frozen with a 50-term ascending series at 50 decimal digits (mpmath)
I2_AT_1 = 0.13574766976703828
I_HALF = {0.5: 0.5879930867904163, 2.0: 2.046236863089055, 10.0: 2778.784603874571}


def _oracle(model, t=1.0):
    return TransitionDensityOracle(model, td.default_params(model), t)


class TestBessel:
    def test_series_leading_terms(self):
        assert bessel_i(0.0, 0.0) == 1.0
        assert bessel_i(2.0, 0.0) == 0.0

    def test_frozen_series_value(self):
        assert bessel_i(2.0, 1.0) == pytest.approx(I2_AT_1, rel=1e-13)

    def test_half_integer_identity(self):
        for x, target in I_HALF.items():
            assert bessel_i(0.5, x) == pytest.approx(target, rel=1e-12)
        dense = np.linspace(0.3, 45.0, 97)
        identity = np.sqrt(2.0 / (np.pi * dense)) * np.sinh(dense)
        np.testing.assert_allclose(bessel_i(0.5, dense), identity, rtol=1e-10)

    def test_relative_error_against_extended_precision(self):
        mp = pytest.importorskip("mpmath")
        mp.mp.dps = 40
        xs = np.concatenate([np.linspace(0.01, 14.99, 23), np.linspace(15.0, 50.0, 23)])
        for order in (0.0, 0.5, 2.0, 5.0):
            ours = bessel_i(order, xs)
            ref = np.array([float(mp.besseli(order, float(x))) for x in xs])
            np.testing.assert_allclose(ours, ref, rtol=1e-10)

    def test_errors(self):
        with pytest.raises(ParameterError):
            bessel_i(-1.0, 1.0)
        with pytest.raises(ParameterError):
            bessel_i(1.0, -0.5)
        with pytest.raises(EvaluationError):
            bessel_i(0.0, 800.0)


class TestGaussianModel:
    def test_point_value(self):
        # sqrt(1/(pi*(1-e^-2))) frozen in extended precision
        oracle = _oracle("ou")
        assert oracle.density(0.0, 0.0) == pytest.approx(0.6067379988373828, rel=1e-12)

    def test_matches_quadrature_of_gaussian_kernel(self):
        oracle = _oracle("ou")
        var = oracle.conditional_var
        xs = np.linspace(-2, 2, 7)
        ys = np.linspace(-2, 2, 7)
        for x in xs:
            mean = x * np.exp(-1.0)
            ref = stats.norm.pdf(ys, loc=mean, scale=np.sqrt(var))
            np.testing.assert_allclose(oracle.density(x, ys), ref, rtol=1e-12)

    def test_normalization(self):
        oracle = _oracle("ou")
        for x in np.linspace(-2.5, 2.5, 10):
            total, _ = quad(lambda y: oracle.density(x, y), -np.inf, np.inf)
            assert abs(total - 1.0) < 1e-8

    def test_chapman_kolmogorov(self):
        params = td.default_params("ou")
        half = TransitionDensityOracle("ou", params, 0.5)
        full = TransitionDensityOracle("ou", params, 1.0)
        x, y = 0.3, -0.2
        conv, _ = quad(lambda z: half.density(x, z) * half.density(z, y), -12, 12, limit=200)
        assert abs(conv - full.density(x, y)) < 1e-6


class TestTanhModel:
    def test_change_of_variable(self):
        oracle = _oracle("tanh_ou")
        gauss = TransitionDensityOracle("ou", td.OuParams(4.0, 1.0, 1), 1.0)
        x, y = 0.2, -0.5
        ref = gauss.density(np.arctanh(x), np.arctanh(y)) / (1 - y**2)
        assert oracle.density(x, y) == pytest.approx(ref, rel=1e-12)

    def test_normalization(self):
        oracle = _oracle("tanh_ou")
        for x in np.linspace(-0.9, 0.9, 10):
            total, _ = quad(lambda y: oracle.density(x, y), -1 + 1e-9, 1 - 1e-9, limit=300)
            assert abs(total - 1.0) < 1e-6

    def test_domain_and_clamp(self):
        oracle = _oracle("tanh_ou")
        with pytest.raises(DomainError):
            oracle.density(1.0, 0.0)
        with pytest.raises(DomainError):
            oracle.density(0.0, np.array([0.0, 1.5]))
        edge = oracle.density(0.0, 1 - 1e-9)  # clamped, finite
        assert np.isfinite(edge)


class TestSquareRootModel:
    def test_normalization(self):
        oracle = _oracle("cir")
        for x in (0.5, 1.5, 3.0):
            total, _ = quad(lambda y: oracle.density(x, y), 0, np.inf, limit=300)
            assert abs(total - 1.0) < 1e-6

    def test_noncentral_chi_square_reconstruction(self):
        oracle = _oracle("cir")
        p = oracle.params
        sig2 = p.gamma**2 * (1 - np.exp(-p.r)) / (4 * p.r)
        ys = np.linspace(0.05, 8.0, 160)
        for x in (0.5, 1.5, 3.0):
            ref = stats.ncx2.pdf(ys / sig2, df=p.d, nc=x * np.exp(-p.r) / sig2) / sig2
            np.testing.assert_allclose(oracle.density(x, ys), ref, rtol=1e-10, atol=1e-13)

    def test_domain(self):
        oracle = _oracle("cir")
        with pytest.raises(DomainError):
            oracle.density(-0.1, 1.0)
        with pytest.raises(DomainError):
            oracle.density(1.0, np.array([0.5, -0.5]))


def test_true_transition_density_delegates():
    oracle = _oracle("ou")
    assert td.true_transition_density(oracle, 0.1, 0.2) == oracle.density(0.1, 0.2)


def test_grid_shape():
    oracle = _oracle("ou")
    grid = oracle.grid(np.linspace(-1, 1, 4), np.linspace(-1, 1, 6))
    assert grid.shape == (4, 6)
    assert (grid >= 0).all()
