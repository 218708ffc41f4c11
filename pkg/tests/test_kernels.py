"""Kernels: stored moments against quadrature, closed-form fractional
integrals, and the scaled-evaluation contract."""
from __future__ import annotations

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.integrate import quad

from stabledrift import (
    ConfigurationError,
    ParameterError,
    builtin_kernel,
    kernel_names,
    lambda_fractional_integral,
    lambda_weight_changes_sign,
    nw_fractional_integral,
    scaled_eval,
)

ALL_NAMES = ("epanechnikov", "triangular", "uniform_sym", "uniform_right")


@pytest.mark.parametrize("name", ALL_NAMES)
def test_stored_moments_match_quadrature(name):
    k = builtin_kernel(name)
    lo, hi = k.support
    for power, stored in ((0, 1.0), (1, k.k1), (2, k.k2), (3, k.k3)):
        value, _ = quad(lambda u, p=power: k.evaluate(u) * u ** p, lo, hi)
        assert value == pytest.approx(stored, abs=1e-10)
    l2, _ = quad(lambda u: k.evaluate(u) ** 2, lo, hi)
    assert l2 == pytest.approx(k.l2, abs=1e-10)


@pytest.mark.parametrize("name", ALL_NAMES)
def test_support_and_peak(name):
    k = builtin_kernel(name)
    lo, hi = k.support
    assert np.all(np.asarray(k.evaluate(np.array([lo - 0.01, hi + 0.01, lo - 5.0]))) == 0.0)
    grid = np.linspace(lo, hi, 20_001)
    assert np.max(k.evaluate(grid)) == pytest.approx(k.peak, rel=1e-8)
    assert np.min(k.evaluate(grid)) >= 0.0


def test_symmetry_flags():
    for name in ALL_NAMES:
        k = builtin_kernel(name)
        assert k.symmetric == (k.k1 == 0.0 and k.k3 == 0.0)
    assert not builtin_kernel("uniform_right").symmetric


def test_exact_moment_values():
    epan = builtin_kernel("epanechnikov")
    assert (epan.k1, epan.k2, epan.l2, epan.peak) == (0.0, 0.2, 0.6, 0.75)
    tri = builtin_kernel("triangular")
    assert (tri.k1, tri.k2, tri.l2) == (0.0, pytest.approx(1 / 6), pytest.approx(2 / 3))
    usym = builtin_kernel("uniform_sym")
    assert (usym.k2, usym.l2, usym.peak) == (pytest.approx(1 / 3), 0.5, 0.5)
    uright = builtin_kernel("uniform_right")
    assert (uright.k1, uright.k2, uright.k3, uright.l2) == (0.5, pytest.approx(1 / 3), 0.25, 1.0)
    assert uright.support == (0.0, 1.0)


class TestScaledEval:
    def test_matches_direct_scaling(self):
        k = builtin_kernel("epanechnikov")
        v = np.linspace(-2.5, 2.5, 41)
        assert_allclose(scaled_eval(k, 2.0, v), k.evaluate(v / 2.0) / 2.0, rtol=1e-15)

    def test_integrates_to_one(self):
        k = builtin_kernel("triangular")
        value, _ = quad(lambda v: scaled_eval(k, 0.7, v), -0.7, 0.7, points=[0.0])
        assert value == pytest.approx(1.0, abs=1e-10)

    def test_bandwidth_validation(self):
        k = builtin_kernel("epanechnikov")
        with pytest.raises(ParameterError):
            scaled_eval(k, 0.0, np.array([0.1]))
        with pytest.raises(ParameterError):
            scaled_eval(k, -1.0, np.array([0.1]))


class TestFractionalIntegrals:
    def test_lambda_uniform_right_alpha_one(self):
        # piecewise-linear integrand with a sign change at u = 2/3:
        # int_0^1 |1/3 - u/2| du = 5/36
        k = builtin_kernel("uniform_right")
        assert lambda_fractional_integral(k, 1.0) == pytest.approx(5 / 36, rel=1e-10)

    def test_lambda_epanechnikov_alpha_two(self):
        # at alpha=2 and K1=0 the integrand is K2^2 K(u)^2
        k = builtin_kernel("epanechnikov")
        assert lambda_fractional_integral(k, 2.0) == pytest.approx(3 / 125, rel=1e-10)

    def test_lambda_uniform_sym_closed_form(self):
        k = builtin_kernel("uniform_sym")
        for alpha in (1.2, 1.5, 2.0):
            assert lambda_fractional_integral(k, alpha) == pytest.approx(
                2.0 * (1 / 6) ** alpha, rel=1e-9
            )

    @pytest.mark.parametrize("name,alpha", [("epanechnikov", 1.5), ("triangular", 1.3), ("uniform_sym", 1.7)])
    def test_symmetric_identity(self, name, alpha):
        # K1 = 0 collapses the weight to K2 * K(u), so the two integrals
        # differ by the factor K2^alpha
        k = builtin_kernel(name)
        assert lambda_fractional_integral(k, alpha) == pytest.approx(
            k.k2 ** alpha * nw_fractional_integral(k, alpha), rel=1e-9
        )

    def test_nw_closed_forms(self):
        epan = builtin_kernel("epanechnikov")
        assert nw_fractional_integral(epan, 2.0) == pytest.approx(0.6, rel=1e-10)
        # int (1 - u^2)^{3/2} du over [-1, 1] equals 3 pi / 8
        assert nw_fractional_integral(epan, 1.5) == pytest.approx(
            0.75 ** 1.5 * 3 * math.pi / 8, rel=1e-9
        )
        assert nw_fractional_integral(builtin_kernel("uniform_sym"), 1.5) == pytest.approx(
            2.0 ** -0.5, rel=1e-10
        )
        assert nw_fractional_integral(builtin_kernel("triangular"), 2.0) == pytest.approx(
            2 / 3, rel=1e-10
        )
        for alpha in (1.1, 1.5, 2.0):
            assert nw_fractional_integral(builtin_kernel("uniform_right"), alpha) == pytest.approx(
                1.0, rel=1e-10
            )

    def test_alpha_domain(self):
        k = builtin_kernel("epanechnikov")
        for fn in (lambda_fractional_integral, nw_fractional_integral):
            with pytest.raises(ParameterError):
                fn(k, 0.9)
            with pytest.raises(ParameterError):
                fn(k, 2.2)

    def test_sign_change_flag(self):
        assert lambda_weight_changes_sign(builtin_kernel("uniform_right"))
        for name in ("epanechnikov", "triangular", "uniform_sym"):
            assert not lambda_weight_changes_sign(builtin_kernel(name))


def test_registry():
    names = kernel_names()
    assert set(names) == set(ALL_NAMES)
    with pytest.raises(ConfigurationError):
        builtin_kernel("gaussian")
    k = builtin_kernel("epanechnikov")
    assert k.name == "epanechnikov"
