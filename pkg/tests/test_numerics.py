"""Quadrature, Laplace inversion, Mittag-Leffler and KS kernels."""
from __future__ import annotations

import math

import mpmath as mp
import numpy as np
import pytest
from scipy import special

from subordkit.errors import ValidationFailed
from subordkit.numerics import (
    InversionConfig,
    QuadratureConfig,
    gaver_stehfest,
    integrate_0_inf,
    kolmogorov_sf,
    ks_statistic,
    laplace_invert,
    mittag_leffler,
    mittag_leffler_mp,
    talbot,
)
from subordkit.subordinator import stable


def test_integrate_exponential_and_gamma_moments():
    v, e = integrate_0_inf(lambda x: math.exp(-x))
    assert abs(v - 1.0) < 1e-12 and abs(v - 1.0) <= max(e, 1e-12)
    v, _ = integrate_0_inf(lambda x: x * math.exp(-x))
    assert abs(v - 1.0) < 1e-12


def test_integrate_b1_integrand_against_dense_riemann_oracle():
    def f(x):
        return (math.exp(-x) - 1 + x) * math.exp(-2 * x) / (-math.expm1(-x) * x) if x > 0 else 0.0

    v, _ = integrate_0_inf(f)
    # midpoint rule on a fine grid, tail beyond 60 is < e^-100
    h = 1e-4
    xs = np.arange(h / 2, 60.0, h)
    fx = (np.exp(-xs) - 1 + xs) * np.exp(-2 * xs) / (-np.expm1(-xs) * xs)
    assert v > 0 and abs(v - fx.sum() * h) < 1e-8


def test_quadrature_config_validation():
    with pytest.raises(ValueError):
        QuadratureConfig(abs_tol=0.0)
    with pytest.raises(ValueError):
        InversionConfig(nodes=9)
    with pytest.raises(ValueError):
        InversionConfig(nodes=6)


@pytest.mark.parametrize(
    "F, f",
    [
        (lambda s: 1 / (s + 1), lambda x: math.exp(-x)),
        (lambda s: 1 / s - 1 / (s + 1), lambda x: 1 - math.exp(-x)),
        (lambda s: 1 / (s + 1) ** 2, lambda x: x * math.exp(-x)),
        (lambda s: 1 / (s * s + 1), math.sin),
    ],
)
def test_laplace_invert_known_pairs(F, f):
    for x in (0.5, 1.0, 3.0):
        assert abs(laplace_invert(F, x) - f(x)) < 1e-9


def test_inversion_of_stable_log_derivative_is_constant():
    spec = stable(0.35)
    xs = np.geomspace(0.1, 10, 9)
    vals = laplace_invert(spec._log_derivative, xs)
    assert np.max(np.abs(vals - 0.35)) < 1e-9


def test_gaver_stehfest_cross_check_against_talbot():
    F = lambda s: 1 / s - 1 / (s + 1)  # noqa: E731
    for x in (0.5, 1.0, 2.0):
        tb = float(talbot(F, np.asarray(x)))
        # degree 16 is accurate to a few 1e-6 here; degree 24 to ~1e-9
        assert abs(gaver_stehfest(lambda s: 1 / s - 1 / (s + 1), x, nodes=16) - tb) < 5e-6
        assert abs(gaver_stehfest(lambda s: 1 / s - 1 / (s + 1), x, nodes=24) - tb) < 1e-9
    cfg = InversionConfig(method="gaver_stehfest", nodes=16)
    assert abs(laplace_invert(F, 1.0, cfg, F_mp=lambda s: 1 / s - 1 / (s + 1)) - (1 - math.exp(-1))) < 1e-6


def test_inversion_round_trip_residual():
    from subordkit.numerics import forward_residual

    F = lambda s: 1 / (s + 2) + 1 / (s + 0.5) ** 2  # noqa: E731
    f = lambda x: laplace_invert(F, x)  # noqa: E731
    assert forward_residual(F, f, [1.0, 2.0, 5.0]) < 1e-7


def test_inversion_flags_nonsmooth_target():
    # F = e^{-s}/s inverts to a unit step at 1: Talbot cannot resolve the jump
    with pytest.raises(ValidationFailed):
        laplace_invert(lambda s: np.exp(-s) / s, 1.0)


def test_mittag_leffler_oracles():
    assert abs(mittag_leffler(1.0, 1.0) - math.e) < 1e-12
    assert mittag_leffler(0.3, 0.0) == 1.0
    ref = math.e * special.erfc(1.0)
    assert abs(mittag_leffler(0.5, -1.0) - ref) < 1e-12
    assert abs(mittag_leffler(0.5, -1.0) - 0.42758358) < 1e-8


def test_mittag_leffler_half_equals_erfcx_on_wide_range():
    z = np.linspace(-50, 3, 54)
    got = mittag_leffler(0.5, z)
    ref = special.erfcx(-z)
    assert np.max(np.abs(got - ref) / np.abs(ref)) < 1e-10


def test_mittag_leffler_two_routes_agree():
    # the series route costs ~exp(|z|^(1/alpha)) guard digits, so the window shrinks with alpha
    for alpha, lo in ((0.25, -3.0), (0.5, -10.0), (0.8, -10.0)):
        for z in np.linspace(lo, -2, 9):
            a = mittag_leffler(alpha, z, method="series")
            b = mittag_leffler(alpha, z, method="integral")
            assert abs(a - b) < 1e-9


def test_mittag_leffler_mp_series():
    with mp.workdps(40):
        ref = mp.e**4 * mp.erfc(2)  # E_{1/2}(-z) = exp(z^2) erfc(z)
    assert abs(float(mittag_leffler_mp(0.5, -2.0)) - float(ref)) < 1e-15


def test_mittag_leffler_domain():
    with pytest.raises(ValueError):
        mittag_leffler(1.5, -1.0)
    with pytest.raises(ValueError):
        mittag_leffler(0.5, -1.0, method="bogus")


def test_kolmogorov_sf_matches_scipy():
    for t in (0.3, 0.7, 1.0, 1.36, 2.0):
        assert abs(kolmogorov_sf(t) - special.kolmogorov(t)) < 1e-10


def test_ks_statistic_examples():
    n = 1000
    q = (np.arange(1, n + 1) - 0.5) / n
    d, _ = ks_statistic(q, lambda x: np.clip(x, 0, 1))
    assert abs(d - 0.5 / n) < 1e-15
    d, p = ks_statistic(np.full(100, 0.5), lambda x: np.clip(x, 0, 1))
    assert d >= 0.5 and p < 1e-6
    rng = np.random.Generator(np.random.Philox(key=[2024, 0]))
    d, p = ks_statistic(rng.random(100_000), lambda x: np.clip(x, 0, 1))
    assert p > 0.01
    with pytest.raises(ValueError):
        ks_statistic([], lambda x: x)


def test_two_sample_ks():
    rng = np.random.Generator(np.random.Philox(key=[7, 1]))
    a, b = rng.random(5000), rng.random(4000)
    _, p = ks_statistic(a, b)
    assert p > 0.01
    _, p = ks_statistic(a, b + 0.2)
    assert p < 1e-6
