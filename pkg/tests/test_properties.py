"""Property-based checks of the structural invariants."""
from __future__ import annotations

import math

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from subordkit.config import dump_spec, parse_text
from subordkit.gen_gamma import GenGammaEvaluator, moment_I, moment_I_integer
from subordkit.harmonic import hpm_density, undershoot_laplace_G, undershoot_laplace_U
from subordkit.levy import ExponentialJumps, GammaJumps, StableJumps
from subordkit.subordinator import SubordinatorSpec, conjugate, kill, stable_timechange, tilt

pos = st.floats(min_value=0.05, max_value=5.0, allow_nan=False)
nonneg = st.one_of(st.just(0.0), pos)
index = st.floats(min_value=0.1, max_value=0.9)

SETTINGS = settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@st.composite
def specs(draw):
    kind = draw(st.sampled_from(["drift", "exponential", "gamma", "stable", "tempered"]))
    q, a = draw(nonneg), draw(nonneg)
    if kind == "drift":
        return SubordinatorSpec(q=q, a=draw(pos))
    if kind == "exponential":
        levy = ExponentialJumps(rate=draw(pos), mass=draw(pos))
    elif kind == "gamma":
        levy = GammaJumps(c=draw(pos), beta=draw(st.floats(0.2, 2.0)), rate=draw(pos))
    elif kind == "stable":
        levy = StableJumps(index=draw(index), scale=draw(pos))
    else:
        levy = StableJumps(index=draw(index), scale=draw(pos), tempering=draw(pos))
    return SubordinatorSpec(q=q, a=a, levy=levy)


GRID = np.geomspace(1e-2, 1e2, 40)


@SETTINGS
@given(specs())
def test_phi_bernstein_shape(spec):
    v = spec.phi(GRID)
    assert spec.phi(0.0) == spec.kill_rate
    assert np.all(np.diff(v) >= -1e-12 * v[1:])
    slopes = np.diff(v) / np.diff(GRID)
    assert np.all(np.diff(slopes) <= 1e-9 * np.abs(slopes).max())
    logs = np.log(v)
    h = np.diff(GRID)
    second = (logs[2:] - logs[1:-1]) / h[1:] - (logs[1:-1] - logs[:-2]) / h[:-1]
    assert np.all(second <= 1e-8)


@SETTINGS
@given(specs(), pos)
def test_tilt_and_kill_commute_with_evaluation(spec, c):
    assert np.allclose(tilt(spec, c).phi(GRID), spec.phi(GRID + c), rtol=1e-10, atol=0)
    assert np.allclose(kill(spec, c).phi(GRID), spec.phi(GRID) + c, rtol=1e-12, atol=0)


@SETTINGS
@given(specs(), st.floats(0.2, 0.95))
def test_stable_timechange_is_power(spec, gamma):
    tc = stable_timechange(spec, gamma)
    assert np.allclose(tc.phi(GRID), spec.phi(GRID) ** gamma, rtol=1e-10)


@SETTINGS
@given(specs(), pos, pos)
def test_undershoot_transforms_in_unit_interval(spec, alpha, lam):
    g = undershoot_laplace_G(spec, alpha, lam)
    u = undershoot_laplace_U(spec, alpha, lam)
    assert 0 < g <= 1 and 0 < u <= 1 + 1e-15
    # independence factorization: E e^{-lam e_alpha} = (G part)(U part) with the same lam
    assert abs(g * u - alpha / (alpha + lam)) < 1e-12


@SETTINGS
@given(specs())
def test_moment_routes_agree(spec):
    for n in (1, 3):
        assert abs(moment_I(spec, n) / moment_I_integer(spec, n) - 1) < 1e-9


@SETTINGS
@given(specs(), st.floats(0.2, 10.0))
def test_functional_equation(spec, s):
    ev = GenGammaEvaluator.from_spec(spec)
    assert abs(ev(s + 1) / (spec.phi(s) * ev(s)) - 1) < 1e-8


@SETTINGS
@given(specs())
def test_rho_nonnegative_and_bounded_by_tilting(spec):
    rho = hpm_density(spec)
    x = np.geomspace(0.05, 20, 15)
    r = rho(x)
    assert np.all(r >= -1e-12)
    tilted = hpm_density(tilt(spec, 1.0))(x)
    assert np.allclose(tilted, np.exp(-x) * r, atol=1e-8)


@SETTINGS
@given(st.one_of(
    st.builds(lambda q, a: SubordinatorSpec(q=q, a=a), pos, pos),
    st.builds(lambda g, s: SubordinatorSpec(levy=StableJumps(index=g, scale=s)), index, pos),
    st.builds(lambda r, m, q: SubordinatorSpec(q=q, levy=ExponentialJumps(rate=r, mass=m)), pos, pos, pos),
))
def test_conjugate_pairs_multiply_to_lambda(spec):
    pair = conjugate(spec)
    assert pair.product_residual(np.geomspace(1e-3, 1e3, 50)) < 1e-10
    x = np.geomspace(0.01, 100, 20)
    assert np.max(np.abs(hpm_density(pair.primal)(x) + hpm_density(pair.dual)(x) - 1)) < 1e-8


@SETTINGS
@given(specs())
def test_config_round_trip(spec):
    assert parse_text(dump_spec(spec)).spec == spec


@SETTINGS
@given(st.floats(0.05, 5.0), st.floats(0.05, 5.0), st.integers(1, 8))
def test_killed_drift_moments_are_beta(q, k, n):
    # I = (1 - e^{-K zeta})/K with zeta ~ Exp(q): E[I^n] = prod i/(q + K i)
    spec = SubordinatorSpec(q=q, a=k)
    ref = math.prod(i / (q + k * i) for i in range(1, n + 1))
    assert abs(moment_I(spec, n) / ref - 1) < 1e-9
