"""Harmonic potential densities, ID verdicts, undershoot and G laws, log R."""
from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate

from subordkit.errors import NoClosedFormPotential
from subordkit.gen_gamma import gamma_gen
from subordkit.harmonic import (
    G_density,
    G_law,
    HarmonicDensity,
    conjugate_check,
    convolution_identity_check,
    hpm_density,
    id_test_logI,
    laplace_consistency,
    logR_exponent,
    logR_levy_density,
    potential_density,
    sd_diagnostic,
    undershoot_density,
    undershoot_laplace_G,
    undershoot_laplace_U,
)
from subordkit.levy import AtomicJumps, GammaJumps, StableJumps, TabulatedJumps
from subordkit.subordinator import (
    SubordinatorSpec,
    compound_poisson_exponential,
    conjugate,
    kill,
    killed_drift,
    pure_drift,
    stable,
    stable_timechange,
    tilt,
)

XS = np.geomspace(0.1, 10, 37)


def catalog_specs():
    return [
        killed_drift(1.0, 1.0),
        pure_drift(1.0),
        stable(0.5),
        kill(stable(0.4), 1.0),
        compound_poisson_exponential(1.0, 1.0),
        compound_poisson_exponential(2.0, 0.5, q=1.0),
        compound_poisson_exponential(2.0, 0.5, drift=0.7),
        SubordinatorSpec(levy=GammaJumps(c=1.0, beta=0.5)),
        SubordinatorSpec(q=0.3, a=0.5, levy=GammaJumps(c=1.0, beta=1.5, rate=2.0)),
        SubordinatorSpec(q=2.0, levy=StableJumps(index=0.5, tempering=1.0)),
    ]


def test_catalog_values():
    assert abs(hpm_density(killed_drift(1, 1))(1.0) - math.exp(-1)) < 1e-15
    dual = conjugate(killed_drift(1, 1)).dual
    assert abs(hpm_density(dual)(1.0) - (1 - math.exp(-1))) < 1e-15
    assert np.all(np.abs(hpm_density(stable(0.3))(XS) - 0.3) < 1e-15)
    # Mittag-Leffler rule at alpha = 1 recovers the killed drift
    assert abs(hpm_density(kill(stable(0.5), 1.0))(1.0) - 0.5 * 0.42758357615580705) < 1e-10


def test_catalog_agrees_with_numeric_inversion():
    for spec in catalog_specs():
        cat = hpm_density(spec)
        num = hpm_density(spec, method="numeric")
        assert cat.is_catalog and num.provenance.startswith("numeric")
        assert np.max(np.abs(cat(XS) - num(XS))) < 1e-6, spec


def test_laplace_consistency_of_every_density():
    for spec in catalog_specs() + [SubordinatorSpec(q=0.5, levy=TabulatedJumps((0.0, 1.0, 2.0), (1.0, 0.5, 0.0)))]:
        assert laplace_consistency(spec, lams=(2.0, 5.0, 10.0)) < 1e-6, spec


def test_moment_check_log_derivative():
    # int rho(x) e^{-lam x} dx = phi'(lam)/phi(lam)
    for spec in catalog_specs():
        rho = hpm_density(spec)
        for lam in (1.0, 2.0, 5.0):
            val = rho.integrate(lambda x, lam=lam: np.asarray(x) * np.exp(-lam * np.asarray(x)))
            assert abs(val - spec.log_derivative(lam)) < 1e-6, spec


def test_stable_timechange_scales_rho():
    for spec in (killed_drift(1, 1), compound_poisson_exponential(1, 1, q=0.5)):
        base = hpm_density(spec)(XS)
        scaled = hpm_density(stable_timechange(spec, 0.4))(XS)
        assert np.max(np.abs(scaled - 0.4 * base)) < 1e-9


def test_atomic_spec_has_atoms_and_no_density():
    spec = SubordinatorSpec(levy=AtomicJumps(((1.0, 1.0),)))
    rho = hpm_density(spec)
    assert rho.has_atoms
    locs, masses = rho.atomic_part(5.5)
    # H({k}) = int_0^inf t^-1 P(N_t = k) dt = int t^(k-1) e^-t / k! dt = 1/k
    for k in (1, 2, 5):
        assert abs(masses[list(locs).index(float(k))] - 1.0 / k) < 1e-12


def test_id_verdicts():
    v = id_test_logI(killed_drift(1, 1))
    assert v.verdict == "InfinitelyDivisible" and v.is_id
    v = id_test_logI(SubordinatorSpec(levy=TabulatedJumps((0.0, 1.0), (1.0, 0.0))))
    assert v.verdict == "NotID" and v.rho_witness > 1 + 1e-4 and v.witness is not None
    v = id_test_logI(SubordinatorSpec(levy=AtomicJumps(((1.0, 1.0),))))
    assert v.verdict == "NotID_Atomic"
    assert id_test_logI(stable(0.5)).verdict == "InfinitelyDivisible"


def test_id_drift_plus_exponential_jumps_has_rho_below_one():
    # rho = e^{r1 x} + e^{r2 x} - e^{-theta x}; for drift 1, theta = 1, c = 1 this is
    # 1 + e^{-2x} - e^{-x} <= 1, so the test cannot produce a witness above 1
    spec = compound_poisson_exponential(1.0, 1.0, drift=1.0)
    x = np.geomspace(1e-3, 1e3, 200)
    assert np.allclose(hpm_density(spec)(x), 1 + np.exp(-2 * x) - np.exp(-x), atol=1e-13)
    assert id_test_logI(spec).verdict != "NotID"


def test_id_is_preserved_by_tilting():
    for spec in (killed_drift(1, 1), stable(0.5), compound_poisson_exponential(1, 1)):
        if id_test_logI(spec).is_id:
            for c in (0.1, 1.0, 10.0):
                assert id_test_logI(tilt(spec, c)).is_id


@pytest.mark.parametrize(
    "spec, alpha, lam, g, u",
    [
        (killed_drift(1, 1), 1.0, 1.0, 2 / 3, 0.75),
        (stable(0.5), 1.0, 3.0, 0.5, 0.5),
        (pure_drift(1.0), 1.0, 2.0, 1 / 3, 1.0),
    ],
)
def test_undershoot_transforms(spec, alpha, lam, g, u):
    assert abs(undershoot_laplace_G(spec, alpha, lam) - g) < 1e-14
    assert abs(undershoot_laplace_U(spec, alpha, lam) - u) < 1e-14
    assert undershoot_laplace_G(spec, alpha, 0.0) == 1.0
    assert undershoot_laplace_U(spec, alpha, 0.0) == 1.0


def test_undershoot_density_examples_and_mass():
    atom, dens = undershoot_density(killed_drift(1, 1), 1.0, 2.0)
    assert abs(atom - 0.5) < 1e-15 and abs(dens - 0.5 * math.exp(-2)) < 1e-15
    atom, dens = undershoot_density(pure_drift(1.0), 1.0, 2.0)
    assert atom == 1.0 and dens == 0.0
    atom, dens = undershoot_density(compound_poisson_exponential(1, 1), 1.0, 0.5)
    assert atom == 0.0 and abs(dens - 2 * math.exp(-1.0)) < 1e-14
    for spec in catalog_specs():
        atom, _ = undershoot_density(spec, 1.5, 1.0)
        mass = integrate.quad(lambda x: undershoot_density(spec, 1.5, x)[1], 0, np.inf, limit=200)[0]
        assert abs(atom + mass - 1) < 1e-8, spec


def test_G_law():
    assert abs(G_density(killed_drift(1, 1), 1.0, 0.7) - 2 * math.exp(-1.4)) < 1e-14
    assert abs(G_density(pure_drift(1.0), 1.0, 0.7) - math.exp(-0.7)) < 1e-14
    assert abs(G_law(stable(0.5), 1.0).mean - 0.5) < 1e-15
    for spec in (killed_drift(1, 1), stable(0.5), compound_poisson_exponential(1, 1, q=0.5),
                 compound_poisson_exponential(2, 1, drift=0.5)):
        law = G_law(spec, 1.3)
        mass = law.atom + integrate.quad(law.density, 0, np.inf, limit=200)[0]
        mean = integrate.quad(lambda x: x * law.density(x), 0, np.inf, limit=200)[0]
        assert abs(mass - 1) < 1e-8 and abs(mean - law.mean) < 1e-8, spec
    with pytest.raises(NoClosedFormPotential):
        potential_density(SubordinatorSpec(levy=GammaJumps()))


def test_logR_exponent_routes():
    assert abs(logR_exponent(killed_drift(1, 1), 1.0) - math.log(2)) < 1e-8
    assert logR_exponent(killed_drift(1, 1), 0.0) == 0.0
    assert abs(logR_exponent(pure_drift(1.0), 1.0)) < 1e-9
    for spec in catalog_specs():
        for lam in (0.5, 2.0):
            a = logR_exponent(spec, lam, route="integral")
            b = logR_exponent(spec, lam, route="gamma")
            assert abs(a - b) < 1e-6 * max(1, abs(b)), spec
            assert abs(b - math.log(gamma_gen(spec, lam + 1))) < 1e-12


def test_logR_levy_density():
    assert abs(logR_levy_density(killed_drift(1, 1), 1.0) - math.exp(-1) / (math.e - 1)) < 1e-15
    assert abs(logR_levy_density(stable(0.5), 1.0) - 0.5 / (math.e - 1)) < 1e-15
    assert logR_levy_density(stable(0.5), 800.0) == 0.0


def test_sd_diagnostic():
    grid = np.geomspace(0.01, 20, 100)
    assert sd_diagnostic(killed_drift(1, 1), grid).nonincreasing
    assert sd_diagnostic(stable(0.5), grid).nonincreasing
    xs = np.linspace(0.01, 5, 50)
    bad = HarmonicDensity.from_table(xs, np.where(xs < 2, 0.5, 60.0 * xs))
    rep = sd_diagnostic(bad, xs)
    assert not rep.nonincreasing and 1.9 < rep.first_violation < 2.2


def test_conjugate_pairs_and_convolution_identity():
    grid = np.geomspace(0.01, 100, 60)
    for spec in (killed_drift(1, 1), stable(0.5), stable(0.3), compound_poisson_exponential(2.0, 0.5, q=1.0)):
        assert conjugate_check(conjugate(spec), grid) < 1e-8
    for spec in (killed_drift(1, 1), pure_drift(1.0), compound_poisson_exponential(1, 1),
                 compound_poisson_exponential(2, 1, drift=0.5), stable(0.5)):
        assert convolution_identity_check(spec, np.geomspace(0.1, 10, 12)) < 1e-6, spec


def test_rho_nonnegative_and_density_rejects_nonpositive():
    for spec in catalog_specs():
        assert np.all(hpm_density(spec)(np.geomspace(1e-3, 1e3, 50)) >= 0)
    with pytest.raises(ValueError):
        hpm_density(killed_drift(1, 1))(0.0)
