"""subordkit: subordinators, exponential functionals and their remainder variables.

The package evaluates Laplace exponents, generalized gamma functions,
harmonic potential densities and infinite-divisibility verdicts, and runs
Monte Carlo checks of the associated distributional identities.
"""
from __future__ import annotations

from .errors import (
    ConfigError,
    HorizonExceeded,
    InvalidSpecError,
    InversionUnstable,
    MaxSubdivisions,
    NoClosedFormPotential,
    NonConvergent,
    NotSpecialRecognized,
    QZeroViolation,
    SimulationUnsupported,
    SubordKitError,
    ValidationFailed,
)
from .gen_gamma import (
    GenGammaEvaluator,
    euler_constant_gen,
    gamma_gen,
    gordon_tail,
    joint_transform,
    joint_transform_pure_drift,
    log_gamma_gen,
    moment_I,
    moment_I_integer,
    moment_R,
    moment_R_integer,
)
from .harmonic import (
    HarmonicDensity,
    IdVerdict,
    G_density,
    G_law,
    hpm_density,
    id_test_logI,
    logR_exponent,
    potential_density,
    sd_diagnostic,
    undershoot_density,
    undershoot_laplace_G,
    undershoot_laplace_U,
)
from .levy import AtomicJumps, ExponentialJumps, GammaJumps, NoJumps, StableJumps, TabulatedJumps
from .montecarlo import SimConfig, SimReport, sample_I, sample_passage, sample_R
from .numerics import InversionConfig, QuadratureConfig, laplace_invert, mittag_leffler
from .subordinator import (
    ConjugatePair,
    SubordinatorSpec,
    compound_poisson_exponential,
    conjugate,
    kill,
    killed_drift,
    phi,
    pure_drift,
    stable,
    stable_timechange,
    tilt,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "HorizonExceeded",
    "InvalidSpecError",
    "InversionUnstable",
    "MaxSubdivisions",
    "NoClosedFormPotential",
    "NonConvergent",
    "NotSpecialRecognized",
    "QZeroViolation",
    "SimulationUnsupported",
    "SubordKitError",
    "ValidationFailed",
    "GenGammaEvaluator",
    "euler_constant_gen",
    "gamma_gen",
    "gordon_tail",
    "joint_transform",
    "joint_transform_pure_drift",
    "log_gamma_gen",
    "moment_I",
    "moment_I_integer",
    "moment_R",
    "moment_R_integer",
    "HarmonicDensity",
    "IdVerdict",
    "G_density",
    "G_law",
    "hpm_density",
    "id_test_logI",
    "logR_exponent",
    "potential_density",
    "sd_diagnostic",
    "undershoot_density",
    "undershoot_laplace_G",
    "undershoot_laplace_U",
    "ConjugatePair",
    "SubordinatorSpec",
    "compound_poisson_exponential",
    "conjugate",
    "kill",
    "killed_drift",
    "phi",
    "pure_drift",
    "stable",
    "stable_timechange",
    "tilt",
    "AtomicJumps",
    "ExponentialJumps",
    "GammaJumps",
    "NoJumps",
    "StableJumps",
    "TabulatedJumps",
    "SimConfig",
    "SimReport",
    "sample_I",
    "sample_passage",
    "sample_R",
    "InversionConfig",
    "QuadratureConfig",
    "laplace_invert",
    "mittag_leffler",
]
