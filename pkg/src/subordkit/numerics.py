"""Numerical kernels shared by the rest of the package.

Semi-infinite quadrature, numerical Laplace inversion (fixed Talbot in
double precision, Gaver--Stehfest through mpmath as an independent check),
the Mittag-Leffler function on the real line, and Kolmogorov--Smirnov
statistics.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import mpmath as mp
import numpy as np
from scipy import integrate

from .errors import MaxSubdivisions, ValidationFailed

__all__ = [
    "QuadratureConfig",
    "InversionConfig",
    "integrate_0_inf",
    "integrate_interval",
    "laplace_invert",
    "talbot",
    "gaver_stehfest",
    "forward_residual",
    "mittag_leffler",
    "mittag_leffler_mp",
    "ks_statistic",
    "kolmogorov_sf",
]


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances for adaptive Gauss--Kronrod quadrature.

    ``split`` is where the half-line is cut: ``(0, split]`` is integrated
    directly and ``(split, inf)`` through QUADPACK's ``1/t`` substitution.
    """

    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_subdivisions: int = 500
    split: float = 1.0

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("quadrature tolerances must be > 0")
        if self.max_subdivisions < 1 or not self.split > 0:
            raise ValueError("max_subdivisions must be >= 1 and split > 0")


@dataclass(frozen=True)
class InversionConfig:
    """Settings for :func:`laplace_invert`.

    ``nodes`` is the Talbot ``M`` (or the Stehfest ``n``).  In double
    precision the Talbot error bottoms out near ``M = 32``; larger values
    trade truncation error for round-off growing like ``exp(0.4 M)``.
    """

    method: str = "talbot"
    nodes: int = 32
    residual: float = 1e-7

    def __post_init__(self):
        if self.method not in ("talbot", "gaver_stehfest"):
            raise ValueError(f"unknown inversion method {self.method!r}")
        if self.nodes < 8 or self.nodes % 2:
            raise ValueError("inversion node count must be even and >= 8")
        if not self.residual > 0:
            raise ValueError("validation residual must be > 0")


_DEFAULT_QUAD = QuadratureConfig()
_DEFAULT_INV = InversionConfig()


def _quad(f, lo, hi, cfg: QuadratureConfig, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(f, lo, hi, epsabs=cfg.abs_tol, epsrel=cfg.rel_tol,
                             limit=cfg.max_subdivisions, full_output=1, **kw)
    value, err, info = out[:3]
    if len(out) > 3 and info.get("last", 0) >= cfg.max_subdivisions:
        raise MaxSubdivisions(
            f"quadrature on [{lo:g}, {hi:g}] hit {cfg.max_subdivisions} subdivisions (error estimate {err:.3g})"
        )
    return float(value), float(err)


def integrate_interval(f: Callable[[float], float], lo: float, hi: float,
                       cfg: QuadratureConfig | None = None, **kw) -> tuple[float, float]:
    """Adaptive quadrature on a finite interval; extra keywords go to ``quad``."""
    return _quad(f, lo, hi, cfg or _DEFAULT_QUAD, **kw)


def integrate_0_inf(f: Callable[[float], float], cfg: QuadratureConfig | None = None,
                    breakpoints: Sequence[float] = ()) -> tuple[float, float]:
    """Integrate ``f`` over ``(0, inf)``.

    The half-line is cut at ``cfg.split`` and at every breakpoint (kinks or
    jumps of the integrand); the last piece uses the infinite-range rule.

    Returns
    -------
    value, error_estimate
    """
    cfg = cfg or _DEFAULT_QUAD
    cuts = sorted({float(b) for b in breakpoints if b > 0} | {cfg.split})
    edges = [0.0, *cuts]
    total, err = 0.0, 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        v, e = _quad(f, lo, hi, cfg)
        total += v
        err += e
    v, e = _quad(f, edges[-1], np.inf, cfg)
    return total + v, err + e


# ---------------------------------------------------------------------------
# Laplace inversion
# ---------------------------------------------------------------------------

def _talbot_nodes(m: int):
    theta = np.arange(1, m) * math.pi / m
    cot = 1.0 / np.tan(theta)
    delta = theta * (cot + 1j)
    gamma = 1.0 + 1j * theta * (1.0 + cot**2) - 1j * cot
    return delta, gamma


def talbot(F: Callable, x, nodes: int = 32) -> np.ndarray:
    """Fixed-Talbot inversion (Abate--Valko contour) of ``F`` at ``x > 0``.

    ``F`` must accept complex numpy arrays of any shape.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0) or not np.all(np.isfinite(x)):
        raise ValueError("inversion points must be finite and > 0")
    m = int(nodes)
    delta, gamma = _talbot_nodes(m)
    r = 2.0 * m / (5.0 * x[..., None])
    s = r * delta
    head = 0.5 * np.real(np.exp(r[..., 0] * x) * F(r[..., 0] + 0j))
    vals = np.exp(s * x[..., None]) * F(s) * gamma
    return (r[..., 0] / m) * (head + np.sum(np.real(vals), axis=-1))


def gaver_stehfest(F_mp: Callable, x: float, nodes: int = 16, dps: int | None = None) -> float:
    """Gaver--Stehfest inversion in extended precision (mpmath).

    ``F_mp`` must accept and return mpmath numbers.  Intended as a test-time
    cross-check; the Stehfest weights cancel catastrophically in doubles.
    """
    dps = dps or max(30, int(2.2 * nodes))
    with mp.workdps(dps):
        val = mp.invertlaplace(F_mp, mp.mpf(x), method="stehfest", degree=int(nodes))
    return float(val)


def forward_residual(F: Callable, f: Callable, probes: Sequence[float],
                     cfg: QuadratureConfig | None = None,
                     breakpoints: Sequence[float] = ()) -> float:
    """Largest relative mismatch between ``F(lam)`` and ``int e^{-lam x} f(x) dx``."""
    worst = 0.0
    for lam in probes:
        val, _ = integrate_0_inf(lambda t, lam=lam: math.exp(-lam * t) * float(f(t)), cfg, breakpoints)
        ref = float(np.real(F(np.asarray(complex(lam)))))
        worst = max(worst, abs(val - ref) / max(abs(ref), 1e-300))
    return worst


def laplace_invert(F: Callable, x, cfg: InversionConfig | None = None, F_mp: Callable | None = None):
    """Invert the Laplace transform ``F`` at ``x``.

    Talbot evaluations are validated by repeating the inversion with fewer
    nodes: a disagreement above ``cfg.residual`` (relative to the scale of the
    result) raises :class:`ValidationFailed`.  The Gaver--Stehfest method
    requires ``F_mp``, an mpmath version of ``F``.
    """
    cfg = cfg or _DEFAULT_INV
    scalar = np.ndim(x) == 0
    if cfg.method == "gaver_stehfest":
        if F_mp is None:
            raise ValueError("Gaver-Stehfest inversion needs an mpmath transform F_mp")
        out = np.array([gaver_stehfest(F_mp, float(v), cfg.nodes) for v in np.atleast_1d(x)])
        return float(out[0]) if scalar else out
    fine = talbot(F, x, cfg.nodes)
    coarse = talbot(F, x, cfg.nodes - 6)
    scale = np.maximum(np.abs(fine), 1e-3)
    gap = np.abs(fine - coarse) / scale
    if not np.all(np.isfinite(fine)) or np.any(gap > cfg.residual):
        bad = float(np.nanmax(np.where(np.isfinite(gap), gap, np.inf)))
        raise ValidationFailed(f"Talbot inversion unstable: node-refinement gap {bad:.3g} > {cfg.residual:g}")
    return float(fine) if scalar else fine


# ---------------------------------------------------------------------------
# Mittag-Leffler
# ---------------------------------------------------------------------------

def mittag_leffler_mp(alpha, z, dps: int = 30):
    """Series ``sum z^k / Gamma(alpha k + 1)`` in mpmath with enough guard digits
    to absorb the cancellation for negative ``z``."""
    alpha = mp.mpf(alpha)
    z = mp.mpf(z)
    growth = float(abs(z)) ** (1.0 / float(alpha)) if z else 0.0
    work = dps + int(growth / math.log(10.0)) + 10
    with mp.workdps(work):
        alpha, z = mp.mpf(alpha), mp.mpf(z)
        total, k = mp.mpf(0), 0
        tol = mp.mpf(10) ** (-work)
        while True:
            term = z**k / mp.gamma(alpha * k + 1)
            total += term
            if k > 2 * growth + 10 and abs(term) < tol * max(abs(total), tol):
                break
            k += 1
        return +total


def _ml_series(alpha: float, z: float) -> float:
    terms = []
    k = 0
    while True:
        term = math.exp(k * math.log(abs(z)) - math.lgamma(alpha * k + 1.0)) if z else float(k == 0)
        if z < 0 and k % 2:
            term = -term
        terms.append(term)
        if k > 5 and abs(term) < 1e-18 * max(abs(math.fsum(terms)), 1e-300):
            break
        k += 1
    return math.fsum(terms)


def _ml_integral(alpha: float, z: float) -> float:
    # E_alpha(-t^alpha) = int_0^inf e^{-r t} K(r) dr  (complete monotonicity, 0 < alpha < 1)
    t = (-z) ** (1.0 / alpha)
    s, c = math.sin(alpha * math.pi), math.cos(alpha * math.pi)

    def smooth(r):  # K(r) / r^(alpha - 1)
        ra = r**alpha
        return math.exp(-r * t) * s / (math.pi * (ra * ra + 2.0 * ra * c + 1.0))

    def full(r):
        return smooth(r) * r ** (alpha - 1.0)

    cfg = QuadratureConfig(abs_tol=1e-14, rel_tol=1e-12, max_subdivisions=1000)
    head, _ = _quad(smooth, 0.0, 1.0, cfg, weight="alg", wvar=(alpha - 1.0, 0.0))
    tail, _ = _quad(full, 1.0, np.inf, cfg)
    return head + tail


def mittag_leffler(alpha: float, z, method: str = "auto"):
    """Mittag-Leffler function ``E_alpha(z)`` for ``0 < alpha <= 1`` and real ``z``.

    Parameters
    ----------
    alpha : float
        Index in ``(0, 1]``.
    z : float or array_like
        Real argument(s).
    method : {"auto", "series", "integral"}
        ``"series"`` uses the power series (double precision with compensated
        summation when no cancellation can occur, otherwise mpmath with guard
        digits); ``"integral"`` uses the completely monotone integral
        representation and requires ``z < 0`` and ``alpha < 1``.
    """
    alpha = float(alpha)
    if not 0.0 < alpha <= 1.0:
        raise ValueError("Mittag-Leffler index must lie in (0, 1]")
    if method not in ("auto", "series", "integral"):
        raise ValueError(f"unknown method {method!r}")
    arr = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("Mittag-Leffler argument must be finite")
    out = np.empty(arr.shape)
    for idx, v in np.ndenumerate(arr):
        out[idx] = _ml_scalar(alpha, float(v), method)
    return float(out) if arr.ndim == 0 else out


def _ml_scalar(alpha: float, z: float, method: str) -> float:
    if z == 0.0:
        return 1.0
    if alpha == 1.0 and method != "integral":
        return math.exp(z)
    if method == "integral":
        if z > 0 or alpha == 1.0:
            raise ValueError("the integral representation needs z < 0 and alpha < 1")
        return _ml_integral(alpha, z)
    if z > 0 or (method == "auto" and abs(z) ** (1.0 / alpha) < 2.0):
        return _ml_series(alpha, z)
    if method == "series":
        return float(mittag_leffler_mp(alpha, z))
    return _ml_integral(alpha, z)


# ---------------------------------------------------------------------------
# Kolmogorov--Smirnov
# ---------------------------------------------------------------------------

def kolmogorov_sf(t: float) -> float:
    """``P(K > t)`` for the Kolmogorov distribution.

    Uses the alternating series ``2 sum (-1)^(k-1) exp(-2 k^2 t^2)`` truncated
    at terms below 1e-12, and the Jacobi-theta form for small ``t`` where the
    alternating series converges slowly.
    """
    if t <= 0:
        return 1.0
    if t < 1.0:
        # P(K <= t) = sqrt(2 pi)/t * sum exp(-(2k-1)^2 pi^2 / (8 t^2))
        total, k = 0.0, 1
        while True:
            term = math.exp(-((2 * k - 1) ** 2) * math.pi**2 / (8.0 * t * t))
            total += term
            if term < 1e-16 * max(total, 1e-300) or k > 100:
                break
            k += 1
        return min(1.0, max(0.0, 1.0 - math.sqrt(2.0 * math.pi) / t * total))
    total, k = 0.0, 1
    while True:
        term = math.exp(-2.0 * k * k * t * t)
        total += term if k % 2 else -term
        if term < 1e-12:
            break
        k += 1
    return min(1.0, max(0.0, 2.0 * total))


def ks_statistic(samples, cdf) -> tuple[float, float]:
    """Kolmogorov--Smirnov distance and asymptotic p-value.

    ``cdf`` is either a callable (one-sample test) or a second sample
    (two-sample test, effective size ``n m / (n + m)``).
    """
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    if n == 0:
        raise ValueError("empty sample")
    if callable(cdf):
        f = np.asarray(cdf(x), dtype=float)
        i = np.arange(1, n + 1)
        d = float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))
        n_eff = n
    else:
        y = np.sort(np.asarray(cdf, dtype=float).ravel())
        if y.size == 0:
            raise ValueError("empty sample")
        pooled = np.concatenate([x, y])
        fx = np.searchsorted(x, pooled, side="right") / n
        fy = np.searchsorted(y, pooled, side="right") / y.size
        d = float(np.max(np.abs(fx - fy)))
        n_eff = n * y.size / (n + y.size)
    return d, kolmogorov_sf(math.sqrt(n_eff) * d)
