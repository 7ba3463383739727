"""Generalized gamma functions and the moments of ``I`` and ``R``.

For a log-concave Bernstein-type function ``g`` the generalized gamma
function is the log-convex solution of ``f(s + 1) = g(s) f(s)``, ``f(1) = 1``:

    Gamma_g(s) = exp(-gamma_g s) / g(s) * prod_n g(n)/g(n + s) * exp(s g'(n)/g(n)),

with ``gamma_g = lim_n (sum_{j<=n} g'(j)/g(j) - log g(n))``.  Both the
constant and the product are summed exactly up to a cut-off ``N`` and the
remainder is replaced by its Euler--Maclaurin expansion.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NonConvergent, QZeroViolation
from .subordinator import SubordinatorSpec, kill, tilt

__all__ = [
    "GenGammaEvaluator",
    "euler_constant_gen",
    "gamma_gen",
    "log_gamma_gen",
    "moment_R",
    "moment_I",
    "moment_I_integer",
    "moment_R_integer",
    "joint_transform",
    "joint_transform_pure_drift",
    "gordon_tail",
]

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


@dataclass
class GenGammaEvaluator:
    """Cached state for ``Gamma_g``.

    Parameters
    ----------
    g, g_prime : callable
        ``g`` and its derivative on positive reals (vectorized).
    name : str
        Description used in error messages.
    cutoff : int
        Number of explicitly summed product terms ``N``; the convergence check
        repeats the computation with ``N/2`` terms.
    tol : float
        Relative tolerance for that check.
    limit_one : bool
        Use the ``g(s) -> 1`` form of the product (no exponential factors).
        Only set this when ``g`` is known to converge to 1.
    """

    g: Callable
    g_prime: Callable
    name: str = "g"
    cutoff: int = 4096
    tol: float = 1e-10
    limit_one: bool = False
    _gamma: float | None = field(default=None, init=False, repr=False)

    # -- constructors --------------------------------------------------
    @classmethod
    def identity(cls, **kw) -> "GenGammaEvaluator":
        return cls(lambda s: np.asarray(s, dtype=float), lambda s: np.ones(np.shape(s)), name="identity", **kw)

    @classmethod
    def from_spec(cls, spec: SubordinatorSpec, **kw) -> "GenGammaEvaluator":
        return cls(spec._phi, spec._phi_prime, name=spec.label or "phi", **kw)

    @classmethod
    def conjugate_of(cls, spec: SubordinatorSpec, **kw) -> "GenGammaEvaluator":
        """Evaluator for ``phi*(s) = s / phi(s)`` (no conjugate triplet needed)."""

        def g(s):
            s = np.asarray(s, dtype=float)
            return s / spec._phi(s)

        def gp(s):
            s = np.asarray(s, dtype=float)
            return g(s) * (1.0 / s - spec._phi_prime(s) / spec._phi(s))

        return cls(g, gp, name=f"conjugate of {spec.label or 'phi'}", **kw)

    # -- pieces --------------------------------------------------------
    def _L(self, x):
        return np.log(self.g(x))

    def _Lp(self, x):
        x = np.asarray(x, dtype=float)
        return self.g_prime(x) / self.g(x)

    def _Lpp(self, x):
        h = 1e-3 * x
        return (self._Lp(x + h) - self._Lp(x - h)) / (2.0 * h)

    def _Lppp(self, x):
        h = 1e-2 * x
        return (self._Lp(x + h) - 2.0 * self._Lp(x) + self._Lp(x - h)) / (h * h)

    def _euler_constant(self, n: int) -> float:
        j = np.arange(1, n, dtype=float)
        nn = float(n)
        head = math.fsum(self._Lp(j)) - float(self._L(nn))
        return head + 0.5 * float(self._Lp(nn)) - float(self._Lpp(nn)) / 12.0 + float(self._Lppp(nn)) / 720.0

    @property
    def euler_constant(self) -> float:
        if self._gamma is None:
            fine = self._euler_constant(self.cutoff)
            coarse = self._euler_constant(self.cutoff // 2)
            if not math.isfinite(fine) or abs(fine - coarse) > self.tol * max(1.0, abs(fine)):
                raise NonConvergent(
                    f"generalized Euler constant of {self.name} unstable: {coarse!r} vs {fine!r}"
                )
            self._gamma = fine
        return self._gamma

    def _log_product(self, s: np.ndarray, n: int) -> np.ndarray:
        k = np.arange(1, n, dtype=float)[:, None]
        L_k = self._L(k)
        terms = L_k - self._L(k + s) if self.limit_one else L_k - self._L(k + s) + s * self._Lp(k)
        head = np.sum(terms, axis=0)
        nn = float(n)
        x = nn + 0.5 * s * (_GL_NODES[:, None] + 1.0)
        L_n = float(self._L(nn))
        if self.limit_one:
            # remainder of sum log(g(k)/g(k+s)) when log g -> 0
            integral = 0.5 * s * np.sum(_GL_WEIGHTS[:, None] * self._L(x), axis=0)
            t = lambda y: self._L(y) - self._L(y + s)  # noqa: E731
        else:
            integral = 0.5 * s * np.sum(_GL_WEIGHTS[:, None] * (self._L(x) - L_n), axis=0)
            t = lambda y: self._L(y) - self._L(y + s) + s * self._Lp(y)  # noqa: E731
        h = 1e-3 * nn
        t_prime = (t(nn + h) - t(nn - h)) / (2.0 * h)
        return head + integral + 0.5 * t(nn) - t_prime / 12.0

    def log_gamma(self, s):
        """``log Gamma_g(s)`` for ``s > 0`` (scalar or array)."""
        arr = np.asarray(s, dtype=float)
        if np.any(~np.isfinite(arr)) or np.any(arr <= 0):
            raise ValueError("Gamma_g needs s > 0")
        flat = arr.ravel()
        n = max(self.cutoff, int(64 * flat.max()))
        prod_fine = self._log_product(flat, n)
        prod_coarse = self._log_product(flat, n // 2)
        scale = np.maximum(1.0, np.abs(prod_fine))
        if np.any(np.abs(prod_fine - prod_coarse) > self.tol * scale):
            raise NonConvergent(f"Gamma_{self.name}: product remainder did not settle at N={n}")
        linear = 0.0 if self.limit_one else self.euler_constant * flat
        out = -linear - self._L(flat) + prod_fine
        out = np.where(flat == 1.0, 0.0, out).reshape(arr.shape)
        return float(out) if arr.ndim == 0 else out

    def __call__(self, s):
        return np.exp(self.log_gamma(s))


def _evaluator(g) -> GenGammaEvaluator:
    if isinstance(g, GenGammaEvaluator):
        return g
    if isinstance(g, SubordinatorSpec):
        return GenGammaEvaluator.from_spec(g)
    if g == "identity":
        return GenGammaEvaluator.identity()
    raise TypeError("expected a SubordinatorSpec, a GenGammaEvaluator or 'identity'")


def euler_constant_gen(g) -> float:
    """Generalized Euler constant ``gamma_g``."""
    return _evaluator(g).euler_constant


def log_gamma_gen(g, s):
    return _evaluator(g).log_gamma(s)


def gamma_gen(g, s):
    """Generalized gamma function ``Gamma_g(s)``, ``s > 0``; ``Gamma_g(1) = 1`` exactly."""
    return _evaluator(g)(s)


def _check_moment_order(s):
    arr = np.asarray(s, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr <= -1):
        raise ValueError("moment order must exceed -1")
    return arr


def moment_R(spec: SubordinatorSpec, s, evaluator: GenGammaEvaluator | None = None):
    """``E[R^s] = Gamma_phi(s + 1)``."""
    arr = _check_moment_order(s)
    ev = evaluator or GenGammaEvaluator.from_spec(spec)
    return ev(arr + 1.0)


def moment_I(spec: SubordinatorSpec, s, evaluator: GenGammaEvaluator | None = None):
    """``E[I^s] = Gamma(s + 1) / Gamma_phi(s + 1)``."""
    from scipy.special import gammaln

    arr = _check_moment_order(s)
    ev = evaluator or GenGammaEvaluator.from_spec(spec)
    out = np.exp(gammaln(arr + 1.0) - ev.log_gamma(arr + 1.0))
    return float(out) if np.ndim(out) == 0 else out


def moment_I_integer(spec: SubordinatorSpec, n: int) -> float:
    """``E[I^n] = prod_{i<=n} i / phi(i)``."""
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    i = np.arange(1, int(n) + 1, dtype=float)
    return float(np.exp(np.sum(np.log(i) - np.log(spec._phi(i)))))


def moment_R_integer(spec: SubordinatorSpec, n: int) -> float:
    """``E[R^n] = prod_{i<=n} phi(i)``."""
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    i = np.arange(1, int(n) + 1, dtype=float)
    return float(np.exp(np.sum(np.log(spec._phi(i)))))


def joint_transform(spec: SubordinatorSpec, alpha: float, mu: float, s: float) -> float:
    """``E[I_{e_alpha}^s exp(-mu xi_{e_alpha})]`` for an unkilled subordinator.

    Equals ``alpha/(alpha + phi(mu)) * Gamma(s+1) / Gamma_{psi}(s+1)`` with
    ``psi(lam) = phi(lam + mu) + alpha``.
    """
    if spec.kill_rate > 0:
        raise QZeroViolation("the joint transform is only defined for q = phi(0) = 0")
    if not alpha > 0 or not mu >= 0:
        raise ValueError("need alpha > 0 and mu >= 0")
    _check_moment_order(s)
    shifted = tilt(spec, mu) if mu > 0 else spec
    psi = kill(shifted, alpha)
    weight = alpha / (alpha + float(spec.phi(mu)))
    return weight * float(moment_I(psi, s))


def joint_transform_pure_drift(alpha: float, mu: float, s: float) -> float:
    """Closed form ``alpha Gamma(s+1) Gamma(mu+alpha) / Gamma(s+mu+alpha+1)`` for ``phi(lam) = lam``."""
    return alpha * math.exp(math.lgamma(s + 1) + math.lgamma(mu + alpha) - math.lgamma(s + mu + alpha + 1))


def _em1x(x):
    """``exp(-x) - 1 + x`` without cancellation for small ``x``."""
    x = np.asarray(x, dtype=float)
    small = x < 1e-2
    xs = np.where(small, x, 0.0)
    series = xs * xs * (0.5 - xs * (1.0 / 6.0 - xs * (1.0 / 24.0 - xs / 120.0)))
    return np.where(small, series, np.expm1(-np.where(small, 1.0, x)) + x)


def gordon_tail(spec: SubordinatorSpec, n: int, density=None, quadrature=None) -> tuple[float, float]:
    """Return ``(d_n, B_n)``.

    ``d_n = -sum_{k<=n} phi'(k)/phi(k) + log phi(n + 1)`` and
    ``B_n = int e^{-x}(e^{-x} - 1 + x) e^{-n x} / (1 - e^{-x}) H(dx) >= 0``,
    so that ``gamma_phi = B_n - d_n``.
    """
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    k = np.arange(1, int(n) + 1, dtype=float)
    d_n = -math.fsum(spec._phi_prime(k) / spec._phi(k)) + math.log(float(spec._phi(np.asarray(n + 1.0))))
    if density is None:
        from .harmonic import hpm_density

        density = hpm_density(spec)

    def weight(x):
        x = np.asarray(x, dtype=float)
        return np.exp(-(n + 1.0) * x) * _em1x(x) / -np.expm1(-x)

    return d_n, max(0.0, density.integrate(weight, quadrature))
