"""Lévy measures of subordinators.

Each kind is a small frozen dataclass exposing the same surface:

* ``bernstein(lam)``: the jump part of the Laplace exponent,
  ``int (1 - exp(-lam x)) Pi(dx)``; accepts real or complex arrays.
* ``bernstein_prime(lam)``: ``int x exp(-lam x) Pi(dx)``.
* ``tail(x)``: ``Pi((x, inf))``, nonincreasing and right-continuous.
* ``sample_jumps(rng, size, eps)``: i.i.d. jumps of the (possibly
  truncated to ``[eps, inf)``) measure, normalized to a probability law.

Kinds with exponentials in the transform (atoms, tabulated tails) also
implement ``scaled_pair`` so that ratios such as phi'/phi can be formed on
Talbot contours where ``exp(-lam x)`` overflows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import ClassVar

import numpy as np
from scipy import special

from .errors import InvalidSpecError

__all__ = [
    "LevyMeasureSpec",
    "NoJumps",
    "ExponentialJumps",
    "GammaJumps",
    "StableJumps",
    "AtomicJumps",
    "TabulatedJumps",
]


def _positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0:
        raise InvalidSpecError(f"{name} must be a positive finite real, got {value!r}")
    return value


def _nonneg(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value < 0:
        raise InvalidSpecError(f"{name} must be a nonnegative finite real, got {value!r}")
    return value


class LevyMeasureSpec:
    """Common interface of the supported Lévy measure kinds."""

    kind: ClassVar[str] = "abstract"
    complete_monotone_density: ClassVar[bool] = False

    @property
    def total_mass(self) -> float:
        raise NotImplementedError

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.total_mass)

    @property
    def is_zero(self) -> bool:
        return False

    @property
    def support_max(self) -> float:
        """Essential supremum of the support (``inf`` when unbounded)."""
        return math.inf

    def bernstein(self, lam):
        raise NotImplementedError

    def bernstein_prime(self, lam):
        raise NotImplementedError

    def tail(self, x):
        raise NotImplementedError

    def scaled_pair(self, lam):
        """Return ``(B, B', shift)`` with the true values equal to ``exp(shift)`` times ``(B, B')``."""
        lam = np.asarray(lam)
        return self.bernstein(lam), self.bernstein_prime(lam), np.zeros(lam.shape)

    def tilted(self, c: float) -> "LevyMeasureSpec":
        """The measure ``exp(-c x) Pi(dx)``."""
        raise NotImplementedError

    def small_jump_mean(self, eps: float) -> float:
        """``int_(0, eps) x Pi(dx)``: drift lost when jumps below ``eps`` are dropped."""
        return 0.0

    def jump_rate(self, eps: float) -> float:
        """Intensity of the jumps that are simulated (all of them for finite measures)."""
        return self.total_mass

    def sample_jumps(self, rng: np.random.Generator, size: int, eps: float = 0.0) -> np.ndarray:
        raise NotImplementedError

    def to_config(self) -> dict[str, str]:
        raise NotImplementedError


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


@dataclass(frozen=True)
class NoJumps(LevyMeasureSpec):
    kind: ClassVar[str] = "none"
    complete_monotone_density: ClassVar[bool] = True

    @property
    def total_mass(self) -> float:
        return 0.0

    @property
    def is_zero(self) -> bool:
        return True

    @property
    def support_max(self) -> float:
        return 0.0

    def bernstein(self, lam):
        return np.zeros_like(np.asarray(lam, dtype=np.result_type(lam, float)))

    def bernstein_prime(self, lam):
        return np.zeros_like(np.asarray(lam, dtype=np.result_type(lam, float)))

    def tail(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def tilted(self, c: float) -> "NoJumps":
        return self

    def sample_jumps(self, rng, size, eps=0.0):
        raise InvalidSpecError("a zero Lévy measure has no jumps to sample")

    def to_config(self) -> dict[str, str]:
        return {"levy.kind": "none"}


@dataclass(frozen=True)
class ExponentialJumps(LevyMeasureSpec):
    """``Pi(dx) = mass * rate * exp(-rate x) dx``: compound Poisson with exponential jumps."""

    rate: float = 1.0
    mass: float = 1.0
    kind: ClassVar[str] = "exponential"
    complete_monotone_density: ClassVar[bool] = True

    def __post_init__(self):
        object.__setattr__(self, "rate", _positive("levy.rate", self.rate))
        object.__setattr__(self, "mass", _positive("levy.mass", self.mass))

    @property
    def total_mass(self) -> float:
        return self.mass

    def bernstein(self, lam):
        lam = np.asarray(lam)
        return self.mass * lam / (lam + self.rate)

    def bernstein_prime(self, lam):
        lam = np.asarray(lam)
        return self.mass * self.rate / (lam + self.rate) ** 2

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, self.mass, self.mass * np.exp(-self.rate * np.maximum(x, 0.0)))

    def tilted(self, c: float) -> "ExponentialJumps":
        c = _positive("tilt", c)
        return ExponentialJumps(rate=self.rate + c, mass=self.mass * self.rate / (self.rate + c))

    def sample_jumps(self, rng, size, eps=0.0):
        return rng.exponential(1.0 / self.rate, size)

    def to_config(self) -> dict[str, str]:
        return {"levy.kind": self.kind, "levy.rate": _fmt(self.rate), "levy.mass": _fmt(self.mass)}


@dataclass(frozen=True)
class GammaJumps(LevyMeasureSpec):
    """``Pi(dx) = c rate^beta x^(beta-1) exp(-rate x) / Gamma(beta) dx``.

    With ``rate=1`` the jump part of the exponent is ``c (1 - (1+lam)^-beta)``.
    """

    c: float = 1.0
    beta: float = 1.0
    rate: float = 1.0
    kind: ClassVar[str] = "gamma_jumps"

    def __post_init__(self):
        object.__setattr__(self, "c", _positive("levy.c", self.c))
        object.__setattr__(self, "beta", _positive("levy.beta", self.beta))
        object.__setattr__(self, "rate", _positive("levy.rate", self.rate))

    @property
    def complete_monotone_density(self) -> bool:  # type: ignore[override]
        return self.beta <= 1.0

    @property
    def total_mass(self) -> float:
        return self.c

    def bernstein(self, lam):
        lam = np.asarray(lam)
        return self.c * (1.0 - (self.rate / (self.rate + lam)) ** self.beta)

    def bernstein_prime(self, lam):
        lam = np.asarray(lam)
        return self.c * self.beta * self.rate**self.beta * (self.rate + lam) ** (-self.beta - 1.0)

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        return self.c * special.gammaincc(self.beta, self.rate * np.maximum(x, 0.0))

    def tilted(self, c: float) -> "GammaJumps":
        c = _positive("tilt", c)
        factor = (self.rate / (self.rate + c)) ** self.beta
        return GammaJumps(c=self.c * factor, beta=self.beta, rate=self.rate + c)

    def sample_jumps(self, rng, size, eps=0.0):
        return rng.gamma(self.beta, 1.0 / self.rate, size)

    def to_config(self) -> dict[str, str]:
        return {
            "levy.kind": self.kind,
            "levy.c": _fmt(self.c),
            "levy.beta": _fmt(self.beta),
            "levy.rate": _fmt(self.rate),
        }


@dataclass(frozen=True)
class StableJumps(LevyMeasureSpec):
    """(Tempered) stable measure ``scale * g/Gamma(1-g) x^(-1-g) exp(-tempering x) dx``.

    The normalization makes the jump part equal to ``scale * lam**g`` when
    ``tempering == 0`` and ``scale * ((lam + t)**g - t**g)`` otherwise.
    """

    index: float = 0.5
    scale: float = 1.0
    tempering: float = 0.0
    kind: ClassVar[str] = "stable"
    complete_monotone_density: ClassVar[bool] = True

    def __post_init__(self):
        index = float(self.index)
        if not 0.0 < index < 1.0:
            raise InvalidSpecError(f"levy.gamma must lie in (0, 1), got {index!r}")
        object.__setattr__(self, "index", index)
        object.__setattr__(self, "scale", _positive("levy.scale", self.scale))
        object.__setattr__(self, "tempering", _nonneg("levy.tempering", self.tempering))

    @property
    def density_constant(self) -> float:
        return self.scale * self.index / math.gamma(1.0 - self.index)

    @property
    def total_mass(self) -> float:
        return math.inf

    def bernstein(self, lam):
        lam = np.asarray(lam)
        g, t = self.index, self.tempering
        if t == 0.0:
            return self.scale * lam**g
        return self.scale * ((lam + t) ** g - t**g)

    def bernstein_prime(self, lam):
        lam = np.asarray(lam)
        g, t = self.index, self.tempering
        with np.errstate(divide="ignore"):
            return self.scale * g * (lam + t) ** (g - 1.0)

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        g, t = self.index, self.tempering
        with np.errstate(divide="ignore"):
            head = x**-g * np.exp(-t * x)
            if t > 0.0:
                head = head - t**g * math.gamma(1.0 - g) * special.gammaincc(1.0 - g, t * x)
        return self.scale / math.gamma(1.0 - g) * head

    def tilted(self, c: float) -> "StableJumps":
        c = _positive("tilt", c)
        return StableJumps(index=self.index, scale=self.scale, tempering=self.tempering + c)

    def small_jump_mean(self, eps: float) -> float:
        g, t = self.index, self.tempering
        if t == 0.0:
            return self.scale * g * eps ** (1.0 - g) / math.gamma(2.0 - g)
        return self.scale * g * t ** (g - 1.0) * special.gammainc(1.0 - g, t * eps)

    def jump_rate(self, eps: float) -> float:
        if eps <= 0:
            raise InvalidSpecError("stable jumps need a truncation level eps > 0")
        return float(self.tail(eps))

    def sample_jumps(self, rng, size, eps=0.0):
        if eps <= 0:
            raise InvalidSpecError("stable jumps need a truncation level eps > 0")
        g, t = self.index, self.tempering
        out = eps * rng.random(size) ** (-1.0 / g)
        if t > 0.0:
            # Pareto proposal thinned by exp(-t (x - eps)).
            keep = rng.random(size) < np.exp(-t * (out - eps))
            while not keep.all():
                n_bad = int((~keep).sum())
                fresh = eps * rng.random(n_bad) ** (-1.0 / g)
                ok = rng.random(n_bad) < np.exp(-t * (fresh - eps))
                idx = np.flatnonzero(~keep)
                out[idx[ok]] = fresh[ok]
                keep[idx[ok]] = True
        return out

    def to_config(self) -> dict[str, str]:
        out = {"levy.kind": self.kind, "levy.gamma": _fmt(self.index), "levy.scale": _fmt(self.scale)}
        if self.tempering:
            out["levy.tempering"] = _fmt(self.tempering)
        return out


@dataclass(frozen=True)
class AtomicJumps(LevyMeasureSpec):
    """Finitely many atoms ``sum_i m_i delta_{l_i}``."""

    atoms: tuple[tuple[float, float], ...] = ((1.0, 1.0),)
    kind: ClassVar[str] = "atoms"

    def __post_init__(self):
        if not self.atoms:
            raise InvalidSpecError("levy.atoms must list at least one (location, mass) pair")
        cleaned = []
        for loc, mass in self.atoms:
            cleaned.append((_positive("atom location", loc), _positive("atom mass", mass)))
        cleaned.sort()
        object.__setattr__(self, "atoms", tuple(cleaned))

    @property
    def locations(self) -> np.ndarray:
        return np.array([loc for loc, _ in self.atoms])

    @property
    def masses(self) -> np.ndarray:
        return np.array([m for _, m in self.atoms])

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    @property
    def support_max(self) -> float:
        return float(self.locations.max())

    def bernstein(self, lam):
        lam = np.asarray(lam)
        loc, m = self.locations, self.masses
        return np.sum(m * -np.expm1(-lam[..., None] * loc), axis=-1)

    def bernstein_prime(self, lam):
        lam = np.asarray(lam)
        loc, m = self.locations, self.masses
        return np.sum(m * loc * np.exp(-lam[..., None] * loc), axis=-1)

    def scaled_pair(self, lam):
        lam = np.asarray(lam)
        loc, m = self.locations, self.masses
        shift = np.maximum(0.0, -np.real(lam) * loc.max())
        e = np.exp(-lam[..., None] * loc - shift[..., None])
        b = self.total_mass * np.exp(-shift) - np.sum(m * e, axis=-1)
        bp = np.sum(m * loc * e, axis=-1)
        return b, bp, shift

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        loc, m = self.locations, self.masses
        return np.sum(np.where(loc > x[..., None], m, 0.0), axis=-1)

    def tilted(self, c: float) -> "AtomicJumps":
        c = _positive("tilt", c)
        return AtomicJumps(tuple((loc, m * math.exp(-c * loc)) for loc, m in self.atoms))

    def sample_jumps(self, rng, size, eps=0.0):
        p = self.masses / self.total_mass
        return self.locations[rng.choice(len(p), size=size, p=p)]

    def to_config(self) -> dict[str, str]:
        text = ", ".join(f"{_fmt(loc)}:{_fmt(m)}" for loc, m in self.atoms)
        return {"levy.kind": self.kind, "levy.atoms": text}


def _e1(z):
    """``(1 - exp(-z)) / z`` with the removable singularity filled in."""
    z = np.asarray(z)
    small = np.abs(z) < 0.1
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = -np.expm1(-z) / z
    if np.any(small):
        zs = z[small]
        term = np.ones_like(zs)
        acc = np.ones_like(zs)
        for k in range(1, 14):
            term = term * (-zs) / (k + 1)
            acc = acc + term
        out = np.where(small, 0, out)
        out[small] = acc
    return out


def _e2(z):
    """``(1 - exp(-z)(1 + z)) / z**2``, i.e. ``int_0^1 t exp(-z t) dt``."""
    z = np.asarray(z)
    small = np.abs(z) < 0.1
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = (-np.expm1(-z) - z * np.exp(-z)) / z**2
    if np.any(small):
        zs = z[small]
        # sum_k (-z)^k / (k! (k + 2))
        term = np.ones_like(zs)
        acc = np.full_like(zs, 0.5)
        for k in range(1, 16):
            term = term * (-zs) / k
            acc = acc + term / (k + 2)
        out = np.where(small, 0, out)
        out[small] = acc
    return out


@dataclass(frozen=True)
class TabulatedJumps(LevyMeasureSpec):
    """Lévy tail given on a grid and interpolated linearly.

    On ``(0, x_0]`` the tail is held at ``tail[0]``, between grid points it is
    linear, and it drops to zero after ``x_n``. The measure is therefore a
    piecewise-constant density on ``[x_0, x_n]`` plus an atom of mass
    ``tail[-1]`` at ``x_n``, optionally tempered by ``exp(-tempering x)``.
    """

    grid: tuple[float, ...] = (0.0, 1.0)
    tail_values: tuple[float, ...] = (1.0, 0.0)
    tempering: float = 0.0
    kind: ClassVar[str] = "tabulated"

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        tail = np.asarray(self.tail_values, dtype=float)
        if grid.ndim != 1 or grid.size < 2 or grid.shape != tail.shape:
            raise InvalidSpecError("levy.grid and levy.tail must be equal-length lists with at least two points")
        if not (np.all(np.isfinite(grid)) and np.all(np.isfinite(tail))):
            raise InvalidSpecError("tabulated tail contains non-finite values")
        if grid[0] < 0 or np.any(np.diff(grid) <= 0):
            raise InvalidSpecError("levy.grid must be nonnegative and strictly increasing")
        if np.any(tail < 0):
            raise InvalidSpecError("tabulated tail must be nonnegative")
        bad = np.flatnonzero(np.diff(tail) > 0)
        if bad.size:
            i = int(bad[0])
            raise InvalidSpecError(
                f"tabulated tail must be nonincreasing: tail({grid[i + 1]:g}) > tail({grid[i]:g})"
            )
        if tail[0] <= 0:
            raise InvalidSpecError("tabulated tail is identically zero; use levy.kind = none")
        object.__setattr__(self, "grid", tuple(grid.tolist()))
        object.__setattr__(self, "tail_values", tuple(tail.tolist()))
        object.__setattr__(self, "tempering", _nonneg("levy.tempering", self.tempering))

    # piecewise description of the untempered measure
    @property
    def _x(self) -> np.ndarray:
        return np.asarray(self.grid)

    @property
    def _t(self) -> np.ndarray:
        return np.asarray(self.tail_values)

    @property
    def _densities(self) -> np.ndarray:
        return -np.diff(self._t) / np.diff(self._x)

    def _laplace(self, s, shift=None):
        """``L(s) = int exp(-s x) Pi_0(dx)`` and ``-L'(s)``, both times ``exp(-shift)``."""
        s = np.asarray(s)
        x, d = self._x, self._densities
        u, w = x[:-1], np.diff(x)
        if shift is None:
            shift = np.zeros(s.shape)
        sx = s[..., None]
        eu = np.exp(-sx * u - shift[..., None])
        en = np.exp(-s * x[-1] - shift)
        z = sx * w
        e1 = _e1(z)
        e2 = _e2(z)
        lap = np.sum(d * eu * w * e1, axis=-1) + self._t[-1] * en
        mom = np.sum(d * eu * (u * w * e1 + w**2 * e2), axis=-1) + self._t[-1] * x[-1] * en
        return lap, mom

    @property
    def total_mass(self) -> float:
        if self.tempering == 0.0:
            return float(self._t[0])
        return float(self._laplace(np.array(self.tempering))[0])

    @property
    def support_max(self) -> float:
        x, t = self._x, self._t
        if t[-1] > 0:
            return float(x[-1])
        return float(x[np.flatnonzero(t > 0).max() + 1])

    def bernstein(self, lam):
        lam = np.asarray(lam)
        tau = self.tempering
        return self.total_mass - self._laplace(lam + tau)[0]

    def bernstein_prime(self, lam):
        lam = np.asarray(lam)
        return self._laplace(lam + self.tempering)[1]

    def scaled_pair(self, lam):
        lam = np.asarray(lam)
        s = lam + self.tempering
        shift = np.maximum(0.0, -np.real(s) * self._x[-1])
        lap, mom = self._laplace(s, shift)
        return self.total_mass * np.exp(-shift) - lap, mom, shift

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        if self.tempering == 0.0:
            vals = np.interp(x, self._x, self._t)
            vals = np.where(x >= self._x[-1], 0.0, vals)
            return np.where(x < self._x[0], self._t[0], vals)
        return self._tempered_tail(x)

    def _tempered_tail(self, x):
        tau = self.tempering
        gx, d = self._x, self._densities
        x = np.asarray(x, dtype=float)
        flat = np.atleast_1d(x).ravel()
        out = np.empty_like(flat)
        seg = np.array([d[i] * math.exp(-tau * gx[i]) * (gx[i + 1] - gx[i]) * float(_e1(tau * (gx[i + 1] - gx[i])))
                        for i in range(len(d))])
        atom = self._t[-1] * math.exp(-tau * gx[-1])
        after = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
        for j, xv in enumerate(flat):
            if xv >= gx[-1]:
                out[j] = 0.0
                continue
            if xv < gx[0]:
                out[j] = after[0] + atom
                continue
            i = int(np.searchsorted(gx, xv, side="right")) - 1
            w = gx[i + 1] - xv
            partial = d[i] * math.exp(-tau * xv) * w * float(_e1(tau * w))
            out[j] = partial + after[i + 1] + atom
        return out.reshape(x.shape)

    def tilted(self, c: float) -> "TabulatedJumps":
        c = _positive("tilt", c)
        return TabulatedJumps(self.grid, self.tail_values, self.tempering + c)

    def _inverse_tail(self, u):
        """Jump sizes of the untempered law from uniforms ``u`` in (0, 1)."""
        x, t = self._x, self._t
        level = u * t[0]
        out = np.full(level.shape, x[-1])
        above = level > t[-1]
        # np.interp needs increasing abscissae; flat pieces map to their left end.
        tt, xx = t[::-1], x[::-1]
        keep = np.concatenate([[True], np.diff(tt) > 0])
        out[above] = np.interp(level[above], tt[keep], xx[keep])
        return out

    def sample_jumps(self, rng, size, eps=0.0):
        out = self._inverse_tail(rng.random(size))
        tau = self.tempering
        if tau > 0.0:
            x0 = self._x[0]
            keep = rng.random(size) < np.exp(-tau * (out - x0))
            while not keep.all():
                idx = np.flatnonzero(~keep)
                fresh = self._inverse_tail(rng.random(idx.size))
                ok = rng.random(idx.size) < np.exp(-tau * (fresh - x0))
                out[idx[ok]] = fresh[ok]
                keep[idx[ok]] = True
        return out

    def to_config(self) -> dict[str, str]:
        out = {
            "levy.kind": self.kind,
            "levy.grid": ", ".join(_fmt(v) for v in self.grid),
            "levy.tail": ", ".join(_fmt(v) for v in self.tail_values),
        }
        if self.tempering:
            out["levy.tempering"] = _fmt(self.tempering)
        return out
