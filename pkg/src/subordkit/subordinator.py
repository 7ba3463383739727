"""Killed subordinators and their Bernstein functions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidSpecError, NotSpecialRecognized
from .levy import (
    AtomicJumps,
    ExponentialJumps,
    LevyMeasureSpec,
    NoJumps,
    StableJumps,
)

__all__ = [
    "SubordinatorSpec",
    "ConjugatePair",
    "phi",
    "phi_prime",
    "log_derivative",
    "phi_over_lambda",
    "tilt",
    "kill",
    "stable_timechange",
    "conjugate",
    "killed_drift",
    "pure_drift",
    "stable",
    "compound_poisson_exponential",
    "webster_diagnostics",
]


def _check_lambda(lam, strictly_positive: bool = False):
    arr = np.asarray(lam, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("lambda must be finite")
    if strictly_positive and np.any(arr <= 0):
        raise ValueError("lambda must be > 0")
    if np.any(arr < 0):
        raise ValueError("lambda must be >= 0")
    return arr


def _scalar(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


@dataclass(frozen=True)
class SubordinatorSpec:
    """Characteristic triplet ``(q, a, Pi)`` of a possibly killed subordinator.

    ``power`` and ``extra_kill`` describe exponents that are not themselves
    expressible as a triplet in the supported catalog: the Laplace exponent is
    ``(q + a*lam + int (1 - e^{-lam x}) Pi(dx)) ** power + extra_kill``.  A
    ``power`` below one arises from subordination by an independent stable
    subordinator; ``stable_timechange`` only produces it when no closed-form
    triplet exists.
    """

    q: float = 0.0
    a: float = 0.0
    levy: LevyMeasureSpec = field(default_factory=NoJumps)
    label: str = ""
    power: float = 1.0
    extra_kill: float = 0.0

    def __post_init__(self):
        for name in ("q", "a", "extra_kill"):
            value = float(getattr(self, name))
            if not math.isfinite(value) or value < 0:
                raise InvalidSpecError(f"{name} must be a nonnegative finite real, got {value!r}")
            object.__setattr__(self, name, value)
        power = float(self.power)
        if not 0.0 < power <= 1.0:
            raise InvalidSpecError(f"power must lie in (0, 1], got {power!r}")
        object.__setattr__(self, "power", power)
        if not isinstance(self.levy, LevyMeasureSpec):
            raise InvalidSpecError("levy must be a LevyMeasureSpec")
        if power == 1.0 and self.extra_kill:
            object.__setattr__(self, "q", self.q + self.extra_kill)
            object.__setattr__(self, "extra_kill", 0.0)
        if self.a == 0.0 and self.levy.is_zero:
            raise InvalidSpecError(
                "constant Laplace exponents (no drift and no jumps) are not admissible specs"
            )

    # -- structure -----------------------------------------------------
    @property
    def kill_rate(self) -> float:
        """``phi(0)``."""
        return self.q**self.power + self.extra_kill

    @property
    def is_triplet(self) -> bool:
        return self.power == 1.0

    @property
    def is_pure_drift(self) -> bool:
        return self.is_triplet and self.q == 0.0 and self.levy.is_zero

    @property
    def is_killed_drift(self) -> bool:
        return self.is_triplet and self.levy.is_zero

    @property
    def is_complete_bernstein(self) -> bool:
        """Whether the catalog certifies phi as a complete Bernstein function."""
        return bool(self.levy.is_zero or self.levy.complete_monotone_density)

    # -- evaluation ----------------------------------------------------
    def _base(self, lam):
        return self.q + self.a * lam + self.levy.bernstein(lam)

    def _base_prime(self, lam):
        return self.a + self.levy.bernstein_prime(lam)

    def _phi(self, lam):
        """Unchecked evaluation; ``lam`` may be complex."""
        base = self._base(lam)
        if self.power == 1.0:
            return base
        return base**self.power + self.extra_kill

    def _phi_prime(self, lam):
        if self.power == 1.0:
            return self._base_prime(lam)
        base = self._base(lam)
        return self.power * base ** (self.power - 1.0) * self._base_prime(lam)

    def _log_derivative(self, lam):
        """phi'/phi, overflow-safe on complex contours with ``Re lam << 0``."""
        lam = np.asarray(lam)
        if self.extra_kill:
            return self._phi_prime(lam) / self._phi(lam)
        b, bp, shift = self.levy.scaled_pair(lam)
        scale = np.exp(-shift)
        base = (self.q + self.a * lam) * scale + b
        base_prime = self.a * scale + bp
        return self.power * base_prime / base

    def phi(self, lam):
        arr = _check_lambda(lam)
        out = np.where(arr == 0.0, self.kill_rate, self._phi(arr))
        return _scalar(out, lam)

    def phi_prime(self, lam):
        arr = _check_lambda(lam, strictly_positive=True)
        return _scalar(np.asarray(self._phi_prime(arr), dtype=float), lam)

    def log_derivative(self, lam):
        arr = _check_lambda(lam, strictly_positive=True)
        return _scalar(np.asarray(self._phi_prime(arr) / self._phi(arr), dtype=float), lam)

    def tail(self, x):
        """Lévy tail ``q + Pi((x, inf))`` of a triplet spec."""
        if not self.is_triplet:
            raise InvalidSpecError("the Lévy tail of a time-changed spec is not tabulated")
        return self.q + self.levy.tail(x)

    def to_config(self) -> dict[str, str]:
        out = {"kill": format(self.q, ".17g"), "drift": format(self.a, ".17g")}
        out.update(self.levy.to_config())
        if self.power != 1.0:
            out["power"] = format(self.power, ".17g")
        if self.extra_kill:
            out["extra_kill"] = format(self.extra_kill, ".17g")
        if self.label:
            out["label"] = self.label
        return out


# -- constructors used throughout the tests and the CLI -----------------

def killed_drift(q: float, drift: float, label: str = "") -> SubordinatorSpec:
    return SubordinatorSpec(q=q, a=drift, label=label or "killed drift")


def pure_drift(drift: float = 1.0) -> SubordinatorSpec:
    return SubordinatorSpec(a=drift, label="pure drift")


def stable(index: float, scale: float = 1.0, q: float = 0.0) -> SubordinatorSpec:
    return SubordinatorSpec(q=q, levy=StableJumps(index=index, scale=scale), label=f"stable {index:g}")


def compound_poisson_exponential(rate: float = 1.0, mass: float = 1.0, q: float = 0.0,
                                 drift: float = 0.0) -> SubordinatorSpec:
    return SubordinatorSpec(q=q, a=drift, levy=ExponentialJumps(rate=rate, mass=mass),
                            label="exponential jumps")


# -- operations --------------------------------------------------------

def phi(spec: SubordinatorSpec, lam):
    """Laplace exponent ``q + a lam + int (1 - e^{-lam x}) Pi(dx)``; ``phi(0) = q`` exactly."""
    return spec.phi(lam)


def phi_prime(spec: SubordinatorSpec, lam):
    return spec.phi_prime(lam)


def log_derivative(spec: SubordinatorSpec, lam):
    """``phi'(lam) / phi(lam)``, the Laplace transform of ``x H(dx)``."""
    return spec.log_derivative(lam)


def phi_over_lambda(spec: SubordinatorSpec, lam, route: str = "direct", quadrature=None):
    """``phi(lam) / lam``.

    ``route="tail"`` evaluates ``a + int_0^inf e^{-lam x} (q + Pi(x, inf)) dx``
    by quadrature instead of dividing, which gives an independent check.
    """
    arr = _check_lambda(lam, strictly_positive=True)
    if route == "direct":
        return _scalar(np.asarray(spec._phi(arr) / arr, dtype=float), lam)
    if route != "tail":
        raise ValueError(f"unknown route {route!r}")
    from .numerics import integrate_0_inf

    if not spec.is_triplet:
        raise InvalidSpecError("the tail route needs an explicit triplet")
    levy = spec.levy
    out = []
    for value in np.atleast_1d(arr):
        jumps, _ = integrate_0_inf(lambda x, v=value: np.exp(-v * x) * levy.tail(x), quadrature,
                                   breakpoints=_tail_breakpoints(levy))
        out.append(spec.a + spec.q / value + jumps)
    out = np.asarray(out).reshape(arr.shape)
    return _scalar(out, lam)


def _tail_breakpoints(levy: LevyMeasureSpec):
    if isinstance(levy, AtomicJumps):
        return tuple(levy.locations.tolist())
    grid = getattr(levy, "grid", None)
    return tuple(grid) if grid else ()


def tilt(spec: SubordinatorSpec, c: float) -> SubordinatorSpec:
    """Spec with exponent ``lam -> phi(lam + c)``: kill ``phi(c)``, jumps ``e^{-cx} Pi(dx)``."""
    c = float(c)
    if not math.isfinite(c) or c <= 0:
        raise ValueError("tilt parameter c must be > 0")
    base_c = float(spec._base(np.asarray(c)))
    return replace(spec, q=base_c, levy=spec.levy.tilted(c), label=_tag(spec.label, f"tilt {c:g}"))


def kill(spec: SubordinatorSpec, alpha: float) -> SubordinatorSpec:
    alpha = float(alpha)
    if not math.isfinite(alpha) or alpha <= 0:
        raise ValueError("kill rate alpha must be > 0")
    if spec.power == 1.0:
        return replace(spec, q=spec.q + alpha, label=_tag(spec.label, f"kill {alpha:g}"))
    return replace(spec, extra_kill=spec.extra_kill + alpha, label=_tag(spec.label, f"kill {alpha:g}"))


def stable_timechange(spec: SubordinatorSpec, gamma: float) -> SubordinatorSpec:
    """Subordinate by an independent ``gamma``-stable subordinator: ``phi -> phi**gamma``.

    Drift-only and untempered stable inputs are rewritten as explicit
    triplets; everything else keeps the base triplet and records the
    exponent in ``power``.  Either way the harmonic potential scales by
    ``gamma``.
    """
    gamma = float(gamma)
    if not 0.0 < gamma < 1.0:
        raise ValueError("time-change index must lie in (0, 1)")
    label = _tag(spec.label, f"stable time change {gamma:g}")
    if spec.is_killed_drift:
        # (q + a lam)^g = a^g ((lam + q/a)^g - (q/a)^g) + q^g
        levy = StableJumps(index=gamma, scale=spec.a**gamma, tempering=spec.q / spec.a)
        return SubordinatorSpec(q=spec.q**gamma, levy=levy, label=label)
    lv = spec.levy
    if (spec.is_triplet and spec.q == 0.0 and spec.a == 0.0 and isinstance(lv, StableJumps)
            and lv.tempering == 0.0):
        levy = StableJumps(index=lv.index * gamma, scale=lv.scale**gamma)
        return SubordinatorSpec(levy=levy, label=label)
    if spec.extra_kill:
        raise InvalidSpecError("time change of a killed, already time-changed spec is not supported")
    return replace(spec, power=spec.power * gamma, label=label)


def _tag(label: str, what: str) -> str:
    return f"{label} | {what}" if label else what


@dataclass(frozen=True)
class ConjugatePair:
    """Special Bernstein functions ``phi`` and ``phi* = lam / phi``."""

    primal: SubordinatorSpec
    dual: SubordinatorSpec
    rule: str

    def product_residual(self, lam) -> float:
        lam = np.asarray(lam, dtype=float)
        ratio = self.primal._phi(lam) * self.dual._phi(lam) / lam
        return float(np.max(np.abs(ratio - 1.0)))


def conjugate(spec: SubordinatorSpec) -> ConjugatePair:
    """Conjugate ``phi*(lam) = lam / phi(lam)`` for the special catalog.

    Recognized: killed drift, (killed) exponential-jump compound Poisson,
    positive drift plus exponential jumps, and untempered stable laws.
    """
    if not spec.is_triplet:
        raise NotSpecialRecognized("time-changed specs are outside the conjugate catalog")
    q, a, lv = spec.q, spec.a, spec.levy
    if lv.is_zero:
        if q == 0.0:
            raise NotSpecialRecognized("pure drift: lam / (K lam) is constant, not an admissible spec")
        dual = SubordinatorSpec(levy=ExponentialJumps(rate=q / a, mass=1.0 / a), label="conjugate of killed drift")
        return ConjugatePair(spec, dual, "killed drift <-> exponential jumps")
    if isinstance(lv, ExponentialJumps):
        theta, c = lv.rate, lv.mass
        if a == 0.0 and q == 0.0:
            dual = SubordinatorSpec(q=theta / c, a=1.0 / c, label="conjugate of exponential jumps")
            return ConjugatePair(spec, dual, "exponential jumps <-> killed drift")
        if a == 0.0:
            theta2 = q * theta / (q + c)
            dual = SubordinatorSpec(
                a=1.0 / (q + c),
                levy=ExponentialJumps(rate=theta2, mass=theta * c / (q + c) ** 2),
                label="conjugate of killed exponential jumps",
            )
            return ConjugatePair(spec, dual, "killed exponential jumps <-> drift plus exponential jumps")
        if q == 0.0:
            theta2 = theta + c / a
            dual = SubordinatorSpec(
                q=theta / (a * theta + c),
                levy=ExponentialJumps(rate=theta2, mass=c / (a * a * theta2)),
                label="conjugate of drift plus exponential jumps",
            )
            return ConjugatePair(spec, dual, "drift plus exponential jumps <-> killed exponential jumps")
    if isinstance(lv, StableJumps) and lv.tempering == 0.0 and q == 0.0 and a == 0.0:
        dual = SubordinatorSpec(levy=StableJumps(index=1.0 - lv.index, scale=1.0 / lv.scale),
                                label=f"stable {1.0 - lv.index:g}")
        return ConjugatePair(spec, dual, "stable pair")
    raise NotSpecialRecognized(f"no conjugate rule for {spec.label or lv.kind}")


def webster_diagnostics(spec: SubordinatorSpec, grid=None) -> dict[str, float | bool]:
    """Numerical checks of log-concavity and ``phi(s+1)/phi(s) -> 1``."""
    if grid is None:
        grid = np.geomspace(1e-2, 1e3, 200)
    grid = np.asarray(grid, dtype=float)
    logs = np.log(spec._phi(grid))
    h1, h2 = np.diff(grid)[:-1], np.diff(grid)[1:]
    second = 2.0 * (h1 * logs[2:] - (h1 + h2) * logs[1:-1] + h2 * logs[:-2]) / (h1 * h2 * (h1 + h2))
    s = 1e6
    ratio = float(spec._phi(np.asarray(s + 1.0)) / spec._phi(np.asarray(s)))
    return {
        "max_second_difference_log_phi": float(second.max()),
        "log_concave": bool(second.max() <= 1e-8),
        "shift_ratio_at_1e6": ratio,
        "shift_limit_ok": bool(abs(ratio - 1.0) < 1e-3),
    }
