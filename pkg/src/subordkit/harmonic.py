"""Harmonic potential measures and the laws built from them.

The harmonic potential measure ``H(dx) = int_0^inf P(xi_t in dx) dt/t`` is
described by its density ``rho`` with respect to ``dx/x``; equivalently
``rho`` is the inverse Laplace transform of ``phi'/phi``.  ``log I`` is
infinitely divisible exactly when ``rho <= 1``.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy import fft as sfft
from scipy import integrate, optimize, special

from .errors import (
    InvalidSpecError,
    InversionUnstable,
    NoClosedFormPotential,
    ValidationFailed,
)
from .levy import AtomicJumps, ExponentialJumps, GammaJumps, StableJumps, TabulatedJumps
from .numerics import (
    InversionConfig,
    QuadratureConfig,
    integrate_interval,
    laplace_invert,
    mittag_leffler,
)
from .subordinator import ConjugatePair, SubordinatorSpec

__all__ = [
    "HarmonicDensity",
    "IdVerdict",
    "hpm_density",
    "laplace_consistency",
    "id_test_logI",
    "undershoot_laplace_G",
    "undershoot_laplace_U",
    "undershoot_density",
    "GLaw",
    "G_law",
    "G_density",
    "potential_density",
    "logR_exponent",
    "logR_levy_density",
    "SdReport",
    "sd_diagnostic",
    "conjugate_check",
    "convolution_identity_check",
]


@dataclass(frozen=True)
class HarmonicDensity:
    """Density ``rho`` of ``H`` with respect to ``dx/x``, plus any atoms of ``H``.

    Attributes
    ----------
    rho : callable
        Vectorized ``x -> rho(x)`` for the absolutely continuous part.
    provenance : str
        ``"catalog:<rule>"``, ``"numeric-inversion"`` or ``"numeric-renewal"``.
    atoms : callable or None
        ``x_max -> (locations, masses)`` of the atoms of ``H`` in ``(0, x_max]``.
    breakpoints : tuple
        Points where ``rho`` is not smooth (used to split quadrature).
    """

    rho: Callable
    provenance: str
    atoms: Callable | None = None
    breakpoints: tuple = ()
    purely_atomic: bool = False
    table: tuple | None = field(default=None, repr=False)

    def __call__(self, x):
        arr = np.asarray(x, dtype=float)
        if np.any(arr <= 0):
            raise ValueError("rho is defined for x > 0")
        out = np.asarray(self.rho(arr), dtype=float)
        return float(out) if arr.ndim == 0 else out

    @property
    def has_atoms(self) -> bool:
        return self.atoms is not None

    @property
    def is_catalog(self) -> bool:
        return self.provenance.startswith("catalog")

    def atomic_part(self, x_max: float = 50.0):
        if self.atoms is None:
            return np.empty(0), np.empty(0)
        return self.atoms(float(x_max))

    def integrate(self, f: Callable, quadrature: QuadratureConfig | None = None,
                  cutoff: float = 80.0) -> float:
        """``int_(0, cutoff] f(x) H(dx)``.

        Every integrand used in the package decays at least like ``e^{-x}``,
        so the default cut-off leaves a remainder far below double precision.
        """
        total = 0.0
        if self.table is not None:
            xs, rs = self.table
            keep = (xs > 0) & (xs <= cutoff)
            x, r = xs[keep], rs[keep]
            vals = np.asarray(f(x), dtype=float) * r / x
            # rho(x)/x is regular at 0: extend linearly to the origin
            total = integrate.simpson(vals, x=x) + 0.5 * x[0] * vals[0]
        elif not self.purely_atomic:
            def integrand(x):
                return float(f(x) * self.rho(np.asarray(x)) / x) if x > 0 else 0.0

            cuts = sorted({0.0, 1.0, cutoff} | {b for b in self.breakpoints if 0 < b < cutoff})
            for lo, hi in zip(cuts[:-1], cuts[1:]):
                total += integrate_interval(integrand, lo, hi, quadrature)[0]
        if self.atoms is not None:
            loc, mass = self.atoms(cutoff)
            if loc.size:
                total += math.fsum(np.asarray(f(loc), dtype=float) * mass)
        return total

    @classmethod
    def from_table(cls, x: Sequence[float], rho: Sequence[float], provenance: str = "tabulated"):
        """Piecewise-linear density from samples (diagnostics and tests)."""
        xs, rs = np.asarray(x, dtype=float), np.asarray(rho, dtype=float)
        return cls(lambda t: np.interp(t, xs, rs), provenance, breakpoints=tuple(xs.tolist()))


@dataclass(frozen=True)
class IdVerdict:
    """Outcome of the infinite-divisibility test for ``log I``.

    ``verdict`` is one of ``"InfinitelyDivisible"``, ``"NotID"``,
    ``"Inconclusive"`` and ``"NotID_Atomic"``.
    """

    verdict: str
    sup_rho: float
    witness: float | None = None
    rho_witness: float | None = None
    band: tuple[float, float] | None = None
    method: str = ""
    notes: tuple[str, ...] = ()

    @property
    def is_id(self) -> bool:
        return self.verdict == "InfinitelyDivisible"


# ---------------------------------------------------------------------------
# catalog rules
# ---------------------------------------------------------------------------

def _drift_rho(q, a):
    return lambda x: np.exp(-q * np.asarray(x) / a)


def _exp_cp_rho(q, theta, c):
    slow = q * theta / (q + c)
    return lambda x: np.exp(-slow * np.asarray(x)) - np.exp(-theta * np.asarray(x))


def _drift_exp_roots(q, a, theta, c):
    b = a * theta + q + c
    disc = math.sqrt(max(b * b - 4.0 * a * q * theta, 0.0))
    r2 = -(b + disc) / (2.0 * a)
    r1 = (q * theta / a) / r2 if r2 != 0 else 0.0  # product of roots, avoids cancellation
    return r1, r2


def _drift_exp_rho(q, a, theta, c):
    r1, r2 = _drift_exp_roots(q, a, theta, c)

    def rho(x):
        x = np.asarray(x)
        return np.exp(r1 * x) + np.exp(r2 * x) - np.exp(-theta * x)

    return rho


def _stable_rho(gamma, scale, tempering, q):
    shift = q - scale * tempering**gamma
    coeff = shift / scale

    def rho(x):
        x = np.asarray(x, dtype=float)
        ml = mittag_leffler(gamma, -coeff * x**gamma) if coeff else np.ones(x.shape)
        return gamma * np.exp(-tempering * x) * ml

    return rho


def _gamma_nodrift_rho(c, beta, rate, q):
    log_p = math.log(c / (c + q))

    def rho(x):
        y = rate * np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty(y.shape)
        for i, yi in enumerate(y.ravel()):
            n_max = int(math.ceil((yi + 12.0 * math.sqrt(yi + 1.0) + 60.0) / beta)) + 1
            n = np.arange(1, n_max + 1, dtype=float)
            logs = n * log_p + n * beta * math.log(yi) - special.gammaln(n * beta + 1.0)
            out.flat[i] = beta * math.exp(special.logsumexp(logs) - yi)
        return out.reshape(np.shape(x))

    return rho


def _log_hyp1f1(a, b, z):
    val = special.hyp1f1(a, b, z)
    out = np.log(np.where(val > 0, val, np.nan))
    bad = ~np.isfinite(out)
    if np.any(bad):
        import mpmath as mp

        for idx in np.flatnonzero(bad):
            out.flat[idx] = float(mp.log(mp.hyp1f1(a.flat[idx], b.flat[idx], z)))
    return out


def _gamma_drift_rho(c, beta, rate, q, a):
    drift = a * rate
    log_k = math.log(c / drift)
    big_k = (c + q) / drift

    def one(y):
        logs, n0 = [], 1
        best = -np.inf
        while True:
            n = np.arange(n0, n0 + 64, dtype=float)
            b = n * (1.0 + beta)
            lt = (n * log_k + b * math.log(y) - np.log(n) - special.gammaln(b)
                  + _log_hyp1f1(n, b, (1.0 - big_k) * y))
            logs.append(lt)
            best = max(best, float(lt.max()))
            if lt[-1] < best - 45.0 and lt[-1] < lt[-2]:
                break
            n0 += 64
            if n0 > 200000:
                raise NoClosedFormPotential("gamma-jump series did not converge")
        series = math.exp(special.logsumexp(np.concatenate(logs)) - y)
        return math.exp(-big_k * y) + series

    def rho(x):
        y = rate * np.asarray(x, dtype=float)
        return np.vectorize(one, otypes=[float])(y)

    return rho


def _lattice_sums(levy: AtomicJumps, x_max: float, max_points: int = 400000):
    """Distribution of ``(n, S_n)`` restricted to ``S_n <= x_max`` for atomic jumps."""
    loc = levy.locations
    prob = levy.masses / levy.total_mass
    layers = [(np.zeros(1), np.ones(1))]
    count = 0
    while True:
        vals, probs = layers[-1]
        new_v = (vals[:, None] + loc[None, :]).ravel()
        new_p = (probs[:, None] * prob[None, :]).ravel()
        keep = new_v <= x_max * (1 + 1e-12)
        if not np.any(keep):
            break
        key = np.round(new_v[keep], 10)
        uniq, inv = np.unique(key, return_inverse=True)
        layers.append((uniq, np.bincount(inv, weights=new_p[keep])))
        count += uniq.size
        if count > max_points:
            raise NoClosedFormPotential("too many lattice points for the atomic renewal sum")
    return layers[1:]


def _atomic_h(levy: AtomicJumps, q: float):
    c = levy.total_mass
    log_p = math.log(c / (c + q))

    @functools.lru_cache(maxsize=8)
    def atoms(x_max):
        locs, masses = [], []
        for n, (vals, probs) in enumerate(_lattice_sums(levy, x_max), start=1):
            locs.append(vals)
            masses.append(probs * math.exp(n * log_p) / n)
        if not locs:
            return np.empty(0), np.empty(0)
        v = np.concatenate(locs)
        m = np.concatenate(masses)
        uniq, inv = np.unique(np.round(v, 10), return_inverse=True)
        return uniq, np.bincount(inv, weights=m)

    return atoms


def _atomic_drift_rho(levy: AtomicJumps, q: float, a: float):
    c = levy.total_mass

    @functools.lru_cache(maxsize=8)
    def table(x_max):
        ns, js, ps = [0.0], [0.0], [1.0]
        for n, (vals, probs) in enumerate(_lattice_sums(levy, x_max), start=1):
            ns.extend([float(n)] * vals.size)
            js.extend(vals.tolist())
            ps.extend(probs.tolist())
        return np.array(ns), np.array(js), np.log(np.array(ps))

    def rho(x):
        x = np.asarray(x, dtype=float)
        flat = np.atleast_1d(x).ravel()
        bound = 2.0 ** math.ceil(math.log2(max(float(flat.max()), 1.0)))
        n, j, logp = table(bound)
        out = np.empty(flat.shape)
        for i, xi in enumerate(flat):
            mask = j < xi
            t = (xi - j[mask]) / a
            with np.errstate(divide="ignore"):
                logs = (logp[mask] + n[mask] * np.log(c * t) - special.gammaln(n[mask] + 1.0)
                        - (q + c) * t - np.log(a * t))
            out[i] = xi * math.exp(special.logsumexp(logs)) if logs.size else 0.0
        return out.reshape(x.shape)

    return rho, tuple(sorted(set(levy.locations.tolist())))


def _tabulated_lattice(levy: TabulatedJumps, step: float, size: int) -> np.ndarray:
    """Linear binning of a tabulated Lévy measure onto ``{0, step, 2 step, ...}``.

    Each lattice cell's mass is split between its two end points so that the
    cell's first moment is preserved; this makes the lattice law accurate
    to second order in ``step``.
    """
    from .levy import _e1, _e2

    gx, d, tau = levy._x, levy._densities, levy.tempering
    widths = np.diff(gx)
    seg0 = d * np.exp(-tau * gx[:-1]) * widths * _e1(tau * widths)
    seg1 = d * np.exp(-tau * gx[:-1]) * (gx[:-1] * widths * _e1(tau * widths) + widths**2 * _e2(tau * widths))
    cum0 = np.concatenate([[0.0], np.cumsum(seg0)])
    cum1 = np.concatenate([[0.0], np.cumsum(seg1)])
    edges = np.arange(size + 1) * step
    inside = (edges > gx[0]) & (edges < gx[-1])
    i = np.clip(np.searchsorted(gx, edges, side="right") - 1, 0, len(d) - 1)
    w = np.where(inside, edges - gx[i], 0.0)
    e0 = np.exp(-tau * gx[i])
    c0 = np.where(edges >= gx[-1], cum0[-1], np.where(inside, cum0[i] + d[i] * e0 * w * _e1(tau * w), 0.0))
    c1 = np.where(edges >= gx[-1], cum1[-1],
                  np.where(inside, cum1[i] + d[i] * e0 * (gx[i] * w * _e1(tau * w) + w**2 * _e2(tau * w)), 0.0))
    mass = np.diff(c0)
    moment = np.diff(c1)
    frac = np.divide(moment, mass, out=np.full(size, 0.5 * step), where=mass > 0) / step - np.arange(size)
    frac = np.clip(frac, 0.0, 1.0)
    out = np.zeros(size + 1)
    out[:-1] += mass * (1.0 - frac)
    out[1:] += mass * frac
    atom = levy.tail_values[-1] * math.exp(-tau * gx[-1])
    if atom > 0:
        k, r = divmod(gx[-1] / step, 1.0)
        k = int(k)
        out[k] += atom * (1.0 - r)
        out[k + 1] += atom * r
    return out[:size]


def _renewal_rho(spec: SubordinatorSpec, x_max: float = 1000.0, step: float | None = None):
    """Compound Poisson without drift: ``H = -log(1 - p F)`` on a damped lattice via FFT.

    ``F`` is the normalized jump law, ``p = c / (c + q)``.  Linear binning
    rounds every jump to a neighbouring lattice point with the mean
    preserved (including rounding small jumps to 0), so ``S_n`` on the
    lattice differs from the true partial sum by mean-zero noise of
    variance ``O(n step^2)``.
    """
    levy = spec.levy
    c = levy.total_mass
    p = c / (c + spec.q)
    if step is None:
        step = min(1e-3, float(np.min(np.diff(levy.grid))) / 20.0)
    size = sfft.next_fast_len(int(math.ceil(2.0 * x_max / step)))
    period = size * step
    masses = _tabulated_lattice(levy, step, size)
    masses /= c
    j = np.arange(size)
    damp = 36.0 / period
    z = p * masses * np.exp(-damp * j * step)
    h = sfft.irfft(-np.log1p(-sfft.rfft(z)), n=size) * np.exp(damp * j * step)
    keep = j * step <= x_max
    xs = (j * step)[keep]
    rho_grid = (j * h)[keep]

    def rho(x):
        x = np.asarray(x, dtype=float)
        if np.any(x > x_max):
            raise ValueError(f"renewal table only covers x <= {x_max:g}")
        return np.interp(x, xs, rho_grid)

    return rho, (xs, rho_grid)


def _numeric_rho(spec: SubordinatorSpec, cfg: InversionConfig | None):
    def F(lam):
        return spec._log_derivative(lam)

    def rho(x):
        try:
            with np.errstate(all="ignore"):
                return laplace_invert(F, x, cfg)
        except ValidationFailed as exc:
            raise InversionUnstable(str(exc)) from exc

    return rho


def _catalog(spec: SubordinatorSpec):
    """Closed-form ``rho`` for a plain triplet, or ``None``."""
    q, a, lv = spec.q, spec.a, spec.levy
    if lv.is_zero:
        return "drift", _drift_rho(q, a), None, ()
    if isinstance(lv, ExponentialJumps):
        if a == 0.0:
            return "exponential jumps", _exp_cp_rho(q, lv.rate, lv.mass), None, ()
        return "drift plus exponential jumps", _drift_exp_rho(q, a, lv.rate, lv.mass), None, ()
    if isinstance(lv, StableJumps) and a == 0.0 and q >= lv.scale * lv.tempering**lv.index * (1 - 1e-14):
        q_eff = max(q, lv.scale * lv.tempering**lv.index)
        return "killed stable (Mittag-Leffler)", _stable_rho(lv.index, lv.scale, lv.tempering, q_eff), None, ()
    if isinstance(lv, GammaJumps):
        if a == 0.0:
            return "gamma jumps", _gamma_nodrift_rho(lv.c, lv.beta, lv.rate, q), None, ()
        return "drift plus gamma jumps", _gamma_drift_rho(lv.c, lv.beta, lv.rate, q, a), None, ()
    if isinstance(lv, AtomicJumps):
        if a == 0.0:
            return "atomic renewal", (lambda x: np.zeros(np.shape(x))), _atomic_h(lv, q), ()
        rho, breaks = _atomic_drift_rho(lv, q, a)
        return "drift plus atomic jumps", rho, None, breaks
    return None


@functools.lru_cache(maxsize=256)
def _hpm_cached(spec: SubordinatorSpec, method: str, cfg: InversionConfig | None) -> HarmonicDensity:
    if method in ("auto", "catalog") and spec.extra_kill == 0.0:
        base = replace(spec, power=1.0) if spec.power != 1.0 else spec
        found = _catalog(base)
        if found is not None:
            rule, rho, atoms, breaks = found
            if spec.power != 1.0:
                inner, g = rho, spec.power
                rho = lambda x, inner=inner, g=g: g * inner(x)  # noqa: E731
                rule = f"{rule} | time change {spec.power:g}"
                if atoms is not None:
                    raise InvalidSpecError("time change of an atomic-renewal spec")
            return HarmonicDensity(rho, f"catalog:{rule}", atoms, breaks, purely_atomic=atoms is not None)
        if (spec.is_triplet and spec.a == 0.0 and isinstance(spec.levy, TabulatedJumps)
                and method == "auto"):
            has_atom = spec.levy.tail_values[-1] > 0
            breaks = tuple(spec.levy.grid)
            rho, table = _renewal_rho(spec)
            return HarmonicDensity(rho, "numeric-renewal", breakpoints=breaks, table=table,
                                   atoms=_unresolved_atoms if has_atom else None)
    if method == "catalog":
        raise NoClosedFormPotential(f"no closed-form harmonic density for {spec.label or spec.levy.kind}")
    density = HarmonicDensity(_numeric_rho(spec, cfg), "numeric-inversion",
                              breakpoints=_kinks(spec))
    return density


def _unresolved_atoms(x_max):
    # a jump-law atom without drift gives H atoms; they are not separated from the lattice table
    return np.empty(0), np.empty(0)


def _kinks(spec):
    grid = getattr(spec.levy, "grid", None)
    if grid:
        return tuple(grid)
    if isinstance(spec.levy, AtomicJumps):
        return tuple(spec.levy.locations.tolist())
    return ()


def hpm_density(spec: SubordinatorSpec, method: str = "auto",
                inversion: InversionConfig | None = None, validate: bool = True) -> HarmonicDensity:
    """Harmonic potential density of ``spec``.

    Parameters
    ----------
    method : {"auto", "catalog", "numeric"}
        ``"auto"`` prefers a closed form and falls back to numerical
        inversion of ``phi'/phi``; ``"numeric"`` always inverts.
    validate : bool
        For numerical inversion, re-transform the result at a few probes and
        raise :class:`InversionUnstable` if it misses ``phi'/phi``.
    """
    if method not in ("auto", "catalog", "numeric"):
        raise ValueError(f"unknown method {method!r}")
    density = _hpm_cached(spec, method, inversion)
    if validate and density.provenance == "numeric-inversion":
        _validate_numeric(spec, density, inversion)
    return density


_VALID: set = set()


def _validate_numeric(spec, density, inversion):
    if (spec, inversion) in _VALID:
        return
    threshold = (inversion or InversionConfig()).residual * 10.0
    worst = 0.0
    for lam in (1.0, 2.0, 5.0):
        val = density.integrate(lambda x, lam=lam: x * math.exp(-lam * x) if np.ndim(x) == 0
                                else x * np.exp(-lam * x),
                                QuadratureConfig(abs_tol=1e-11, rel_tol=1e-9))
        ref = float(spec._log_derivative(np.asarray(lam)))
        worst = max(worst, abs(val - ref) / abs(ref))
    if worst > max(threshold, 1e-6):
        raise InversionUnstable(f"forward check of the inverted density failed (relative residual {worst:.3g})")
    _VALID.add((spec, inversion))


def laplace_consistency(spec: SubordinatorSpec, density: HarmonicDensity | None = None,
                        lams: Sequence[float] = (2.0, 5.0, 10.0)) -> float:
    """``max |int (e^{-x} - e^{-lam x}) H(dx) - log(phi(lam)/phi(1))|`` over ``lams``."""
    density = density or hpm_density(spec)
    worst = 0.0
    for lam in lams:
        val = density.integrate(lambda x, lam=lam: np.exp(-np.asarray(x)) - np.exp(-lam * np.asarray(x)))
        ref = math.log(float(spec._phi(np.asarray(lam))) / float(spec._phi(np.asarray(1.0))))
        worst = max(worst, abs(val - ref))
    return worst


# ---------------------------------------------------------------------------
# infinite divisibility of log I
# ---------------------------------------------------------------------------

def _bounded_jumps_unkilled(spec: SubordinatorSpec) -> bool:
    return spec.is_triplet and spec.kill_rate == 0.0 and not spec.levy.is_zero and math.isfinite(spec.levy.support_max)


def id_test_logI(spec: SubordinatorSpec, grid: Sequence[float] | None = None, tol: float = 1e-4,
                 density: HarmonicDensity | None = None) -> IdVerdict:
    """Decide whether ``log I`` is infinitely divisible (``rho <= 1`` everywhere).

    Order of rules: atoms of ``H`` (``NotID_Atomic``); a complete Bernstein
    exponent (``rho + rho* = 1`` forces ``rho <= 1``); otherwise a search of
    ``sup rho`` on a log grid (default 400 points on ``[1e-3, 1e3]``) with
    golden-section refinement around the maximum.  Unkilled subordinators
    with bounded jumps are never infinitely divisible; for them the search
    only supplies the witness.
    """
    notes: list[str] = []
    density = density or hpm_density(spec)
    if density.has_atoms:
        return IdVerdict("NotID_Atomic", math.inf, method="atomic harmonic measure",
                         notes=("H has atoms, so dx - x H(dx) cannot be nonnegative",))
    if spec.is_complete_bernstein:
        if spec.is_pure_drift:
            notes.append("pure drift: rho = 1")
        return IdVerdict("InfinitelyDivisible", 1.0, method="complete Bernstein certificate",
                         notes=tuple(notes) + ("complete Bernstein exponent: rho = 1 - rho* <= 1",))
    xs = np.geomspace(1e-3, 1e3, 400) if grid is None else np.sort(np.asarray(grid, dtype=float))
    values = np.asarray(density(xs), dtype=float)
    k = int(np.nanargmax(values))
    x_star, sup = float(xs[k]), float(values[k])
    lo, hi = xs[max(k - 1, 0)], xs[min(k + 1, xs.size - 1)]
    if hi > lo:
        res = optimize.minimize_scalar(lambda u: -float(density(math.exp(u))),
                                       bounds=(math.log(lo), math.log(hi)), method="bounded",
                                       options={"xatol": 1e-10})
        if -res.fun > sup:
            x_star, sup = float(math.exp(res.x)), float(-res.fun)
    bounded = _bounded_jumps_unkilled(spec)
    if sup > 1.0 + tol:
        method = "bounded jumps without killing; witness search" if bounded else "grid search"
        return IdVerdict("NotID", sup, x_star, sup, method=method)
    if bounded:
        return IdVerdict("NotID", sup, None, None, method="bounded jumps without killing",
                         notes=("no witness with rho > 1 + tol located on the searched window",))
    if sup < 1.0 - tol:
        if not density.is_catalog:
            notes.append("on searched window")
        return IdVerdict("InfinitelyDivisible", sup, x_star, sup, method="grid search", notes=tuple(notes))
    return IdVerdict("Inconclusive", sup, x_star, sup, band=(1.0 - tol, 1.0 + tol), method="grid search")


# ---------------------------------------------------------------------------
# last position below an exponential level, undershoot
# ---------------------------------------------------------------------------

def _pos(name, v):
    v = float(v)
    if not (math.isfinite(v) and v > 0):
        raise ValueError(f"{name} must be > 0")
    return v


def undershoot_laplace_G(spec: SubordinatorSpec, alpha: float, lam) -> float:
    """``E exp(-lam G_{e_alpha}) = phi(alpha) / phi(alpha + lam)``."""
    alpha = _pos("alpha", alpha)
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ValueError("lam must be >= 0")
    out = spec.phi(alpha) / spec.phi(alpha + lam)
    return float(out) if np.ndim(out) == 0 else out


def undershoot_laplace_U(spec: SubordinatorSpec, alpha: float, lam) -> float:
    """``E exp(-lam (e_alpha - G_{e_alpha})) = alpha phi(alpha + lam) / (phi(alpha) (alpha + lam))``."""
    alpha = _pos("alpha", alpha)
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ValueError("lam must be >= 0")
    out = alpha * spec.phi(alpha + lam) / (spec.phi(alpha) * (alpha + lam))
    return float(out) if np.ndim(out) == 0 else out


def undershoot_density(spec: SubordinatorSpec, alpha: float, x) -> tuple[float, float]:
    """Law of the undershoot: ``(atom at 0, density at x)``.

    ``(alpha/phi(alpha)) (a delta_0 + e^{-alpha x} (q + Pi(x, inf)) dx)``.
    """
    alpha = _pos("alpha", alpha)
    if not spec.is_triplet:
        raise NoClosedFormPotential("the undershoot law needs an explicit Lévy tail")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("x must be >= 0")
    norm = alpha / spec.phi(alpha)
    dens = norm * np.exp(-alpha * x) * spec.tail(x)
    return norm * spec.a, (float(dens) if dens.ndim == 0 else dens)


@dataclass(frozen=True)
class GLaw:
    """Law of ``G_{e_alpha}``: an atom at 0 plus a density, with its mean."""

    atom: float
    density: Callable
    mean: float


def potential_density(spec: SubordinatorSpec):
    """Potential measure ``V`` as ``(atom at 0, density)`` for the closed-form catalog."""
    if not spec.is_triplet:
        raise NoClosedFormPotential("no closed-form potential for time-changed specs")
    q, a, lv = spec.q, spec.a, spec.levy
    if lv.is_zero:
        return 0.0, lambda x: np.exp(-q * np.asarray(x) / a) / a
    if isinstance(lv, ExponentialJumps):
        theta, c = lv.rate, lv.mass
        if a == 0.0:
            slow = q * theta / (q + c)
            coeff = c * theta / (q + c) ** 2
            return 1.0 / (q + c), lambda x: coeff * np.exp(-slow * np.asarray(x))
        r1, r2 = _drift_exp_roots(q, a, theta, c)
        w1, w2 = (r1 + theta) / (a * (r1 - r2)), (r2 + theta) / (a * (r2 - r1))
        return 0.0, lambda x: w1 * np.exp(r1 * np.asarray(x)) + w2 * np.exp(r2 * np.asarray(x))
    if isinstance(lv, StableJumps) and lv.tempering == 0.0 and q == 0.0 and a == 0.0:
        g, s = lv.index, lv.scale
        return 0.0, lambda x: np.asarray(x) ** (g - 1.0) / (s * math.gamma(g))
    raise NoClosedFormPotential(f"no closed-form potential density for {spec.label or lv.kind}")


def G_law(spec: SubordinatorSpec, alpha: float) -> GLaw:
    """``P(G_{e_alpha} in dx) = phi(alpha) e^{-alpha x} V(dx)``, mean ``phi'(alpha)/phi(alpha)``."""
    alpha = _pos("alpha", alpha)
    v_atom, v = potential_density(spec)
    scale = float(spec.phi(alpha))
    return GLaw(scale * v_atom,
                lambda x: scale * np.exp(-alpha * np.asarray(x)) * v(x),
                float(spec.log_derivative(alpha)))


def G_density(spec: SubordinatorSpec, alpha: float, x):
    """Density of ``G_{e_alpha}`` at ``x > 0`` (the atom at 0 is in :func:`G_law`)."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("x must be > 0")
    out = G_law(spec, alpha).density(x)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# log R
# ---------------------------------------------------------------------------

def _em1x(x):
    from .gen_gamma import _em1x as impl

    return impl(x)


def logR_exponent(spec: SubordinatorSpec, lam: float, route: str = "integral",
                  density: HarmonicDensity | None = None) -> float:
    """``log E[R^lam] = log Gamma_phi(lam + 1)``.

    ``route="integral"`` uses ``-lam gamma_phi + int (e^{-lam x} - 1 + lam x)
    e^{-x} / (1 - e^{-x}) H(dx)``; ``route="gamma"`` the product formula.
    """
    from .gen_gamma import GenGammaEvaluator

    lam = float(lam)
    if not (math.isfinite(lam) and lam >= 0):
        raise ValueError("lam must be >= 0")
    if lam == 0.0:
        return 0.0
    ev = GenGammaEvaluator.from_spec(spec)
    if route == "gamma":
        return float(ev.log_gamma(lam + 1.0))
    if route != "integral":
        raise ValueError(f"unknown route {route!r}")
    density = density or hpm_density(spec)

    def weight(x):
        x = np.asarray(x, dtype=float)
        return _em1x(lam * x) * np.exp(-x) / -np.expm1(-x)

    return -lam * ev.euler_constant + density.integrate(weight)


def logR_levy_density(spec: SubordinatorSpec, x, density: HarmonicDensity | None = None):
    """Lévy density of ``log R`` at ``-x``: ``rho(x) / (x (e^x - 1))``."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("x must be > 0")
    density = density or hpm_density(spec)
    with np.errstate(over="ignore"):
        out = density(x) / (x * np.expm1(x))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class SdReport:
    """Monotonicity diagnostic for ``x -> rho(x) / (e^x - 1)``."""

    nonincreasing: bool
    first_violation: float | None
    values: np.ndarray = field(repr=False)


def sd_diagnostic(spec_or_density, grid: Sequence[float], tol: float = 1e-12) -> SdReport:
    """Check that ``x * logR_levy_density(x) = rho(x)/(e^x - 1)`` is nonincreasing on ``grid``.

    Consistent with (but not a proof of) self-decomposability of ``log R``.
    """
    density = spec_or_density if isinstance(spec_or_density, HarmonicDensity) else hpm_density(spec_or_density)
    xs = np.sort(np.asarray(grid, dtype=float))
    with np.errstate(over="ignore"):
        vals = density(xs) / np.expm1(xs)
    rises = np.flatnonzero(np.diff(vals) > tol * np.maximum(np.abs(vals[:-1]), 1e-300))
    first = float(xs[rises[0] + 1]) if rises.size else None
    return SdReport(rises.size == 0, first, vals)


# ---------------------------------------------------------------------------
# identities
# ---------------------------------------------------------------------------

def conjugate_check(pair: ConjugatePair, grid: Sequence[float]) -> float:
    """``max |rho(x) + rho*(x) - 1|`` over ``grid``."""
    xs = np.asarray(grid, dtype=float)
    rho = hpm_density(pair.primal)(xs)
    rho_star = hpm_density(pair.dual)(xs)
    return float(np.max(np.abs(rho + rho_star - 1.0)))


def _jump_density(levy):
    if isinstance(levy, ExponentialJumps):
        return lambda y: levy.mass * levy.rate * np.exp(-levy.rate * y)
    if isinstance(levy, StableJumps) and levy.tempering == 0.0:
        k = levy.scale * levy.index / math.gamma(1.0 - levy.index)
        return lambda y: k * y ** (-1.0 - levy.index)
    if isinstance(levy, GammaJumps):
        b, r = levy.beta, levy.rate
        k = levy.c * r**b / math.gamma(b)
        return lambda y: k * y ** (b - 1.0) * np.exp(-r * y)
    raise NoClosedFormPotential("no jump density for this Lévy measure kind")


def convolution_identity_check(spec: SubordinatorSpec, grid: Sequence[float]) -> float:
    """Residual of ``rho(x) = a v(x) + int_0^x y pi(y) V(x - dy)`` on ``grid``.

    ``v`` is the potential density (with possible atom ``V({0})``) and ``pi``
    the Lévy density.
    """
    v_atom, v = potential_density(spec)
    rho = hpm_density(spec)
    xs = np.asarray(grid, dtype=float)
    lv = spec.levy
    stable_case = isinstance(lv, StableJumps)
    worst = 0.0
    for x in xs:
        rhs = spec.a * float(v(x)) if spec.a else 0.0
        if not lv.is_zero:
            pi = _jump_density(lv)
            rhs += v_atom * x * float(pi(x))
            if stable_case:
                g = lv.index
                k = lv.scale * g / math.gamma(1.0 - g) / (lv.scale * math.gamma(g))
                # y^{-g} (x - y)^{g-1} handled by the algebraic weight
                val, _ = integrate_interval(lambda y: k, 0.0, x, weight="alg", wvar=(-g, g - 1.0))
            else:
                val, _ = integrate_interval(lambda y: y * float(pi(y)) * float(v(x - y)), 0.0, x)
            rhs += val
        worst = max(worst, abs(float(rho(x)) - rhs))
    return worst
