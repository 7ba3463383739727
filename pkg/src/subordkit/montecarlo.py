"""Exact-event simulation of killed subordinators and statistical checks.

Paths are simulated event by event (jump or killing), with the exponential
functional integrated exactly between events.  Infinite-activity jump
measures are truncated at ``epsilon``; the dropped jumps are optionally
folded into the drift.

Random numbers come from counter-based Philox streams keyed by
``(seed, stream id)``.  Samples are produced in fixed-size blocks, each
with its own stream, so results do not depend on the number of worker
threads or on scheduling.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import special

from .errors import HorizonExceeded, QZeroViolation, SimulationUnsupported
from .gen_gamma import gordon_tail, joint_transform, moment_I_integer
from .levy import ExponentialJumps, StableJumps
from .numerics import ks_statistic
from .subordinator import SubordinatorSpec

__all__ = [
    "SimConfig",
    "PathSample",
    "CheckResult",
    "SimReport",
    "stream",
    "sample_path",
    "sample_I",
    "sample_I_and_level",
    "sample_xi",
    "sample_passage",
    "sample_G",
    "sample_R",
    "verify_factorization",
    "verify_undershoot",
    "verify_joint",
    "verify_moments",
    "verify_gordon",
]

BLOCK = 8192
_EVENT_BUDGET = 10**7
_TAIL_TOL = 1e-12

# stream-id namespaces: high bits name the quantity, low bits the block
_NS_I, _NS_PASSAGE, _NS_R, _NS_XI, _NS_JOINT, _NS_PATH = 1, 2, 3, 4, 5, 6


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo settings.

    Attributes
    ----------
    seed : int
        64-bit key of the counter-based generator.
    n_samples : int
    epsilon : float
        Jumps below ``epsilon`` are not simulated (infinite-activity kinds).
    compensate : bool
        Add ``int_0^epsilon x Pi(dx)`` to the drift for the dropped jumps.
    workers : int
        Thread count; capped by the ``SUBORDKIT_THREADS`` environment variable.
    """

    seed: int = 20240611
    n_samples: int = 100_000
    epsilon: float = 1e-5
    compensate: bool = True
    workers: int = 1

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if int(self.n_samples) < 1:
            raise ValueError("n_samples must be >= 1")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        if int(self.workers) < 1:
            raise ValueError("workers must be >= 1")

    @property
    def effective_workers(self) -> int:
        cap = os.environ.get("SUBORDKIT_THREADS")
        n = int(self.workers)
        if cap:
            try:
                n = min(n, max(1, int(cap)))
            except ValueError:
                pass
        return n


def stream(seed: int, stream_id: int) -> np.random.Generator:
    """Generator for the counter-based stream ``(seed, stream_id)``."""
    key = np.array([int(seed) % 2**64, int(stream_id) % 2**64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _blocks(cfg: SimConfig, namespace: int, fn: Callable[[np.random.Generator, int], np.ndarray],
            n: int | None = None):
    """Run ``fn(rng, size)`` over fixed-size blocks and concatenate in block order."""
    total = int(cfg.n_samples if n is None else n)
    sizes = [min(BLOCK, total - start) for start in range(0, total, BLOCK)]
    jobs = [((namespace << 40) | i, size) for i, size in enumerate(sizes)]

    def run(job):
        sid, size = job
        return fn(stream(cfg.seed, sid), size)

    workers = cfg.effective_workers
    if workers == 1 or len(jobs) == 1:
        parts = [run(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, jobs))
    if isinstance(parts[0], tuple):
        return tuple(np.concatenate(col) for col in zip(*parts))
    return np.concatenate(parts)


@dataclass(frozen=True)
class _Dynamics:
    drift: float
    jump_rate: float
    kill_rate: float
    levy: object
    epsilon: float
    bias: float  # int_0^eps x Pi(dx) of the dropped jumps


def _dynamics(spec: SubordinatorSpec, cfg: SimConfig) -> _Dynamics:
    if not spec.is_triplet:
        raise SimulationUnsupported("time-changed specs have no exact-event representation")
    lv = spec.levy
    eps = cfg.epsilon
    if lv.is_finite:
        return _Dynamics(spec.a, lv.total_mass, spec.q, lv, 0.0, 0.0)
    small = float(lv.small_jump_mean(eps))
    drift = spec.a + (small if cfg.compensate else 0.0)
    return _Dynamics(drift, float(lv.jump_rate(eps)), spec.q, lv, eps, small)


def _tail_bound(spec: SubordinatorSpec, dyn: _Dynamics) -> float:
    """Bound (or mean proxy) for ``int_0^inf exp(-(xi_{t+s} - xi_s)) dt``."""
    if dyn.drift > 0:
        return 1.0 / dyn.drift
    return 10.0 / float(spec.phi(1.0))


# ---------------------------------------------------------------------------
# path-level simulation
# ---------------------------------------------------------------------------

@dataclass
class PathSample:
    """One path up to a stopping rule.

    ``times`` and ``jumps`` list the jump events; ``death_time`` is ``inf``
    when the path was stopped before being killed; ``drift`` is the drift
    used (including any small-jump compensation).
    """

    times: np.ndarray
    jumps: np.ndarray
    death_time: float
    drift: float
    horizon: float

    def position(self, t: float) -> float:
        if t >= self.death_time:
            return math.inf
        return self.drift * t + float(self.jumps[self.times <= t].sum())


def sample_path(spec: SubordinatorSpec, horizon: float, cfg: SimConfig | None = None,
                rng: np.random.Generator | None = None) -> PathSample:
    """Simulate jump times and sizes on ``[0, horizon]`` (or until killed)."""
    cfg = cfg or SimConfig()
    rng = rng or stream(cfg.seed, _NS_PATH << 40)
    dyn = _dynamics(spec, cfg)
    rate = dyn.jump_rate + dyn.kill_rate
    times, jumps, t = [], [], 0.0
    death = math.inf
    while rate > 0:
        t += rng.exponential(1.0 / rate)
        if t > horizon:
            break
        if rng.random() * rate < dyn.kill_rate:
            death = t
            break
        times.append(t)
        jumps.append(float(dyn.levy.sample_jumps(rng, 1, dyn.epsilon)[0]))
        if len(times) > _EVENT_BUDGET:
            raise HorizonExceeded("event budget exhausted")
    return PathSample(np.array(times), np.array(jumps), death, dyn.drift, horizon)


def _simulate_I(spec: SubordinatorSpec, dyn: _Dynamics, rng: np.random.Generator, size: int,
                stop_time: np.ndarray | None = None):
    """Vectorized exponential functional; returns ``(I, xi at the end)``.

    ``stop_time`` (optional) truncates each path at that time; the level
    returned is then ``xi`` just before it.
    """
    a, lam_j, q = dyn.drift, dyn.jump_rate, dyn.kill_rate
    rate = lam_j + q
    I = np.zeros(size)
    xi = np.zeros(size)
    clock = np.zeros(size)
    active = np.ones(size, dtype=bool)
    bound = _tail_bound(spec, dyn)
    events = 0
    if rate == 0.0 and stop_time is None:
        return np.full(size, 1.0 / a), np.full(size, np.inf)
    while active.any():
        idx = np.flatnonzero(active)
        tau = rng.exponential(1.0, idx.size) / rate if rate > 0 else np.full(idx.size, np.inf)
        end = np.zeros(idx.size, dtype=bool)
        if stop_time is not None:
            remaining = stop_time[idx] - clock[idx]
            end = tau >= remaining
            tau = np.where(end, remaining, tau)
        base = np.exp(-xi[idx])
        if a > 0:
            I[idx] += base * -np.expm1(-a * tau) / a
        else:
            I[idx] += base * tau
        xi[idx] += a * tau
        clock[idx] += tau
        u = rng.random(idx.size)
        killed = ~end & (u * rate < q)
        jumping = ~end & ~killed
        n_jump = int(jumping.sum())
        if n_jump:
            xi[idx[jumping]] += dyn.levy.sample_jumps(rng, n_jump, dyn.epsilon)
        done = end | killed
        if stop_time is None:
            done |= np.exp(-xi[idx]) * bound < _TAIL_TOL * I[idx]
        active[idx[done]] = False
        events += idx.size
        if events > _EVENT_BUDGET * max(1, size // 1000):
            raise HorizonExceeded(
                "event budget exhausted before the stopping rule fired; increase epsilon or kill rate"
            )
    return I, xi


def sample_I(spec: SubordinatorSpec, cfg: SimConfig | None = None,
             rng: np.random.Generator | None = None, size: int | None = None) -> np.ndarray:
    """Samples of ``I = int_0^zeta exp(-xi_s) ds``.

    With ``rng`` given, draws ``size`` samples from it; otherwise uses the
    block streams of ``cfg`` (``cfg.n_samples`` samples).
    """
    cfg = cfg or SimConfig()
    dyn = _dynamics(spec, cfg)
    if spec.kill_rate == 0.0 and dyn.drift == 0.0 and not (dyn.jump_rate > 0):
        raise SimulationUnsupported("I is infinite for this spec")
    if rng is not None:
        return _simulate_I(spec, dyn, rng, int(size or 1))[0]
    return _blocks(cfg, _NS_I, lambda g, n: _simulate_I(spec, dyn, g, n)[0])


def sample_I_and_level(spec: SubordinatorSpec, alpha: float, cfg: SimConfig | None = None):
    """Samples of ``(I_{e_alpha}, xi_{e_alpha})`` for an unkilled spec."""
    cfg = cfg or SimConfig()
    if spec.kill_rate > 0:
        raise QZeroViolation("(I_{e_alpha}, xi_{e_alpha}) is sampled for q = 0 only")
    dyn = _dynamics(spec, cfg)

    def block(g, n):
        horizon = g.exponential(1.0 / alpha, n)
        return _simulate_I(spec, dyn, g, n, stop_time=horizon)

    return _blocks(cfg, _NS_JOINT, block)


def sample_xi(spec: SubordinatorSpec, t: float, cfg: SimConfig | None = None) -> np.ndarray:
    """Samples of ``xi_t`` (``inf`` once killed)."""
    cfg = cfg or SimConfig()
    dyn = _dynamics(spec, cfg)

    def block(g, n):
        total = np.full(n, dyn.drift * t)
        counts = g.poisson(dyn.jump_rate * t, n) if dyn.jump_rate > 0 else np.zeros(n, dtype=int)
        jumps = dyn.levy.sample_jumps(g, int(counts.sum()), dyn.epsilon) if counts.sum() else np.empty(0)
        owner = np.repeat(np.arange(n), counts)
        total += np.bincount(owner, weights=jumps, minlength=n)
        if dyn.kill_rate > 0:
            total[g.exponential(1.0 / dyn.kill_rate, n) <= t] = np.inf
        return total

    return _blocks(cfg, _NS_XI, block)


def _simulate_passage(dyn: _Dynamics, rng: np.random.Generator, level: np.ndarray):
    a, lam_j, q = dyn.drift, dyn.jump_rate, dyn.kill_rate
    rate = lam_j + q
    size = level.size
    xi = np.zeros(size)
    G = np.zeros(size)
    killed_before = np.zeros(size, dtype=bool)
    active = np.ones(size, dtype=bool)
    events = 0
    while active.any():
        idx = np.flatnonzero(active)
        tau = rng.exponential(1.0, idx.size) / rate if rate > 0 else np.full(idx.size, np.inf)
        reach = xi[idx] + a * tau if a > 0 else xi[idx]
        creep = reach >= level[idx]
        G[idx[creep]] = level[idx[creep]]
        xi[idx] = np.where(creep, level[idx], reach)
        live = ~creep
        u = rng.random(idx.size)
        killed = live & (u * rate < q)
        G[idx[killed]] = xi[idx[killed]]
        killed_before[idx[killed]] = True
        jumping = live & ~killed
        n_jump = int(jumping.sum())
        crossed = np.zeros(idx.size, dtype=bool)
        if n_jump:
            jumps = dyn.levy.sample_jumps(rng, n_jump, dyn.epsilon)
            j_idx = idx[jumping]
            over = xi[j_idx] + jumps > level[j_idx]
            G[j_idx[over]] = xi[j_idx[over]]
            xi[j_idx[~over]] += jumps[~over]
            crossed[np.flatnonzero(jumping)[over]] = True
        active[idx[creep | killed | crossed]] = False
        events += idx.size
        if events > _EVENT_BUDGET * max(1, size // 1000):
            raise HorizonExceeded("event budget exhausted before first passage")
    return G, level - G, killed_before


def sample_passage(spec: SubordinatorSpec, alpha: float | None = None, cfg: SimConfig | None = None,
                   level=None, rng: np.random.Generator | None = None, size: int | None = None):
    """Last position ``G`` below a level, the undershoot and the killed flag.

    If ``level`` is None it is drawn as an independent ``Exp(alpha)`` variable
    from the same stream, giving ``(G_{e_alpha}, e_alpha - G_{e_alpha})``.
    Creeping (drift crossing) gives undershoot 0; killing counts as a jump
    to infinity.
    """
    cfg = cfg or SimConfig()
    dyn = _dynamics(spec, cfg)
    if level is None and not (alpha and alpha > 0):
        raise ValueError("give either a level or alpha > 0")

    def block(g, n):
        lv = g.exponential(1.0 / alpha, n) if level is None else np.broadcast_to(
            np.asarray(level, dtype=float), (n,)).copy()
        return _simulate_passage(dyn, g, lv)

    if rng is not None:
        return block(rng, int(size or np.size(level) or 1))
    return _blocks(cfg, _NS_PASSAGE, block)


# ---------------------------------------------------------------------------
# G_{e_alpha} in closed form, and R
# ---------------------------------------------------------------------------

def _closed_form_G(spec: SubordinatorSpec, alpha: float):
    """Sampler ``(rng, n) -> G_{e_alpha}`` from the closed-form law, or None."""
    if not spec.is_triplet:
        return None
    q, a, lv = spec.q, spec.a, spec.levy
    if lv.is_zero:
        rate = alpha + q / a
        return lambda g, n: g.exponential(1.0 / rate, n)
    if isinstance(lv, ExponentialJumps):
        theta, c = lv.rate, lv.mass
        phi_a = float(spec.phi(alpha))
        if a == 0.0:
            atom = phi_a / (q + c)
            rate = alpha + q * theta / (q + c)
            return lambda g, n: np.where(g.random(n) < atom, 0.0, g.exponential(1.0 / rate, n))
        from .harmonic import _drift_exp_roots

        r1, r2 = _drift_exp_roots(q, a, theta, c)
        w1 = phi_a * (r1 + theta) / (a * (r1 - r2)) / (alpha - r1)
        return lambda g, n: g.exponential(1.0, n) / np.where(g.random(n) < w1, alpha - r1, alpha - r2)
    if isinstance(lv, StableJumps) and lv.tempering == 0.0 and q == 0.0 and a == 0.0:
        return lambda g, n: g.gamma(lv.index, 1.0 / alpha, n)
    return None


def sample_G(spec: SubordinatorSpec, alpha: float, rng: np.random.Generator, size: int,
             cfg: SimConfig | None = None) -> np.ndarray:
    """``G_{e_alpha}`` samples: closed form when available, else by simulation."""
    sampler = _closed_form_G(spec, alpha)
    if sampler is not None:
        return sampler(rng, size)
    return sample_passage(spec, alpha, cfg or SimConfig(), rng=rng, size=size)[0]


def sample_R(spec: SubordinatorSpec, n_trunc: int = 200, cfg: SimConfig | None = None,
             rng: np.random.Generator | None = None, size: int | None = None):
    """Samples of ``R`` from the truncated product representation.

    ``log R ~ d_n - B_n + sum_{k<=n} (E G^(k) - G^(k))`` with independent
    ``G^(k) ~ G_{e_k}``.  ``d_n - B_n = -gamma_phi`` restores the mean of
    ``log R`` exactly; the fluctuation of the omitted terms is not
    corrected (its variance is ``sum_{k>n} Var G^(k)``).
    """
    cfg = cfg or SimConfig()
    n_trunc = int(n_trunc)
    d_n, b_n = gordon_tail(spec, n_trunc)
    ks = np.arange(1, n_trunc + 1, dtype=float)
    means = spec._phi_prime(ks) / spec._phi(ks)
    offset = d_n - b_n + math.fsum(means)

    def block(g, n):
        acc = np.full(n, offset)
        for k in range(1, n_trunc + 1):
            acc -= sample_G(spec, float(k), g, n, cfg)
        return np.exp(acc)

    if rng is not None:
        return block(rng, int(size or 1))
    return _blocks(cfg, _NS_R, block)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    """One comparison: an estimate with its SE against a reference."""

    name: str
    estimate: float
    se: float
    reference: float
    rule: str
    passed: bool
    statistic: float = float("nan")
    p_value: float = float("nan")


@dataclass
class SimReport:
    """Estimates, standard errors, KS statistics and pass/fail per check."""

    suite: str
    seed: int
    n_samples: int
    workers: int
    checks: list[CheckResult] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def add_mean(self, name: str, values: np.ndarray, reference: float, k: float = 3.0, slack: float = 0.0):
        values = np.asarray(values, dtype=float)
        est = float(values.mean())
        se = float(values.std(ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0
        tol = k * se + slack
        ok = abs(est - reference) <= tol if tol > 0 else abs(est - reference) <= 1e-12 * max(1.0, abs(reference))
        rule = f"|est-ref| <= {k:g} SE" + (f" + {slack:.3g}" if slack else "")
        self.checks.append(CheckResult(name, est, se, float(reference), rule, bool(ok)))

    def add_ks(self, name: str, samples: np.ndarray, cdf, threshold: float = 0.01):
        d, p = ks_statistic(samples, cdf)
        self.checks.append(CheckResult(name, d, float("nan"), 0.0, f"KS p > {threshold:g}", p > threshold, d, p))

    CSV_HEADER = ("suite", "check", "estimate", "se", "reference", "statistic", "p_value", "rule", "passed", "seed",
                  "n_samples")

    def csv_rows(self) -> list[list[str]]:
        fmt = lambda v: format(v, ".17g")  # noqa: E731
        return [[self.suite, c.name, fmt(c.estimate), fmt(c.se), fmt(c.reference), fmt(c.statistic),
                 fmt(c.p_value), c.rule, "pass" if c.passed else "fail", str(self.seed), str(self.n_samples)]
                for c in self.checks]


def _report(suite: str, cfg: SimConfig) -> SimReport:
    return SimReport(suite, int(cfg.seed), int(cfg.n_samples), cfg.effective_workers)


def verify_factorization(spec: SubordinatorSpec, cfg: SimConfig | None = None, n_trunc: int = 200) -> SimReport:
    """``I R`` against the standard exponential law, with ``I`` and ``R`` from independent streams."""
    cfg = cfg or SimConfig()
    rep = _report("factorization", cfg)
    I = sample_I(spec, cfg)
    R = sample_R(spec, n_trunc, cfg)
    prod = I * R
    rep.add_ks("I*R ~ Exp(1)", prod, lambda x: -np.expm1(-np.maximum(x, 0.0)))
    rep.add_mean("E[I*R]", prod, 1.0)
    rep.notes.append(f"R truncated at n={n_trunc}; bias proxy B_n={gordon_tail(spec, n_trunc)[1]:.3g}")
    return rep


def verify_undershoot(spec: SubordinatorSpec, alpha: float = 1.0, lam_grid: Sequence[float] = (0.5, 1.0, 2.0),
                      cfg: SimConfig | None = None,
                      pairs: Sequence[tuple[float, float]] = ((1.0, 1.0), (0.5, 2.0), (2.0, 0.5))) -> SimReport:
    """Laplace transforms of ``G_{e_alpha}`` and of the undershoot, and their independence."""
    from .harmonic import undershoot_laplace_G, undershoot_laplace_U

    cfg = cfg or SimConfig()
    rep = _report("undershoot", cfg)
    G, U, _ = sample_passage(spec, alpha, cfg)
    for lam in lam_grid:
        rep.add_mean(f"E exp(-{lam:g} G)", np.exp(-lam * G), undershoot_laplace_G(spec, alpha, lam))
        rep.add_mean(f"E exp(-{lam:g} U)", np.exp(-lam * U), undershoot_laplace_U(spec, alpha, lam))
    for lam, mu in pairs:
        ref = undershoot_laplace_G(spec, alpha, lam) * undershoot_laplace_U(spec, alpha, mu)
        rep.add_mean(f"E exp(-{lam:g} G - {mu:g} U)", np.exp(-lam * G - mu * U), ref)
    rep.add_mean("E G", G, float(spec.log_derivative(alpha)))
    if spec.is_triplet:
        rep.add_mean("P(U = 0)", (U == 0.0).astype(float), alpha * spec.a / float(spec.phi(alpha)))
    return rep


def verify_joint(spec: SubordinatorSpec, alpha: float = 1.0,
                 points: Sequence[tuple[float, float]] = ((1.0, 0.0), (1.0, 1.0), (0.5, 0.5)),
                 cfg: SimConfig | None = None) -> SimReport:
    """``E[I_{e_alpha}^s exp(-mu xi_{e_alpha})]`` against the generalized-gamma formula."""
    cfg = cfg or SimConfig()
    rep = _report("joint", cfg)
    I, xi = sample_I_and_level(spec, alpha, cfg)
    for s, mu in points:
        vals = I**s * np.exp(-mu * xi)
        rep.add_mean(f"s={s:g} mu={mu:g}", vals, joint_transform(spec, alpha, mu, s))
    return rep


def verify_moments(spec: SubordinatorSpec, n_max: int = 3, cfg: SimConfig | None = None) -> SimReport:
    """Empirical ``E[I^n]`` against ``prod_{i<=n} i / phi(i)``."""
    cfg = cfg or SimConfig()
    rep = _report("moments", cfg)
    dyn = _dynamics(spec, cfg)
    slack = 0.0
    if dyn.bias > 0:
        # dropping jumps below eps changes phi(i) by at most i * int_0^eps x Pi(dx)
        rep.notes.append(f"truncation eps={cfg.epsilon:g}; int_0^eps x Pi(dx) = {dyn.bias:.3g}")
    I = sample_I(spec, cfg)
    for n in range(1, int(n_max) + 1):
        ref = moment_I_integer(spec, n)
        if dyn.bias > 0 and not cfg.compensate:
            slack = ref * sum(i * dyn.bias / float(spec.phi(float(i))) for i in range(1, n + 1))
        elif dyn.bias > 0:
            slack = ref * sum(i * i * dyn.bias * cfg.epsilon / float(spec.phi(float(i))) for i in range(1, n + 1))
        rep.add_mean(f"E[I^{n}]", I**n, ref, slack=slack)
    return rep


def verify_gordon(spec: SubordinatorSpec, n_trunc: int = 200, cfg: SimConfig | None = None,
                  cdf: Callable | None = None) -> SimReport:
    """Truncated product sampler for ``R``: mean against ``phi(1)`` and optional KS."""
    cfg = cfg or SimConfig()
    rep = _report("gordon", cfg)
    R = sample_R(spec, n_trunc, cfg)
    rep.add_mean("E[R]", R, float(spec.phi(1.0)))
    if cdf is not None:
        rep.add_ks("R ~ reference law", R, cdf)
    else:
        # killed drift: R = K * Gamma(1 + q/K)
        if spec.is_killed_drift:
            shape, scale = 1.0 + spec.q / spec.a, spec.a
            rep.add_ks("R ~ K Gamma(1+q/K)", R, lambda x: special.gammainc(shape, np.maximum(x, 0.0) / scale))
    d_n, b_n = gordon_tail(spec, n_trunc)
    rep.notes.append(f"d_n={d_n:.17g}; B_n={b_n:.17g} (bias proxy; stochastic remainder not certified)")
    return rep
