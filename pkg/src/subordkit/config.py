"""Parsing of subordinator configuration documents.

Two syntaxes are accepted:

* flat text, one ``key = value`` per line with dotted keys; ``#`` starts a
  comment and blank lines are ignored;
* a JSON object, either flat (dotted keys) or nested (``{"levy": {...}}``).

Recognized keys::

    kill, drift, label, power, extra_kill
    levy.kind   = none | exponential | gamma_jumps | stable | atoms | tabulated
    levy.rate, levy.mass, levy.c, levy.beta, levy.gamma, levy.scale,
    levy.tempering, levy.atoms (``loc:mass, ...``), levy.grid, levy.tail
    grid.lo, grid.hi, grid.n
    sim.seed, sim.n, sim.epsilon, sim.compensate, sim.workers
    inversion.method, inversion.nodes, inversion.residual
    quadrature.abs_tol, quadrature.rel_tol, quadrature.max_subdivisions

Every error is raised as :class:`ConfigError` carrying the offending line.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InvalidSpecError
from .levy import AtomicJumps, ExponentialJumps, GammaJumps, NoJumps, StableJumps, TabulatedJumps
from .montecarlo import SimConfig
from .numerics import InversionConfig, QuadratureConfig
from .subordinator import SubordinatorSpec

__all__ = ["Document", "parse_text", "load", "spec_from_mapping", "dump_spec"]

_LEVY_KEYS = {
    "none": set(),
    "exponential": {"rate", "mass"},
    "gamma_jumps": {"c", "beta", "rate"},
    "stable": {"gamma", "scale", "tempering"},
    "atoms": {"atoms"},
    "tabulated": {"grid", "tail", "tempering"},
}
_TOP = {"kill", "drift", "label", "power", "extra_kill"}
_SECTIONS = {
    "grid": {"lo", "hi", "n"},
    "sim": {"seed", "n", "epsilon", "compensate", "workers"},
    "inversion": {"method", "nodes", "residual"},
    "quadrature": {"abs_tol", "rel_tol", "max_subdivisions", "split"},
}


@dataclass
class Document:
    """Parsed configuration: the spec plus the optional sections."""

    spec: SubordinatorSpec
    values: dict[str, str]
    lines: dict[str, int] = field(default_factory=dict)
    sim: SimConfig = field(default_factory=SimConfig)
    inversion: InversionConfig = field(default_factory=InversionConfig)
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    grid: np.ndarray | None = None


def _flatten(obj, prefix="") -> dict[str, str]:
    out: dict[str, str] = {}
    for key, value in obj.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(_flatten(value, name + "."))
        elif isinstance(value, list):
            if value and isinstance(value[0], (list, tuple)):
                out[name] = ", ".join(f"{a}:{b}" for a, b in value)
            else:
                out[name] = ", ".join(str(v) for v in value)
        elif isinstance(value, bool):
            out[name] = "true" if value else "false"
        else:
            out[name] = str(value)
    return out


def _read_pairs(text: str) -> tuple[dict[str, str], dict[str, int]]:
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc.msg}", exc.lineno) from None
        if not isinstance(obj, dict):
            raise ConfigError("JSON config must be an object", 1)
        values = _flatten(obj)
        return values, {k: 1 for k in values}
    values: dict[str, str] = {}
    lines: dict[str, int] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, value = line.split("=", 1)
        elif ":" in line and not line.startswith("levy.atoms"):
            key, value = line.split(":", 1)
        else:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", number)
        key, value = key.strip(), value.strip()
        if not key:
            raise ConfigError("empty key", number)
        if key in values:
            raise ConfigError(f"duplicate key {key!r} (first set on line {lines[key]})", number)
        values[key] = value
        lines[key] = number
    return values, lines


class _Reader:
    def __init__(self, values: dict[str, str], lines: dict[str, int]):
        self.values, self.lines = values, lines

    def line(self, key):
        return self.lines.get(key)

    def float(self, key, default=None):
        if key not in self.values:
            if default is None:
                raise ConfigError(f"missing required key {key!r}")
            return default
        try:
            return float(self.values[key])
        except ValueError:
            raise ConfigError(f"{key} must be a number, got {self.values[key]!r}", self.line(key)) from None

    def int(self, key, default):
        if key not in self.values:
            return default
        try:
            return int(self.values[key])
        except ValueError:
            raise ConfigError(f"{key} must be an integer, got {self.values[key]!r}", self.line(key)) from None

    def bool(self, key, default):
        if key not in self.values:
            return default
        text = self.values[key].lower()
        if text in {"1", "true", "yes", "on"}:
            return True
        if text in {"0", "false", "no", "off"}:
            return False
        raise ConfigError(f"{key} must be a boolean, got {self.values[key]!r}", self.line(key))

    def floats(self, key):
        try:
            return tuple(float(v) for v in self.values[key].replace(";", ",").split(",") if v.strip())
        except KeyError:
            raise ConfigError(f"missing required key {key!r}") from None
        except ValueError:
            raise ConfigError(f"{key} must be a comma-separated list of numbers", self.line(key)) from None


def _check_keys(values: dict[str, str], lines: dict[str, int], kind: str):
    for key in values:
        head, _, rest = key.partition(".")
        if not rest:
            ok = key in _TOP
        elif head == "levy":
            ok = rest == "kind" or rest in _LEVY_KEYS[kind]
        else:
            ok = rest in _SECTIONS.get(head, set())
        if not ok:
            raise ConfigError(f"unknown key {key!r}" + (f" for levy.kind={kind}" if head == "levy" else ""),
                              lines.get(key))


def _levy(r: _Reader, kind: str):
    if kind == "none":
        return NoJumps()
    if kind == "exponential":
        return ExponentialJumps(rate=r.float("levy.rate", 1.0), mass=r.float("levy.mass", 1.0))
    if kind == "gamma_jumps":
        return GammaJumps(c=r.float("levy.c", 1.0), beta=r.float("levy.beta", 1.0), rate=r.float("levy.rate", 1.0))
    if kind == "stable":
        return StableJumps(index=r.float("levy.gamma"), scale=r.float("levy.scale", 1.0),
                           tempering=r.float("levy.tempering", 0.0))
    if kind == "atoms":
        if "levy.atoms" not in r.values:
            raise ConfigError("missing required key 'levy.atoms'")
        atoms = []
        for item in r.values["levy.atoms"].split(","):
            if not item.strip():
                continue
            try:
                loc, mass = item.split(":")
                atoms.append((float(loc), float(mass)))
            except ValueError:
                raise ConfigError(f"levy.atoms entries must be 'location:mass', got {item.strip()!r}",
                                  r.line("levy.atoms")) from None
        return AtomicJumps(atoms=tuple(atoms))
    return TabulatedJumps(grid=r.floats("levy.grid"), tail_values=r.floats("levy.tail"),
                          tempering=r.float("levy.tempering", 0.0))


_MESSAGE_KEYS = {"q ": "kill", "a ": "drift", "extra_kill": "extra_kill", "power": "power",
                 "atom": "levy.atoms", "tabulated": "levy.tail"}


def _culprit(message: str, values: dict[str, str]) -> str | None:
    """Best guess of the key an error message refers to."""
    for key in values:
        if key.startswith("levy.") and key != "levy.kind" and message.startswith(key):
            return key
    for token, key in _MESSAGE_KEYS.items():
        if message.startswith(token) and key in values:
            return key
    return "levy.kind" if "levy.kind" in values and any(k.startswith("levy.") for k in values) else None


def spec_from_mapping(values: dict[str, str], lines: dict[str, int] | None = None) -> Document:
    """Build a :class:`Document` from flat dotted key/value strings."""
    lines = lines or {}
    kind = values.get("levy.kind", "none").strip().lower()
    if kind not in _LEVY_KEYS:
        raise ConfigError(f"unknown levy.kind {kind!r}; expected one of {sorted(_LEVY_KEYS)}",
                          lines.get("levy.kind"))
    _check_keys(values, lines, kind)
    r = _Reader(values, lines)
    try:
        levy = _levy(r, kind)
        spec = SubordinatorSpec(
            q=r.float("kill", 0.0),
            a=r.float("drift", 0.0),
            levy=levy,
            label=values.get("label", ""),
            power=r.float("power", 1.0),
            extra_kill=r.float("extra_kill", 0.0),
        )
    except (InvalidSpecError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        culprit = _culprit(str(exc), values)
        raise ConfigError(str(exc), lines.get(culprit) if culprit else None) from None
    try:
        sim = SimConfig(
            seed=r.int("sim.seed", SimConfig.seed),
            n_samples=r.int("sim.n", SimConfig.n_samples),
            epsilon=r.float("sim.epsilon", SimConfig.epsilon),
            compensate=r.bool("sim.compensate", True),
            workers=r.int("sim.workers", 1),
        )
        inversion = InversionConfig(
            method=values.get("inversion.method", InversionConfig.method),
            nodes=r.int("inversion.nodes", InversionConfig.nodes),
            residual=r.float("inversion.residual", InversionConfig.residual),
        )
        quadrature = QuadratureConfig(
            abs_tol=r.float("quadrature.abs_tol", QuadratureConfig.abs_tol),
            rel_tol=r.float("quadrature.rel_tol", QuadratureConfig.rel_tol),
            max_subdivisions=r.int("quadrature.max_subdivisions", QuadratureConfig.max_subdivisions),
            split=r.float("quadrature.split", QuadratureConfig.split),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        section = next((k for k in values if k.split(".")[0] in {"sim", "inversion", "quadrature"}
                        and k.split(".")[-1] in str(exc)), None)
        raise ConfigError(str(exc), lines.get(section) if section else None) from None
    grid = None
    if any(k.startswith("grid.") for k in values):
        lo, hi, n = r.float("grid.lo", 1e-2), r.float("grid.hi", 1e2), r.int("grid.n", 50)
        if not (0 < lo < hi) or n < 2:
            raise ConfigError("grid needs 0 < grid.lo < grid.hi and grid.n >= 2", lines.get("grid.lo"))
        grid = np.geomspace(lo, hi, n)
    return Document(spec, dict(values), dict(lines), sim, inversion, quadrature, grid)


def parse_text(text: str) -> Document:
    """Parse a configuration document (flat text or JSON)."""
    values, lines = _read_pairs(text)
    return spec_from_mapping(values, lines)


def load(path) -> Document:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_text(text)


def dump_spec(spec: SubordinatorSpec) -> str:
    """Flat-text config that parses back to ``spec``."""
    return "".join(f"{k} = {v}\n" for k, v in spec.to_config().items())
