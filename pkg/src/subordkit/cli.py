"""``subord-kit`` command-line front end.

Usage::

    subord-kit <describe|moments|idtest|hpm|gamma|verify> --config FILE [flags]

Tables go to stdout as CSV, each preceded by a ``# schema=subordkit/<cmd>/1``
line and a header row; diagnostics go to stderr.  Numbers use 17
significant digits.  Exit codes: 0 success, 2 configuration error,
3 numerical failure, 4 statistical failure.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
from typing import Sequence

import numpy as np

from . import config as config_mod
from .errors import ConfigError, InvalidSpecError, QZeroViolation, SubordKitError
from .gen_gamma import GenGammaEvaluator, moment_I, moment_I_integer, moment_R, moment_R_integer
from .harmonic import hpm_density, id_test_logI
from .montecarlo import SimConfig, SimReport, verify_factorization, verify_gordon, verify_joint, verify_moments, \
    verify_undershoot
from .subordinator import webster_diagnostics

__all__ = ["main", "build_parser", "EXIT_OK", "EXIT_CONFIG", "EXIT_NUMERIC", "EXIT_STATISTICAL"]

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_STATISTICAL = 0, 2, 3, 4
SCHEMA_VERSION = 1
_DEFAULT_LAMBDAS = (0.0, 0.5, 1.0, 2.0, 4.0, 10.0, 100.0)


def _num(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


class _Table:
    def __init__(self, out, command: str, header: Sequence[str]):
        out.write(f"# schema=subordkit/{command}/{SCHEMA_VERSION}\n")
        self._writer = csv.writer(out, lineterminator="\n")
        self._writer.writerow(header)

    def row(self, *values):
        self._writer.writerow([_num(v) for v in values])


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def _grid_arg(text: str) -> np.ndarray:
    """``lo:hi:n`` (log-spaced) or an explicit comma list."""
    try:
        if ":" in text:
            lo, hi, n = text.split(":")
            return np.geomspace(float(lo), float(hi), int(n))
        return np.asarray(_float_list(text))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}; use lo:hi:n or a comma list") from None


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_describe(doc: config_mod.Document, args, out) -> int:
    spec = doc.spec
    out.write(f"# schema=subordkit/describe/{SCHEMA_VERSION}\n")
    out.write(config_mod.dump_spec(spec))
    lams = doc.grid if doc.grid is not None else np.asarray(_DEFAULT_LAMBDAS)
    out.write("# lambda,phi,phi_prime\n")
    for lam in lams:
        dphi = float(spec.phi_prime(lam)) if lam > 0 else math.nan
        out.write(f"# {_num(float(lam))},{_num(float(spec.phi(lam)))},{_num(dphi)}\n")
    for key, value in webster_diagnostics(spec).items():
        out.write(f"# webster.{key},{_num(value)}\n")
    out.write(f"# complete_bernstein,{_num(spec.is_complete_bernstein)}\n")
    return EXIT_OK


def cmd_moments(doc, args, out) -> int:
    spec = doc.spec
    table = _Table(out, "moments", ["s", "E_I_s", "E_R_s", "product_oracle_I", "product_oracle_R",
                                    "duality_residual"])
    ev = GenGammaEvaluator.from_spec(spec)
    dual = GenGammaEvaluator.conjugate_of(spec)
    orders: list[float] = [float(n) for n in (args.n or [])] + list(args.s or [])
    if not orders:
        orders = [1.0, 2.0, 3.0]
    for s in orders:
        e_i = float(moment_I(spec, s, ev))
        e_r = float(moment_R(spec, s, ev))
        integer = s == int(s) and s >= 1
        o_i = moment_I_integer(spec, int(s)) if integer else None
        o_r = moment_R_integer(spec, int(s)) if integer else None
        if s > 0:
            dual_r = float(dual(s + 1.0))
            residual = e_r * dual_r / math.gamma(s + 1.0) - 1.0
        else:
            residual = 0.0
        table.row(s, e_i, e_r, o_i, o_r, residual)
    return EXIT_OK


def cmd_idtest(doc, args, out) -> int:
    grid = args.grid if args.grid is not None else doc.grid
    verdict = id_test_logI(doc.spec, grid=grid, tol=args.tol)
    table = _Table(out, "idtest", ["verdict", "sup_rho", "witness", "rho_witness", "method"])
    table.row(verdict.verdict, verdict.sup_rho, verdict.witness, verdict.rho_witness, verdict.method)
    for note in verdict.notes:
        print(f"note: {note}", file=sys.stderr)
    if args.rho_csv:
        density = hpm_density(doc.spec)
        xs = grid if grid is not None else np.geomspace(1e-3, 1e3, 121)
        with open(args.rho_csv, "w", encoding="utf-8") as fh:
            rho_table = _Table(fh, "idtest-rho", ["x", "rho"])
            for x in xs:
                rho_table.row(float(x), float(density(float(x))))
    return EXIT_OK


def cmd_hpm(doc, args, out) -> int:
    spec = doc.spec
    grid = args.grid if args.grid is not None else (doc.grid if doc.grid is not None else np.geomspace(0.1, 10, 21))
    density = hpm_density(spec, inversion=doc.inversion)
    numeric = None
    if args.compare and density.is_catalog:
        numeric = hpm_density(spec, method="numeric", inversion=doc.inversion, validate=False)
    table = _Table(out, "hpm", ["x", "rho", "provenance", "numeric_minus_catalog"])
    for x in grid:
        r = float(density(float(x)))
        delta = float(numeric(float(x))) - r if numeric is not None else None
        table.row(float(x), r, density.provenance, delta)
    if density.has_atoms:
        print("note: H has atoms; rho is the density of its absolutely continuous part", file=sys.stderr)
    return EXIT_OK


def cmd_gamma(doc, args, out) -> int:
    spec = doc.spec
    ev = GenGammaEvaluator.from_spec(spec)
    svals = args.s or [0.5, 1.0, 2.0, 5.0, 10.0]
    table = _Table(out, "gamma", ["s", "Gamma_phi", "euler_constant", "functional_eq_residual"])
    gamma = ev.euler_constant
    for s in svals:
        if not s > 0:
            raise ConfigError(f"--s values must be > 0, got {s!r}")
        g = float(ev(s))
        residual = float(ev(s + 1.0)) / (float(spec.phi(s)) * g) - 1.0
        table.row(s, g, gamma, residual)
    return EXIT_OK


def _sim_config(doc, args) -> SimConfig:
    base = doc.sim
    return SimConfig(
        seed=args.seed if args.seed is not None else base.seed,
        n_samples=args.samples if args.samples is not None else base.n_samples,
        epsilon=args.epsilon if args.epsilon is not None else base.epsilon,
        compensate=base.compensate,
        workers=args.workers if args.workers is not None else base.workers,
    )


def cmd_verify(doc, args, out) -> int:
    spec = doc.spec
    cfg = _sim_config(doc, args)
    suite = args.suite
    if suite == "undershoot":
        report = verify_undershoot(spec, args.alpha, cfg=cfg)
    elif suite == "factorization":
        report = verify_factorization(spec, cfg, n_trunc=args.n_trunc)
    elif suite == "moments":
        report = verify_moments(spec, args.n_max, cfg)
    elif suite == "joint":
        report = verify_joint(spec, args.alpha, cfg=cfg)
    else:
        report = verify_gordon(spec, args.n_trunc, cfg)
    _write_report(report, out)
    for note in report.notes:
        print(f"note: {note}", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_STATISTICAL


def _write_report(report: SimReport, out):
    out.write(f"# schema=subordkit/verify/{SCHEMA_VERSION}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(SimReport.CSV_HEADER)
    writer.writerows(report.csv_rows())


_COMMANDS = {
    "describe": cmd_describe,
    "moments": cmd_moments,
    "idtest": cmd_idtest,
    "hpm": cmd_hpm,
    "gamma": cmd_gamma,
    "verify": cmd_verify,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors share the configuration exit code
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="subord-kit", description="Subordinators, exponential functionals and their remainders.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="flat key=value or JSON spec file")
        return p

    add("describe", "triplet, phi on a grid and Webster diagnostics (output re-parses as a config)")
    p = add("moments", "E[I^s], E[R^s], product oracle and duality residual")
    p.add_argument("--n", type=_int_list, help="integer orders, e.g. 1-6 or 1,2,5")
    p.add_argument("--s", type=_float_list, help="real orders > -1")
    p = add("idtest", "infinite-divisibility verdict for log I")
    p.add_argument("--grid", type=_grid_arg, help="search grid lo:hi:n or comma list")
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--rho-csv", help="also write rho on the grid to this file")
    p = add("hpm", "harmonic potential density rho")
    p.add_argument("--grid", type=_grid_arg)
    p.add_argument("--compare", action="store_true", help="add numeric-minus-catalog column")
    p = add("gamma", "generalized gamma function and Euler constant")
    p.add_argument("--s", type=_float_list)
    p = add("verify", "Monte Carlo checks of the distributional identities")
    p.add_argument("--suite", required=True, choices=["undershoot", "factorization", "moments", "joint", "gordon"])
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--n-trunc", type=int, default=200)
    p.add_argument("--n-max", type=int, default=3)
    p.add_argument("--seed", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--workers", type=int)
    return parser


def main(argv: Sequence[str] | None = None, out=None) -> int:
    """Entry point; returns the exit code."""
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        doc = config_mod.load(args.config)
        return _COMMANDS[args.command](doc, args, out)
    except (ConfigError, InvalidSpecError, QZeroViolation) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SubordKitError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (FloatingPointError, ZeroDivisionError, OverflowError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
