"""Config parsing and the ``subord-kit`` command line."""
from __future__ import annotations

import csv
import io
import math
import subprocess
import sys

import pytest

from subordkit.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, EXIT_STATISTICAL, main
from subordkit.config import dump_spec, parse_text
from subordkit.errors import ConfigError
from subordkit.levy import AtomicJumps, StableJumps, TabulatedJumps
from subordkit.subordinator import SubordinatorSpec, compound_poisson_exponential, killed_drift, stable


def write(tmp_path, text, name="spec.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def run(argv):
    out = io.StringIO()
    code = main(argv, out=out)
    return code, out.getvalue()


def table(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


# -- config --------------------------------------------------------------------

def test_parse_flat_text_with_comments_and_sections():
    doc = parse_text(
        "# killed drift\nkill = 1\ndrift = 1   # K\n\nsim.seed = 7\nsim.n = 500\ninversion.nodes = 24\n"
        "grid.lo = 0.5\ngrid.hi = 5\ngrid.n = 4\n"
    )
    assert doc.spec == SubordinatorSpec(q=1.0, a=1.0)
    assert doc.sim.seed == 7 and doc.sim.n_samples == 500
    assert doc.inversion.nodes == 24
    assert len(doc.grid) == 4 and doc.grid[0] == 0.5


def test_parse_json_nested_and_flat():
    nested = parse_text('{"drift": 0.5, "levy": {"kind": "stable", "gamma": 0.3, "tempering": 1}}')
    flat = parse_text('{"drift": 0.5, "levy.kind": "stable", "levy.gamma": 0.3, "levy.tempering": 1}')
    assert nested.spec == flat.spec
    assert nested.spec.levy == StableJumps(index=0.3, tempering=1.0)
    atoms = parse_text('{"levy": {"kind": "atoms", "atoms": [[1, 0.5], [2, 0.25]]}}')
    assert atoms.spec.levy == AtomicJumps(((1.0, 0.5), (2.0, 0.25)))


@pytest.mark.parametrize(
    "spec",
    [
        killed_drift(1.0, 1.0),
        stable(0.5),
        compound_poisson_exponential(2.0, 0.5, q=1.0, drift=0.3),
        SubordinatorSpec(q=0.1, levy=TabulatedJumps((0.0, 1.0, 2.0), (1.0, 0.4, 0.0), tempering=0.2)),
        SubordinatorSpec(levy=AtomicJumps(((1.0, 1.0), (math.pi, 0.1)))),
    ],
)
def test_spec_round_trip(spec):
    assert parse_text(dump_spec(spec)).spec == spec


@pytest.mark.parametrize(
    "text, line",
    [
        ("kill = 1\ndrift = abc\n", 2),
        ("kill = 1\n\nbogus.key = 3\n", 3),
        ("drift = 1\nlevy.kind = warp\n", 2),
        ("drift = 1\nlevy.kind = stable\nlevy.gamma = 2\n", 3),
        ("drift 1\n", 1),
        ("drift = 1\ndrift = 2\n", 2),
        ("drift = 1\nlevy.kind = exponential\nlevy.gamma = 0.5\n", 3),
        ("drift = 1\nlevy.kind = atoms\nlevy.atoms = 1;2\n", 3),
        ("drift = 1\nsim.n = many\n", 2),
    ],
)
def test_config_errors_carry_line_numbers(text, line):
    with pytest.raises(ConfigError) as info:
        parse_text(text)
    assert info.value.line == line
    assert str(info.value).startswith(f"line {line}:")


def test_constant_exponent_rejected():
    with pytest.raises(ConfigError):
        parse_text("kill = 2\n")


# -- commands --------------------------------------------------------------------

def test_describe_killed_drift_and_round_trip(tmp_path):
    code, out = run(["describe", "--config", write(tmp_path, "kill = 1\ndrift = 1\n")])
    assert code == EXIT_OK
    assert out.startswith("# schema=subordkit/describe/1\n")
    assert "# 1,2,1" in out
    assert "# webster.log_concave,true" in out
    assert parse_text(out).spec == SubordinatorSpec(q=1.0, a=1.0)


def test_describe_stable_phi_at_four(tmp_path):
    code, out = run(["describe", "--config", write(tmp_path, "levy.kind = stable\nlevy.gamma = 0.5\n")])
    assert code == EXIT_OK and "# 4,2," in out


def test_malformed_config_exits_2_with_line(tmp_path, capsys):
    code, _ = run(["describe", "--config", write(tmp_path, "kill = 1\ndrift = ?\n")])
    assert code == EXIT_CONFIG
    assert "line 2" in capsys.readouterr().err


def test_missing_file_and_bad_args_exit_2(tmp_path):
    assert run(["describe", "--config", str(tmp_path / "nope.cfg")])[0] == EXIT_CONFIG
    assert run(["frobnicate", "--config", "x"])[0] == EXIT_CONFIG


def test_moments_command(tmp_path):
    code, out = run(["moments", "--config", write(tmp_path, "kill = 1\ndrift = 1\n"), "--n", "1-3"])
    assert code == EXIT_OK
    rows = table(out)
    for row, n in zip(rows, (1, 2, 3)):
        assert abs(float(row["E_I_s"]) - 1 / (n + 1)) < 1e-9
        assert abs(float(row["E_R_s"]) - math.factorial(n + 1)) < 1e-8
        assert float(row["product_oracle_I"]) == pytest.approx(1 / (n + 1), rel=1e-14)
        assert abs(float(row["duality_residual"])) < 1e-8
    code, out = run(["moments", "--config", write(tmp_path, "drift = 1\n", "pd.cfg"), "--n", "1,4"])
    assert all(abs(float(r["E_I_s"]) - 1) < 1e-9 for r in table(out))
    code, out = run(["moments", "--config", write(tmp_path, "levy.kind=stable\nlevy.gamma=0.5\n", "st.cfg"),
                     "--s", "2"])
    row = table(out)[0]
    assert abs(float(row["E_I_s"]) - math.sqrt(2)) < 1e-9 and abs(float(row["E_R_s"]) - math.sqrt(2)) < 1e-9


def test_numbers_have_17_significant_digits(tmp_path):
    _, out = run(["hpm", "--config", write(tmp_path, "kill = 1\ndrift = 1\n"), "--grid", "1"])
    row = table(out)[0]
    assert row["rho"] == format(math.exp(-1), ".17g")
    assert row["provenance"] == "catalog:drift"


def test_idtest_command(tmp_path):
    code, out = run(["idtest", "--config", write(tmp_path, "kill = 1\ndrift = 1\n")])
    assert code == EXIT_OK and table(out)[0]["verdict"] == "InfinitelyDivisible"
    rho_csv = tmp_path / "rho.csv"
    code, out = run(["idtest", "--config", write(tmp_path, "levy.kind = atoms\nlevy.atoms = 1:1\n", "a.cfg"),
                     "--grid", "0.5:4:5"])
    assert table(out)[0]["verdict"] == "NotID_Atomic"
    code, out = run(["idtest", "--config",
                     write(tmp_path, "levy.kind = tabulated\nlevy.grid = 0, 1\nlevy.tail = 1, 0\n", "u.cfg"),
                     "--rho-csv", str(rho_csv)])
    row = table(out)[0]
    assert row["verdict"] == "NotID" and float(row["rho_witness"]) > 1
    assert rho_csv.read_text().startswith("# schema=subordkit/idtest-rho/1\nx,rho\n")


def test_hpm_compare_column(tmp_path):
    _, out = run(["hpm", "--config", write(tmp_path, "levy.kind = stable\nlevy.gamma = 0.3\n"),
                  "--grid", "0.1:10:5", "--compare"])
    rows = table(out)
    assert all(float(r["rho"]) == pytest.approx(0.3, abs=1e-15) for r in rows)
    assert all(abs(float(r["numeric_minus_catalog"])) < 1e-6 for r in rows)


def test_gamma_command(tmp_path):
    _, out = run(["gamma", "--config", write(tmp_path, "levy.kind = stable\nlevy.gamma = 0.5\n"), "--s", "3,0.5"])
    rows = table(out)
    assert abs(float(rows[0]["Gamma_phi"]) - math.sqrt(2)) < 1e-10
    assert abs(float(rows[0]["euler_constant"]) - 0.5772156649015329 / 2) < 1e-9
    assert all(abs(float(r["functional_eq_residual"])) < 1e-8 for r in rows)


def test_verify_command_pass_and_fail(tmp_path):
    path = write(tmp_path, "kill = 1\ndrift = 1\nsim.n = 20000\n")
    code, out = run(["verify", "--config", path, "--suite", "undershoot"])
    assert code == EXIT_OK
    assert out.splitlines()[1].startswith("suite,check,estimate,se,reference")
    # a coarse uncompensated truncation (eps = 0.5) biases E[I] far beyond 3 SE
    biased = write(tmp_path, "levy.kind = stable\nlevy.gamma = 0.5\nsim.n = 20000\nsim.epsilon = 0.5\n"
                             "sim.compensate = false\n", "biased.cfg")
    code, _ = run(["verify", "--config", biased, "--suite", "moments", "--n-max", "1"])
    assert code == EXIT_STATISTICAL


def test_verify_joint_refuses_killed_spec(tmp_path):
    assert run(["verify", "--config", write(tmp_path, "kill = 1\ndrift = 1\n"), "--suite", "joint"])[0] == EXIT_CONFIG


def test_numerical_failure_exit_3(tmp_path, capsys):
    # unkilled tempered stable has no catalog rho; an 8-node Talbot cannot meet a 1e-12 gap
    path = write(tmp_path, "levy.kind = stable\nlevy.gamma = 0.5\nlevy.tempering = 1\n"
                           "inversion.nodes = 8\ninversion.residual = 1e-12\n")
    assert run(["hpm", "--config", path, "--grid", "1"])[0] == EXIT_NUMERIC
    assert "InversionUnstable" in capsys.readouterr().err


def test_console_script_module_entry(tmp_path):
    path = write(tmp_path, "kill = 1\ndrift = 1\n")
    proc = subprocess.run([sys.executable, "-m", "subordkit.cli", "describe", "--config", path],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and "kill = 1" in proc.stdout
