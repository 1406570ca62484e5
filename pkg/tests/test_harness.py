import csv
import io
import json
import math
import random
from fractions import Fraction
from pathlib import Path

import pytest

from anisocount.cli import main
from anisocount.config import ConfigError, parse_config
from anisocount.counting import count_points
from anisocount.domains import Ball, Ellipsoid, LpBall
from anisocount.geometry import decompose
from anisocount.harness import (
    InsufficientData,
    OracleRefused,
    emit_report,
    envelope,
    fit_exponents,
    naive_oracle_count,
    run_spectral,
    run_sweep,
)

CONFIGS = Path(__file__).resolve().parents[1] / "demos" / "configs"

DISK = """
[space]
n = 2
[domain]
shape = ball
radius = 1
[grid]
start = 1/8
count = 5
"""


# -- fitting ---------------------------------------------------------------


def test_planted_power_law():
    series = [(2.0**-j, 3 * 2.0 ** (0.7 * j)) for j in range(8)]
    ls, env = fit_exponents(series)
    assert ls == pytest.approx(-0.7, abs=1e-10)
    assert env == pytest.approx(-0.7, abs=1e-10)


def test_oscillating_envelope_recovers_slope():
    series = [(2.0**-j, (2 + math.sin(j)) * 2.0 ** (j / 2)) for j in range(12)]
    assert fit_exponents(series)[1] == pytest.approx(-0.5, abs=0.1)


def test_constant_series_has_zero_slope():
    assert fit_exponents([(2.0**-j, 5.0) for j in range(5)]) == (0.0, 0.0)


def test_zeros_dropped_and_insufficient_data():
    with pytest.raises(InsufficientData):
        fit_exponents([(1, 1.0), (0.5, 0.0), (0.25, 2.0)])
    with pytest.raises(InsufficientData):
        fit_exponents([])


def test_envelope_is_running_max():
    assert envelope([1, 3, 2, 5, 4]) == [1, 3, 3, 5, 5]


# -- config ----------------------------------------------------------------


def test_config_grid_and_defaults():
    cfg = parse_config(DISK)
    assert cfg.epsilons == [Fraction(1, 8), Fraction(1, 16), Fraction(1, 32), Fraction(1, 64), Fraction(1, 128)]
    assert cfg.mode == "exact" and cfg.rotation is None


def test_config_surd_basis():
    cfg = parse_config((CONFIGS / "kronecker_line.ini").read_text())
    assert cfg.subspace.d == 2
    assert decompose(cfg.subspace).r == 0


def test_config_shapes():
    e = parse_config(DISK.replace("shape = ball\nradius = 1", "shape = ellipsoid\nquad = 2, 0; 0, 1/2"))
    assert isinstance(e.domain, Ellipsoid)
    lp = parse_config(DISK.replace("shape = ball", "shape = lpball\nexponent = 6"))
    assert isinstance(lp.domain, LpBall) and lp.domain.exponent == 6
    rot = parse_config(DISK.replace("shape = ball", "shape = lpball\nangles = 0.4"))
    assert not rot.domain.is_exact()


@pytest.mark.parametrize(
    "text",
    [
        "[domain]\nshape = ball\n",
        DISK.replace("count = 5", "count = 0"),
        DISK.replace("start = 1/8", "start = -1"),
        DISK.replace("shape = ball", "shape = cube"),
        DISK.replace("radius = 1", "radius = 1\nangles = 0.3"),
        DISK + "[rotation]\ngroup = so_full\n",
        DISK + "[run]\nmode = fuzzy\n",
        DISK.replace("n = 2", "n = 2\nbasis = 1, sqrt(2); sqrt(3), 1"),
        DISK + "[spectral]\npotential = 0, 0, 0\n",
        "not an ini file",
    ],
)
def test_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


# -- reports ---------------------------------------------------------------


def test_csv_and_json_agree_to_full_precision():
    report = run_sweep(parse_config(DISK))
    data = json.loads(emit_report(report, "json")["sweep.json"])
    rows = list(csv.DictReader(io.StringIO(emit_report(report, "csv")["sweep.csv"])))
    assert len(rows) == len(data["records"])
    for row, rec in zip(rows, data["records"]):
        assert row["epsilon"] == rec["epsilon"]
        assert int(row["count"]) == rec["count"]
        assert float(row["main_term"]) == rec["main_term"]
        assert float(row["remainder"]) == rec["remainder"]


def test_reports_are_byte_identical():
    a = emit_report(run_sweep(parse_config(DISK)), "json")
    b = emit_report(run_sweep(parse_config(DISK), jobs=2), "json")
    assert a == b


def test_plotdata_files(tmp_path):
    files = emit_report(run_sweep(parse_config(DISK)), "plotdata", tmp_path)
    assert set(files) == {"sweep_abs_remainder.dat", "sweep_abs_remainder_envelope.dat"}
    assert (tmp_path / "sweep_abs_remainder.dat").read_text() == files["sweep_abs_remainder.dat"]


def test_sweep_verdict_for_disk():
    report = run_sweep(parse_config(DISK))
    assert report.theoretical == Fraction(-2, 3)
    assert report.verdict is (report.envelope_slope <= -2 / 3 + 0.2)
    assert not report.tainted


def test_short_grid_is_insufficient():
    with pytest.raises(InsufficientData):
        run_sweep(parse_config(DISK.replace("count = 5", "count = 2")))


def test_spectral_needs_thresholds():
    cfg = parse_config(DISK.replace("n = 2", "n = 2\nbasis = 1, 0") + "[spectral]\npotential = 0, 0\n")
    with pytest.raises(ValueError):
        run_spectral(cfg)


# -- oracle ----------------------------------------------------------------


def test_oracle_refuses_huge_scans():
    cfg = parse_config(DISK.replace("n = 2", "n = 3").replace("radius = 1", "radius = 1\ncenter = 0, 0, 0"))
    with pytest.raises(OracleRefused):
        naive_oracle_count(cfg, Fraction(1, 1000))


def _random_config(rng):
    n = rng.randint(2, 3)
    basis = rng.choice(["", ", ".join(["1"] + ["0"] * (n - 1)), ", ".join(["1", "sqrt(2)"] + ["0"] * (n - 2))])
    center = ", ".join(f"{rng.randint(-3, 3)}/{rng.randint(2, 7)}" for _ in range(n))
    shape = rng.choice(["ball", "ellipsoid", "lpball"])
    dom = f"shape = {shape}\ncenter = {center}\n"
    if shape == "ellipsoid":
        diag = [Fraction(rng.randint(1, 8), 4) for _ in range(n)]
        dom += "quad = " + "; ".join(", ".join(str(diag[i]) if i == j else "0" for j in range(n)) for i in range(n))
        dom += f"\nangles = {rng.uniform(0, 3)}\n"
    elif shape == "lpball":
        dom += f"radius = {rng.randint(2, 4)}/3\nexponent = 4\n"
    else:
        dom += f"radius = {rng.randint(3, 6)}/4\n"
    return parse_config(f"[space]\nn = {n}\nbasis = {basis}\n[domain]\n{dom}")


def test_oracle_matches_count_on_random_configs():
    rng = random.Random(3)
    for _ in range(8):
        cfg = _random_config(rng)
        eps = Fraction(1, rng.choice([2, 4, 8]))
        dec = decompose(cfg.subspace)
        want = count_points(dec, cfg.domain.rationalized(), eps, "exact").count
        assert naive_oracle_count(cfg, eps, "exact") == want


def test_oracle_float_mode_on_disk():
    cfg = parse_config(DISK)
    assert naive_oracle_count(cfg, Fraction(1, 10), "float") == 305


# -- command line ----------------------------------------------------------


def test_cli_commands(tmp_path, capsys):
    cfg = tmp_path / "disk.ini"
    cfg.write_text(DISK)
    assert main(["decompose", str(cfg)]) == 0
    assert "n = 2" in capsys.readouterr().out
    assert main(["count", str(cfg), "--eps", "1/10"]) == 0
    assert json.loads(capsys.readouterr().out)["count"] == 305
    assert main(["oracle", str(cfg), "--eps", "1/10"]) == 0
    assert capsys.readouterr().out.strip() == "305"
    assert main(["sweep", str(cfg), "--out", str(tmp_path / "res"), "--format", "csv"]) == 0
    assert (tmp_path / "res" / "sweep.csv").exists()


def test_cli_errors(tmp_path, capsys):
    assert main(["sweep", str(tmp_path / "missing.ini")]) == 1
    short = tmp_path / "short.ini"
    short.write_text(DISK.replace("count = 5", "count = 2"))
    assert main(["sweep", str(short)]) == 1
    assert "error:" in capsys.readouterr().err
    nothr = tmp_path / "nothr.ini"
    nothr.write_text(DISK + "[spectral]\npotential = 0, 0\n")
    assert main(["spectral", str(nothr)]) == 1
    noeps = tmp_path / "disk.ini"
    noeps.write_text(DISK)
    assert main(["average", str(noeps)]) == 1


def test_cli_tainted_exit(tmp_path, capsys):
    cfg = tmp_path / "disk.ini"
    cfg.write_text(DISK + "[run]\nmode = float\n")
    # the radius-10 circle has lattice points on its boundary
    assert main(["count", str(cfg), "--eps", "1/10"]) == 2
    assert json.loads(capsys.readouterr().out)["guard_hits"] > 0
