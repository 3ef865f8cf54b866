"""Command-line contract: parsing, precedence, outputs, exit codes."""

from __future__ import annotations

import json
import math
import shutil
import subprocess

import pytest

from dicke_qfi.cli import (
    COLLAPSE_HEADER,
    CSV_HEADER,
    EXIT_CONFIG,
    EXIT_IO,
    EXIT_OK,
    EXIT_SOLVER,
    THERMO_HEADER,
    THREADS_ENV,
    main,
    parse_config,
)


def _read_lines(path):
    return path.read_text(encoding="utf-8").splitlines()


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as err:
        main(["--version"])
    assert err.value.code == 0
    assert capsys.readouterr().out.strip() == "0.1.0"


def test_console_script_installed():
    exe = shutil.which("dicke-qfi")
    assert exe is not None
    proc = subprocess.run([exe, "--version"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.strip() == "0.1.0"


def test_delta_and_ratio_flags_conflict():
    with pytest.raises(SystemExit) as err:
        main(["ground", "--delta", "1.0", "--d", "1.0"])
    assert err.value.code == 2


@pytest.mark.parametrize(
    "argv, fragment",
    [
        (["ground", "--n", "0"], "n_atoms"),
        (["ground", "--lambda", "-0.5"], "lambda"),
        (["ground", "--omega", "0"], "omega"),
        (["sweep", "--n", "6"], "out"),
        (["scaling", "--sizes", "32,64,4096", "--out", "x.csv"], "big-n"),
        (["sweep", "--n", "6", "--lambdas", "0.1,oops", "--out", "x.csv"], "lambdas"),
        (["ground", "--threads", "0"], "threads"),
    ],
)
def test_config_errors_exit_2(argv, fragment, capsys):
    assert main(argv) == EXIT_CONFIG
    assert fragment in capsys.readouterr().err


def test_config_file_unknown_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"frequency": 2.0}), encoding="utf-8")
    assert main(["ground", "--config", str(cfg)]) == EXIT_CONFIG
    assert "unknown key" in capsys.readouterr().err


def test_config_file_precedence(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"lambda": 0.7, "n": 4}), encoding="utf-8")
    assert main(["ground", "--config", str(cfg), "--n", "10"]) == EXIT_OK
    result = json.loads(capsys.readouterr().out)
    assert result["lambda"] == 0.7
    assert result["n_atoms"] == 10


def test_threads_resolution(monkeypatch):
    monkeypatch.delenv(THREADS_ENV, raising=False)
    assert parse_config(["ground"]).threads == 1
    monkeypatch.setenv(THREADS_ENV, "3")
    assert parse_config(["ground"]).threads == 3
    assert parse_config(["ground", "--threads", "2"]).threads == 2
    monkeypatch.setenv(THREADS_ENV, "lots")
    assert main(["ground"]) == EXIT_CONFIG


def test_ground_json_deterministic(capsys):
    argv = ["ground", "--n", "8", "--lambda", "0.6"]
    assert main(argv) == EXIT_OK
    first = capsys.readouterr().out
    assert main(argv) == EXIT_OK
    second = capsys.readouterr().out
    assert first == second
    result = json.loads(first)
    assert result["critical_coupling"] == 0.5
    assert list(result) == sorted(result)
    assert result["f_q_two_atom"] > 0.0
    assert result["parity_ok"] is True


def test_sweep_csv_contract(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    argv = [
        "sweep", "--n", "6", "--lambdas", "0.0,0.3,0.6", "--out", str(out),
    ]
    assert main(argv) == EXIT_OK
    lines = _read_lines(out)
    assert lines[0] == CSV_HEADER
    assert len(lines) == 4
    lams = []
    for line in lines[1:]:
        cells = line.split(",")
        assert cells[0] == "6"
        # float cells are shortest-repr and must round-trip exactly
        for cell in cells[1:8]:
            assert repr(float(cell)) == cell
        assert cells[9] in ("0", "1")
        lams.append(float(cells[1]))
    assert lams == sorted(lams) == [0.0, 0.3, 0.6]

    manifest = json.loads((tmp_path / "sweep.csv.manifest.json").read_text())
    assert manifest["tool"] == "dicke-qfi"
    assert manifest["version"] == "0.1.0"
    assert manifest["config"]["command"] == "sweep"
    assert "tol_energy" in manifest["tolerances"]
    assert "test_default_axis_dominates" in manifest["generator_axis_note"]
    assert set(manifest["wall_times_s"]) == {"compute", "emit"}

    # a rerun reproduces the CSV byte for byte
    first = out.read_bytes()
    assert main(argv) == EXIT_OK
    assert out.read_bytes() == first


def test_thermo_csv_anchors(tmp_path):
    out = tmp_path / "thermo.csv"
    argv = ["thermo", "--lambdas", "0.0,0.5,1.0,20.0", "--out", str(out)]
    assert main(argv) == EXIT_OK
    lines = _read_lines(out)
    assert lines[0] == THERMO_HEADER
    rows = {float(l.split(",")[0]): [float(c) for c in l.split(",")] for l in lines[1:]}
    lam0, lamc, lam1, lam20 = rows[0.0], rows[0.5], rows[1.0], rows[20.0]
    # columns: lambda, mu, beta2, alpha, energy, f_q_limit, f_a_limit, expansion
    assert lam0[1:5] == [1.0, 0.0, 0.0, -0.5]
    assert lam0[5] == 0.0 and lam0[6] == 1.0
    assert lamc[6] == pytest.approx(math.sqrt(2.0), abs=1e-12)
    assert lamc[7] == pytest.approx(math.sqrt(2.0), abs=1e-12)
    assert lam1[1] == pytest.approx(0.25, abs=1e-15)
    assert lam1[2] == pytest.approx(0.375, abs=1e-15)
    assert lam1[4] == pytest.approx(-1.0625, abs=1e-12)
    assert lam1[5] == pytest.approx(60.0 / 17.0, abs=1e-12)
    assert lam1[6] == pytest.approx(0.06257907682620364, abs=1e-15)
    assert abs(lam20[5] - 4.0) < 1e-3


def test_scaling_command_small(tmp_path, capsys):
    out = tmp_path / "scan.csv"
    argv = ["scaling", "--sizes", "8,12,16,24", "--out", str(out)]
    assert main(argv) == EXIT_OK
    lines = _read_lines(out)
    assert lines[0] == CSV_HEADER and len(lines) == 5
    stdout = capsys.readouterr().out
    assert stdout.count("fit ") == 5
    manifest = json.loads((tmp_path / "scan.csv.manifest.json").read_text())
    extras = manifest["extras"]
    assert extras["critical_coupling"] == 0.5
    assert extras["f_a_limit"] == pytest.approx(math.sqrt(2.0), abs=1e-12)
    assert set(extras["fits"]) == {
        "f_q_two_atom", "f_a_deficit", "jz2_centered", "jx2", "jy2",
    }
    for fit in extras["fits"].values():
        assert fit["exponent"] < 0.0


def test_collapse_command(tmp_path, capsys):
    out = tmp_path / "collapse.csv"
    argv = [
        "collapse", "--sizes", "8,12", "--lambdas", "0.3,0.6,0.8",
        "--out", str(out),
    ]
    assert main(argv) == EXIT_OK
    assert "4 points, 2 skipped" in capsys.readouterr().out
    lines = _read_lines(out)
    assert lines[0] == COLLAPSE_HEADER and len(lines) == 5
    for line, (n, lam) in zip(
        lines[1:], ((8, 0.6), (8, 0.8), (12, 0.6), (12, 0.8))
    ):
        cells = line.split(",")
        assert int(cells[0]) == n and float(cells[1]) == lam
        assert float(cells[2]) == pytest.approx(n * (lam - 0.5) ** 1.5, rel=1e-15)


def test_truncation_cap_exits_3(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    argv = [
        "sweep", "--n", "12", "--lambdas", "1.5", "--ntr", "8",
        "--ntr-max", "8", "--out", str(out),
    ]
    assert main(argv) == EXIT_SOLVER
    assert "error:" in capsys.readouterr().err
    assert not out.exists()


def test_unwritable_output_exits_4(tmp_path, capsys):
    out = tmp_path / "missing" / "thermo.csv"
    argv = ["thermo", "--lambdas", "0.5", "--out", str(out)]
    assert main(argv) == EXIT_IO
    assert "error:" in capsys.readouterr().err
