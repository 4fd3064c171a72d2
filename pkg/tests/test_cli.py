import json

import pytest

from csstokes.cli import EXIT_CONFIG, EXIT_OK, EXIT_USAGE, main
from csstokes.config import parse_config


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_run_two_particle_preset(tmp_path, capsys):
    out = tmp_path / "o"
    code, _, _ = run_cli(capsys, "run", "two_particle", "--out", str(out))
    assert code == EXIT_OK
    names = {p.name for p in out.iterdir()}
    assert {"timeseries.csv", "manifest.json", "checkpoint.npz", "config.txt"} <= names
    manifest = json.loads((out / "manifest.json").read_text())
    assert {a["file"] for a in manifest["artifacts"]} == {"timeseries.csv", "checkpoint.npz", "config.txt"}
    # the manifest is the newest file
    assert (out / "manifest.json").stat().st_mtime_ns >= max(p.stat().st_mtime_ns for p in out.iterdir())


def test_describe_matches_manifest(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["run", "two_particle", "--out", str(out)]) == EXIT_OK
    capsys.readouterr()
    code, text, _ = run_cli(capsys, "describe", str(out / "checkpoint.npz"))
    assert code == EXIT_OK
    info = dict(line.split(": ", 1) for line in text.splitlines())
    cfg = json.loads((out / "manifest.json").read_text())["config"]
    assert int(info["N"]) == cfg["n_particles"]
    assert int(info["grid_n"]) == cfg["grid_n"]
    assert float(info["t"]) == pytest.approx(cfg["t_end"])


def test_run_from_config_file(tmp_path, capsys):
    cfg = tmp_path / "sim.cfg"
    cfg.write_text("box_length = 6.283185307179586\ngrid_n = 8\nn_particles = 20\ndt = 0.01\nt_end = 0.03\n")
    out = tmp_path / "o"
    assert run_cli(capsys, "run", str(cfg), "--out", str(out))[0] == EXIT_OK
    assert parse_config(out / "config.txt") == parse_config(cfg)
    assert len((out / "timeseries.csv").read_text().splitlines()) == 5


def test_check_quick_table(capsys):
    code, text, _ = run_cli(capsys, "check", "full_coupling", "--quick", "--no-threshold")
    assert code == EXIT_OK
    for row in ("mass", "positivity", "momentum", "energy-budget", "energy-monotone", "support-bound",
                "picard-contraction", "moment-monitor"):
        assert any(line.startswith(row + " ") and "PASS" in line for line in text.splitlines()), row


def test_usage_error(capsys):
    code, _, err = run_cli(capsys, "frobnicate")
    assert code == EXIT_USAGE
    assert "usage" in err


def test_config_error_exit_code(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("box_length = 1\ngrid_n = 8\nn_particles = 2\ndt = -1\nt_end = 1\n")
    code, _, err = run_cli(capsys, "run", str(cfg), "--out", str(tmp_path / "o"))
    assert code == EXIT_CONFIG
    assert "dt" in err


def test_abort_reports_dump(tmp_path, capsys):
    cfg = tmp_path / "stall.cfg"
    cfg.write_text("box_length = 6.283185307179586\ngrid_n = 8\nn_particles = 200\ndt = 0.5\nt_end = 1\n"
                   "picard_max_iter = 2\npicard_tol = 1e-12\ninit.fluid = taylor_green:amp=0.1\n")
    code, _, err = run_cli(capsys, "run", str(cfg), "--out", str(tmp_path / "o"))
    assert code == 4
    assert "abort_step000000.npz" in err


def test_identical_runs_byte_identical(tmp_path, capsys):
    for name in ("a", "b"):
        assert main(["run", "two_particle", "--out", str(tmp_path / name)]) == EXIT_OK
    assert (tmp_path / "a" / "timeseries.csv").read_bytes() == (tmp_path / "b" / "timeseries.csv").read_bytes()
