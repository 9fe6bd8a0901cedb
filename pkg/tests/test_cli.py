import csv
import json
import subprocess
import sys

from blowup.cli import EXIT_OK, EXIT_USAGE, main


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_bad_model_path(tmp_path):
    assert main(["chart", "--model", str(tmp_path / "nope.model"), "--out", str(tmp_path)]) == EXIT_USAGE


def test_help_runs():
    r = subprocess.run([sys.executable, "-m", "blowup.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "chart" in r.stdout


def test_chart_outputs(tmp_path):
    assert main(["chart", "--model", "example3", "--N", "40", "--out", str(tmp_path)]) == EXIT_OK
    rows = {r["name"]: r for r in _rows(tmp_path / "equilibria.csv")}
    assert rows["pinf_s+"]["status"] == "chart" and float(rows["pinf_s+"]["r0"]) < 1e-6
    assert rows["pb+"]["kind"] == "source"
    cert = (tmp_path / "certificate_pinf_s+.txt").read_text()
    assert "Y0" in cert and "r0" in cert
    assert json.loads((tmp_path / "chart_pinf_s+.json").read_text())["certificate"]["N"] == 40


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults\nmodel = example1\nN = 60\n")
    out = tmp_path / "a"
    assert main(["chart", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    assert json.loads((out / "chart_p2.json").read_text())["certificate"]["N"] == 60
    out = tmp_path / "b"
    assert main(["chart", "--config", str(cfg), "--N", "80", "--out", str(out)]) == EXIT_OK
    assert json.loads((out / "chart_p2.json").read_text())["certificate"]["N"] == 80


def test_table_example1(tmp_path):
    assert main(["table", "--model", "example1", "--out", str(tmp_path)]) == EXIT_OK
    rows = _rows(tmp_path / "table.csv")
    assert [r["label"] for r in rows] == ["P1", "P2", "P3", "P4", "P5"]
    assert all(r["pass"] == "PASS" for r in rows)
    assert (tmp_path / "trajectory.csv").exists()


def test_surface(tmp_path):
    assert main(["surface", "--model", "example3", "--grid", "5", "--out", str(tmp_path)]) == EXIT_OK
    rows = _rows(tmp_path / "surface_pinf_s+.csv")
    assert len(rows) == 5
    by = {float(r["theta1"]): r for r in rows}
    # theta = 0 is the horizon equilibrium itself: certified t_max = 0
    assert by[0.0]["status"] == "ok" and float(by[0.0]["tmax_hi"]) == 0.0
    assert by[1.0]["status"] == "ok" and float(by[1.0]["tmax_lo"]) > 0
    assert by[-1.0]["status"] == "outside"


def test_scan_deterministic(tmp_path):
    args = ["scan", "--model", "example3", "--points", "4", "--dmin", "1e-4"]
    assert main(args + ["--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(args + ["--out", str(tmp_path / "b")]) == EXIT_OK
    a = (tmp_path / "a" / "scan.csv").read_bytes()
    assert a == (tmp_path / "b" / "scan.csv").read_bytes()
    sides = [r["outcome"] for r in _rows(tmp_path / "a" / "scan.csv")]
    assert sides == ["blowup", "blowup", "global", "global"]
