"""Exit codes, report files, and output shape of the command-line front end."""

import subprocess
import sys

import pytest

import cellbench.cli as cli
from cellbench import EquivalenceReport, load_config

CFG_TEXT = """
mesh.nx = 5
mesh.ny = 5
mesh.nz = 5
cells.count = 30
cells.box = 10,10,10,90,90,90
steps = 2
seed = 3
"""


@pytest.fixture
def cfg_file(tmp_path):
    path = tmp_path / "tiny.cfg"
    path.write_text(CFG_TEXT)
    return str(path)


def run_cli(*argv):
    return cli.main(list(argv))


# ---------------------------------------------------------------- model

def test_model_table(capsys):
    assert run_cli("model", "--chunks", "75", "--max-workers", "12") == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].split("\t") == ["workers", "chunks_per_worker", "model_lb",
                                    "model_speedup"]
    table = {int(r[0]): r for r in (ln.split("\t") for ln in lines[1:])}
    assert table[8][2] == "0.937500"
    assert table[11][2] == "0.974026"  # more workers, better balance
    assert table[11][3] == table[12][3]  # shared ceiling, shared plateau


# ---------------------------------------------------------------- run

def test_run_writes_reports(cfg_file, tmp_path, capsys):
    out = str(tmp_path / "out")
    code = run_cli("run", "--config", cfg_file, "--set", "steps=1",
                   "--out", out)
    assert code == 0
    stdout = capsys.readouterr().out
    assert "checksum" in stdout
    for name in ("timings.csv", "efficiency.csv", "config.resolved.txt"):
        assert (tmp_path / "out" / name).exists()
    resolved = load_config(str(tmp_path / "out" / "config.resolved.txt"))
    assert resolved.steps == 1  # --set wins over the file
    assert resolved.out == out


def test_unknown_set_key_is_a_config_error(cfg_file, capsys):
    assert run_cli("run", "--config", cfg_file, "--set", "mesh.nw=9") == 2
    assert "config error" in capsys.readouterr().err


def test_malformed_set_flag(cfg_file, capsys):
    assert run_cli("run", "--config", cfg_file, "--set", "steps") == 2


def test_capacity_exhaustion_exit_code(cfg_file, tmp_path, capsys):
    code = run_cli(
        "run", "--config", cfg_file, "--out", str(tmp_path / "o"),
        "--set", "cells.division_rate=5.0", "--set", "cells.cap=35",
        "--set", "steps=10",
    )
    assert code == 4
    assert "capacity error" in capsys.readouterr().err


# ---------------------------------------------------------------- sweep

def test_sweep_outputs(cfg_file, tmp_path, capsys):
    out = str(tmp_path / "sw")
    code = run_cli(
        "sweep", "--config", cfg_file, "--out", out,
        "--workers", "1,2", "--repeats", "1",
        "--strategies",
        "inplace/outer/cell_static/append;temp/outer/voxel(16)/append",
    )
    assert code == 0
    stdout = capsys.readouterr().out
    assert "baseline  inplace/outer/cell_static/append" in stdout
    assert stdout.count("\tok") == 4
    assert (tmp_path / "sw" / "efficiency.csv").exists()
    assert (tmp_path / "sw" / "speedup.tsv").exists()


# ---------------------------------------------------------------- verify

def test_verify_pass(cfg_file, capsys):
    code = run_cli(
        "verify", "--config", cfg_file,
        "-A", "inplace/outer/cell_static/append",
        "-B", "temp/collapsed/nonempty_voxel(4)/sorted(1)",
        "--workers-b", "3",
    )
    assert code == 0
    assert "PASS: bit-identical final state" in capsys.readouterr().out


def test_verify_failure_exit_code(cfg_file, capsys, monkeypatch):
    # wiring check: a failed report must surface as exit code 3
    monkeypatch.setattr(
        cli, "verify_equivalence",
        lambda a, b: EquivalenceReport(False, "cell 0 velocity differs",
                                       "aaaa", "bbbb"),
    )
    code = run_cli("verify", "--config", cfg_file,
                   "-A", "inplace/outer/cell_static/append",
                   "-B", "temp/outer/cell_static/append")
    assert code == 3
    assert "FAIL: cell 0 velocity differs" in capsys.readouterr().out


# ---------------------------------------------------------------- packaging

def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "cellbench", "model", "--chunks", "6",
         "--max-workers", "3"],
        capture_output=True, text=True, timeout=60,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("workers\t")
