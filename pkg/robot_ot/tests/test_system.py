"""
System Checks
=============

Dependency availability and end-to-end runs of the command line in a
child process, the way a user invokes it.
"""

import sys
import json
import importlib
import subprocess
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parents[2]
COMMANDS = ["solve", "detect", "estimate-mean", "gen", "bench", "scan-lambda"]


def robot(*argv, timeout=60):
    return subprocess.run(
        [sys.executable, "main.py", *argv],
        cwd=REPO_ROOT,
        capture_output=True,
        text=True,
        timeout=timeout
    )


@pytest.mark.parametrize("module", ["numpy", "scipy", "ot"])
def test_dependencies(module):
    assert importlib.import_module(module).__version__


def test_main_help():
    result = robot("--help")
    assert result.returncode == 0
    assert "Outlier-robust optimal transport" in result.stdout
    for command in COMMANDS:
        assert command in result.stdout


@pytest.mark.parametrize("command", COMMANDS)
def test_command_help(command):
    result = robot(command, "--help")
    assert result.returncode == 0
    assert "usage:" in result.stdout


def test_missing_command_is_usage_error():
    result = robot()
    assert result.returncode == 2
    assert json.loads(result.stderr.strip().splitlines()[-1])['error'] == "UsageError"


def test_gen_then_solve(tmp_path):
    data = tmp_path / "data.csv"
    result = robot("gen", "--n", "40", "--d", "2", "--seed", "5", "--out", str(data))
    assert result.returncode == 0
    assert json.loads(result.stdout)['n'] == 40

    result = robot("solve", "--source", str(data), "--target", str(data), "--lambda", "0.5")
    assert result.returncode == 0
    assert json.loads(result.stdout)['objective'] == pytest.approx(0.0, abs=1e-12)
    assert "INFO" in result.stderr


def test_stdout_carries_only_json(tmp_path):
    data = tmp_path / "data.csv"
    robot("gen", "--n", "10", "--d", "1", "--seed", "1", "--out", str(data))
    result = robot("detect", "--contaminated", str(data), "--clean", str(data), "--lambda", "1",
                   "--verbose")
    assert result.returncode == 0
    assert len(result.stdout.strip().splitlines()) == 1
    assert json.loads(result.stdout)['outlier_indices'] == []
