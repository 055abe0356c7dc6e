from __future__ import annotations

import csv
import io
import json
import subprocess
import sys

import pytest

from wbanlab.cli import main


def run(*argv):
    buf = io.StringIO()
    code = main(list(argv), out=buf)
    return code, buf.getvalue()


@pytest.fixture
def words(tmp_path):
    path = tmp_path / "words.txt"
    path.write_text("\n".join(["letmein", "qwerty", "hunter2", "dragon"]) + "\n", encoding="utf-8")
    return path


def test_run_protocol1():
    code, out = run("run", "--variant", "I", "--seed", "7")
    assert code == 0
    assert "MK_A = MK_B" in out
    assert out.splitlines()[0].startswith("A→B: ")
    assert "A: confirmed" in out and "B: confirmed" in out


@pytest.mark.parametrize("variant", ["I", "II", "III", "IV"])
def test_run_json(variant):
    code, out = run("run", "--variant", variant, "--seed", "3", "--password", "pw", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["session"]["agreed"] and doc["session"]["variant"] == variant
    assert len(doc["transcript"]) == 4


def test_run_is_deterministic():
    assert run("run", "--variant", "IV", "--seed", "99") == run("run", "--variant", "IV", "--seed", "99")
    assert run("run", "--variant", "IV", "--seed", "99")[1] != run("run", "--variant", "IV", "--seed", "98")[1]


def test_dictionary_attack(words):
    argv = ["attack", "--name", "dictionary_p3", "--password", "hunter2", "--dictionary", str(words), "--seed", "7"]
    code, out = run(*argv)
    assert code == 0
    assert "recovered_secret: hunter2" in out
    assert run(*argv) == (code, out)


def test_dictionary_attack_miss(tmp_path):
    path = tmp_path / "w.txt"
    path.write_text("alpha\nbeta\n")
    code, out = run("attack", "--name", "dictionary_p3", "--password", "hunter2", "--dictionary", str(path), "--seed", "1")
    assert code == 1 and "succeeded: False" in out


def test_impersonate_p1_cli():
    code, out = run("attack", "--name", "impersonate_p1", "--seed", "7")
    assert code == 0 and "succeeded: True" in out
    assert "wall_time_s" not in out
    code, out = run("attack", "--name", "impersonate_p1", "--seed", "7", "--timing")
    assert "wall_time_s" in out


@pytest.mark.parametrize(
    "argv",
    [
        ["attack", "--name", "impersonate_p1", "--mirror"],
        ["attack", "--name", "kci_p2"],
        ["attack", "--name", "impersonate_p3", "--password", "hunter2"],
        ["attack", "--name", "impersonate_p4", "--mirror"],
        ["attack", "--name", "forward_secrecy", "--variant", "III", "--whose", "B", "--password", "pw"],
        ["attack", "--name", "forward_secrecy", "--variant", "II", "--whose", "A"],
    ],
)
def test_attack_json_parses(argv):
    code, out = run(*argv, "--seed", "5", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["succeeded"] is True
    assert doc["adversary_mk"] == doc["honest_mk"]
    assert isinstance(doc["transcript"], list)


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "--variant", "III", "--seed", "1"],
        ["run", "--variant", "V"],
        ["run"],
        ["attack", "--name", "nope"],
        ["attack", "--name", "dictionary_p3", "--password", "x"],
        ["attack", "--name", "dictionary_p3", "--password", "x", "--dictionary", "/nonexistent/words.txt"],
        ["attack", "--name", "forward_secrecy", "--variant", "II", "--whose", "B"],
        ["attack", "--name", "forward_secrecy", "--variant", "I"],
        ["attack", "--name", "impersonate_p3"],
        ["report", "--trials", "0"],
        [],
    ],
)
def test_usage_errors(argv, capsys):
    code, _ = run(*argv)
    assert code == 2
    assert capsys.readouterr().err


def test_selftest():
    code, out = run("selftest")
    assert code == 0
    assert out.rstrip().endswith("checks passed")
    assert "FAIL" not in out
    doc = json.loads(run("selftest", "--format", "json")[1])
    assert doc["ok"] and len(doc["results"]) >= 15
    labels = [r["check"] for r in doc["results"]]
    assert len(set(labels)) == len(labels)


def test_report(tmp_path):
    out_dir = tmp_path / "rep"
    code, out = run("report", "--out", str(out_dir), "--trials", "2", "--dictionary-sizes", "10,100")
    assert code == 0
    for name in ("scenarios.csv", "dictionary_timing.csv", "attack_success.png", "dictionary_timing.png"):
        assert (out_dir / name).stat().st_size > 0
    rows = list(csv.DictReader((out_dir / "scenarios.csv").open()))
    assert {r["successes"] for r in rows} == {"2"}
    assert "forward_secrecy_III_B" in {r["scenario"] for r in rows}
    timing = list(csv.DictReader((out_dir / "dictionary_timing.csv").open()))
    assert [t["recovered"] for t in timing] == ["hunter2", "hunter2"]
    assert (out_dir / "attack_success.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    assert out.startswith("scenario,trials,successes")


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "wbanlab.cli", "run", "--variant", "II", "--seed", "7"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0 and "MK_A = MK_B" in proc.stdout
