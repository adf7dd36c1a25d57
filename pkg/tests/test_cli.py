import json
import subprocess
import sys

import pytest

from stablelab.cli import main

SMALL = {"experiment": "arcsine", "n": 500, "N": 20, "block": 5, "seed": 4,
         "tolerances": {"ks": 1.0, "convention": 1.0}}


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def test_pass_exit_code_and_files(tmp_path, capsys):
    out = tmp_path / "rep"
    rc = main(["arcsine", "--config", write(tmp_path, SMALL), "--out", str(out)])
    assert rc == 0
    text = capsys.readouterr().out
    assert '"seed": 4' in text and "PASS ks[" in text
    assert sorted(p.name for p in out.iterdir()) == ["arcsine-4.csv", "arcsine-4.json", "arcsine-4.plot.py"]


def test_fail_exit_code(tmp_path, capsys):
    cfg = dict(SMALL, tolerances={"ks": 1e-9})
    assert main(["arcsine", "--config", write(tmp_path, cfg), "--out", str(tmp_path)]) == 2
    assert "FAIL ks[" in capsys.readouterr().out


def test_usage_errors(tmp_path, capsys):
    assert main(["arcsine"]) == 1
    assert main(["arcsine", "--config", str(tmp_path / "nope.json")]) == 1
    assert main(["nonsense"]) == 1
    assert main(["marginal", "--config", write(tmp_path, SMALL)]) == 1
    assert main(["arcsine", "--config", write(tmp_path, dict(SMALL, n=0))]) == 1
    assert main(["arcsine", "--config", write(tmp_path, SMALL), "--workers", "0"]) == 1
    err = capsys.readouterr().err
    assert "usage:" in err and "error:" in err


def test_reports_byte_identical_across_workers(tmp_path):
    cfg = write(tmp_path, SMALL)
    main(["arcsine", "--config", cfg, "--out", str(tmp_path / "a"), "--workers", "1"])
    main(["arcsine", "--config", cfg, "--out", str(tmp_path / "b"), "--workers", "3"])
    for ext in ("json", "csv"):
        a = (tmp_path / "a" / f"arcsine-4.{ext}").read_bytes()
        b = (tmp_path / "b" / f"arcsine-4.{ext}").read_bytes()
        assert a == b


def test_seed_precedence(tmp_path, monkeypatch):
    cfg = write(tmp_path, SMALL)
    monkeypatch.setenv("LAB_SEED", "11")
    main(["arcsine", "--config", cfg, "--out", str(tmp_path)])
    assert (tmp_path / "arcsine-11.json").exists()
    main(["arcsine", "--config", cfg, "--out", str(tmp_path), "--seed", "12"])
    assert (tmp_path / "arcsine-12.json").exists()
    monkeypatch.setenv("LAB_SEED", "x")
    assert main(["arcsine", "--config", cfg, "--out", str(tmp_path)]) == 1


def test_selftest_quick(tmp_path, capsys):
    assert main(["selftest", "--quick", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and "PASS j1_oracle_gap" in out


@pytest.mark.parametrize("args", [["--help"], ["arcsine", "--help"]])
def test_module_entry_point(args):
    r = subprocess.run([sys.executable, "-m", "stablelab", *args], capture_output=True, text=True)
    assert r.returncode == 0 and "usage" in r.stdout
