import json
import subprocess
import sys

import pytest

from spinpat.cli import main


def test_prop1_passes(tmp_path):
    assert main(["prop1", "--max-p", "7", "--out", str(tmp_path), "-q"]) == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["summary"]["all_equal"] is True
    assert (tmp_path / "prop1.csv").exists()


def test_unknown_experiment():
    assert main(["nope"]) == 2


def test_bad_override(tmp_path):
    assert main(["prop1", "--set", "magnet.bogus=1", "--out", str(tmp_path)]) == 2


def test_bad_config_file(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("magnet: [1,\n")
    assert main(["prop1", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_unreadable_image(tmp_path):
    assert main(["compare3x3", "--input", str(tmp_path / "missing.txt"), "--out", str(tmp_path)]) == 2


def test_nonpositive_runs(tmp_path):
    assert main(["compare3x3", "--runs", "0", "--out", str(tmp_path)]) == 2


def test_failing_check_exits_1(tmp_path, monkeypatch):
    from spinpat import experiments

    def broken(params, seed=0, **_):
        r = experiments.ExperimentResult("prop1")
        r.checks["always"] = False
        return r

    monkeypatch.setitem(experiments.EXPERIMENTS, "prop1", broken)
    assert main(["prop1", "--out", str(tmp_path), "-q"]) == 1


def test_xnor_table_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["xnor-table", "--out", str(a), "-q"]) == 0
    assert main(["xnor-table", "--out", str(b), "-q"]) == 0
    files = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    assert files
    for f in files:
        assert (a / f).read_bytes() == (b / f).read_bytes()


def test_console_script(tmp_path):
    out = subprocess.run([sys.executable, "-m", "spinpat.cli", "prop1", "--out", str(tmp_path), "-q"],
                         capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
