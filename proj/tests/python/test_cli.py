import json
import os
import subprocess

import pytest

CLI = os.environ.get("NORMINT_CLI")
pytestmark = pytest.mark.skipif(not CLI, reason="NORMINT_CLI not set")


def run(*args):
    return subprocess.run([CLI, *map(str, args)], check=True, capture_output=True, text=True).stdout


def made_of(pred, gt):
    line = run("eval", "--pred", pred, "--gt", gt).strip().splitlines()[-1]
    return json.loads(line)["made"]


def trace(path):
    with open(path) as f:
        return [json.loads(line) for line in f]


def test_synth_integrate_eval(tmp_path):
    scene = tmp_path / "scene"
    run("synth", "--scene", "step", "--size", 32, "--out", scene)
    for name in ("normals.png", "mask.png", "gt.pfm", "scene.json"):
        assert (scene / name).exists()
    args = ["--normals", scene / "normals.png", "--mask", scene / "mask.png"]
    run("integrate", *args, "--early-stop", "--out", tmp_path / "ours")
    run("poisson", *args, "--out", tmp_path / "base")
    for name in ("depth.pfm", "gprime.png", "mesh.obj", "trace.jsonl"):
        assert (tmp_path / "ours" / name).exists()
    ours = made_of(tmp_path / "ours" / "depth.pfm", scene / "gt.pfm")
    base = made_of(tmp_path / "base" / "depth.pfm", scene / "gt.pfm")
    assert ours < 0.05 < 0.5 < base


def test_config_file_and_flag_precedence(tmp_path):
    scene = tmp_path / "scene"
    run("synth", "--scene", "plane", "--size", 12, "--out", scene)
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# schedule\nlambda_soft = 0.1\nlambda-hard = 1.1\nnmax = 40\n")
    run("integrate", "--config", cfg, "--normals", scene / "normals.png", "--nmax", 4, "--out", tmp_path / "o")
    records = trace(tmp_path / "o" / "trace.jsonl")
    header, its = records[0], [r for r in records if r["record"] == "iteration"]
    assert header["config"]["nmax"] == 4
    assert [r["lambda"] for r in its] == pytest.approx([0.1, 0.6, 1.1, 0.6])


def test_bad_input_fails(tmp_path):
    proc = subprocess.run([CLI, "integrate", "--normals", tmp_path / "missing.png", "--out", tmp_path],
                          capture_output=True, text=True)
    assert proc.returncode != 0
    assert "missing.png" in proc.stderr
