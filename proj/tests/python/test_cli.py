"""End-to-end checks of the lstsr command-line tool."""

import os
import subprocess

import numpy as np
import pytest

CLI = os.environ.get("LSTSR_CLI")

pytestmark = pytest.mark.skipif(CLI is None, reason="LSTSR_CLI not set")


def run(*args, expect=0):
    proc = subprocess.run([CLI, *map(str, args)], capture_output=True, text=True)
    assert proc.returncode == expect, proc.stderr
    return proc.stdout


def test_tileplan_window_count():
    out = run("tileplan", 960, 960, 240, 240, 240, 240)
    assert "16 windows" in out


def test_tileplan_rejects_oversized_patches():
    proc = subprocess.run([CLI, "tileplan", "100", "100", "200", "100", "50", "50"],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    assert "exceeds" in proc.stderr


def test_synth_is_byte_deterministic(tmp_path):
    for d in ("a", "b"):
        run("synth", "--seed", 7, "--rows", 50, "--cols", 50, "--out-dir", tmp_path / d)
    for rel in ("scenes/LST_SYNTH_202001010000_DAY_v1.0.npg", "guide.npg", "truth.npg"):
        a = (tmp_path / "a" / rel).read_bytes()
        b = (tmp_path / "b" / rel).read_bytes()
        assert a == b


def test_pack_unpack_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    vals = rng.uniform(200.0, 360.0, size=(6, 8))
    vals[2, 3] = np.nan
    lines = ["6 8 10.0 60.0 0.01"]
    for row in vals:
        lines.append(" ".join("nan" if np.isnan(v) else repr(float(v)) for v in row))
    grid_txt = tmp_path / "grid.txt"
    grid_txt.write_text("\n".join(lines) + "\n")

    packed = tmp_path / "grid.npg"
    run("pack", grid_txt, packed, "--profile", "lst", "--satellite", "NOAA19",
        "--timestamp", "199501201230", "--node", "NIGHT")
    out_txt = tmp_path / "back.txt"
    info = run("unpack", packed, "--output", out_txt)
    assert "variable_name = LST" in info
    assert "satellite = NOAA19" in info

    back_lines = out_txt.read_text().strip().splitlines()
    assert back_lines[0].split()[:2] == ["6", "8"]
    back = np.array([[float(tok) for tok in line.split()] for line in back_lines[1:]])
    mask = ~np.isnan(vals)
    assert np.isnan(back[2, 3])
    assert np.abs(back[mask] - vals[mask]).max() <= 0.005 + 1e-12


def test_coarsen_subcommand(tmp_path):
    run("synth", "--seed", 9, "--rows", 50, "--cols", 50, "--out-dir", tmp_path)
    truth = tmp_path / "truth.npg"
    coarse = tmp_path / "coarse.npg"
    out = run("coarsen", truth, coarse, "--factor", 5)
    assert "10 x 10" in out


def test_downscale_cli_with_config(tmp_path):
    run("synth", "--seed", 12, "--rows", 100, "--cols", 100, "--cloud-fraction", 0.1,
        "--out-dir", tmp_path)
    config = tmp_path / "run.conf"
    config.write_text(
        "[run]\n"
        f"input_dir = {tmp_path / 'scenes'}\n"
        f"guide_path = {tmp_path / 'guide.npg'}\n"
        f"output_dir = {tmp_path / 'out'}\n"
        "[solver]\n"
        "n_iterations = 30\n"
        "[tile]\n"
        "patch_h = 60\npatch_w = 60\nstride_v = 40\nstride_h = 40\n"
    )
    out = run("downscale", "--config", config)
    assert "status=ok" in out
    assert (tmp_path / "out" / "run.log").exists()
    products = list((tmp_path / "out").glob("LST_*.npg"))
    assert len(products) == 1


def test_unknown_config_key_is_a_usage_error(tmp_path):
    config = tmp_path / "bad.conf"
    config.write_text("[run]\nwat = 1\n")
    proc = subprocess.run([CLI, "downscale", "--config", str(config)],
                          capture_output=True, text=True)
    assert proc.returncode == 2
