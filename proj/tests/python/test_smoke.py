"""Smoke tests for the Python bindings."""

import numpy as np
import pytest

import lstsr


@pytest.fixture
def geo():
    return lstsr.GeoTransform(10.0, 60.0, 0.01, 10, 10)


def make_grid(geo, values, valid=None):
    return lstsr.Grid2D(geo, np.asarray(values, dtype=float), valid, "K")


def test_grid_numpy_round_trip(geo):
    vals = np.arange(100, dtype=float).reshape(10, 10) + 250.0
    g = make_grid(geo, vals)
    assert g.values.shape == (10, 10)
    np.testing.assert_array_equal(g.values, vals)
    assert g.valid.all()
    assert g.valid_count() == 100


def test_nan_values_become_invalid(geo):
    vals = np.full((10, 10), 280.0)
    vals[0, 0] = np.nan
    g = make_grid(geo, vals)
    assert not g.valid[0, 0]
    assert g.valid_count() == 99


def test_coarsen_and_replicate(geo):
    g = make_grid(geo, np.full((10, 10), 280.0))
    c = lstsr.coarsen_nan_aware(g, 5)
    assert c.values.shape == (2, 2)
    assert np.allclose(c.values, 280.0)
    r = lstsr.replicate_nearest(c, 5)
    assert np.allclose(r.values, 280.0)


def test_upsample_bicubic_constant(geo):
    g = make_grid(geo, np.full((10, 10), 273.15))
    up = lstsr.upsample_bicubic(g, 5)
    assert up.values.shape == (50, 50)
    assert np.allclose(up.values, 273.15)


def test_codec_file_round_trip(tmp_path, geo):
    rng = np.random.default_rng(0)
    vals = rng.uniform(200.0, 360.0, size=(10, 10))
    g = make_grid(geo, vals)
    header = lstsr.profile("lst")
    header.geo = geo
    header.satellite = "METOPA"
    packed = lstsr.pack(g, header)
    path = tmp_path / lstsr.format_filename(packed.header)
    lstsr.write_npg(path, [packed])
    blocks = lstsr.read_npg(path)
    assert len(blocks) == 1
    back = lstsr.unpack(blocks[0])
    assert np.abs(back.values - vals).max() <= 0.005 + 1e-12


def test_filename_round_trip():
    header = lstsr.profile("lst")
    header.geo = lstsr.GeoTransform(0, 50, 0.01, 1, 1)
    header.satellite = "MetOp-A"
    header.timestamp = lstsr.UtcTime(2020, 8, 20, 10, 30)
    name = lstsr.format_filename(header)
    assert name == "LST_METOPA_202008201030_DAY_v1.0.npg"
    sat, ts, node, version = lstsr.parse_filename(name)
    assert sat == "METOPA"
    assert ts.compact() == "202008201030"
    assert node == lstsr.Node.DAY
    assert version == "v1.0"


def test_plan_matches_the_validation_geometry():
    plan = lstsr.plan(960, 960, 240, 240, 240, 240)
    assert len(plan.windows) == 16


def test_extract_stitch_identity(geo):
    rng = np.random.default_rng(1)
    g = make_grid(geo, rng.uniform(250.0, 300.0, size=(10, 10)))
    plan = lstsr.plan(10, 10, 6, 6, 4, 4)
    patches = [lstsr.extract(g, w) for w in plan.windows]
    back = lstsr.stitch_average(plan, patches, geo)
    np.testing.assert_allclose(back.values, g.values, rtol=1e-15)


def test_solve_pins_block_means():
    params = lstsr.SynthParams()
    params.seed = 11
    params.n_rows = 100
    params.n_cols = 100
    params.cloud_fraction = 0.2
    truth, guide, source = lstsr.generate(params, 5)
    coeffs = lstsr.edge_coefficients(lstsr.normalize_guide(guide), lstsr.GuideParams())
    sp = lstsr.SolverParams()
    sp.n_iterations = 50
    out, report = lstsr.solve(source, coeffs, sp)
    assert report.consistency_residual <= 1e-9
    back = lstsr.coarsen_nan_aware(out, 5)
    mask = source.valid
    assert np.abs(back.values[mask] - source.values[mask]).max() <= 1e-9


def test_solver_beats_bicubic_on_a_default_scene():
    params = lstsr.SynthParams()
    params.seed = 2
    truth, guide, source = lstsr.generate(params, 5)
    coeffs = lstsr.edge_coefficients(lstsr.normalize_guide(guide), lstsr.GuideParams())
    out, _ = lstsr.solve(source, coeffs, lstsr.SolverParams())

    def mae(est):
        m = est.valid & truth.valid
        return np.abs(est.values[m] - truth.values[m]).mean()

    assert mae(out) < mae(lstsr.upsample_bicubic(source, 5))


def test_compute_report_hand_values():
    r = lstsr.compute_report([0.0, 0.0, 0.0], [-1.0, 0.0, 1.0], 0.5)
    assert r.md == 0.0
    assert r.rsd == pytest.approx(1.4826, abs=1e-12)
    assert r.rmse == pytest.approx(np.sqrt(2.0 / 3.0), abs=1e-12)


def test_matchup_containing_cell(geo):
    g = make_grid(geo, np.full((10, 10), 290.0))
    inside = lstsr.Station("IN", 59.995, 10.005)
    outside = lstsr.Station("OUT", 40.0, -88.0)
    assert lstsr.matchup(g, inside) == pytest.approx(290.0)
    assert lstsr.matchup(g, outside) is None


def test_synth_determinism():
    params = lstsr.SynthParams()
    params.seed = 5
    params.n_rows = 50
    params.n_cols = 50
    a_truth, _, a_source = lstsr.generate(params, 5)
    b_truth, _, b_source = lstsr.generate(params, 5)
    np.testing.assert_array_equal(a_truth.values, b_truth.values)
    np.testing.assert_array_equal(a_source.values, b_source.values)


def test_downscale_pipeline(tmp_path):
    params = lstsr.SynthParams()
    params.seed = 8
    params.n_rows = 100
    params.n_cols = 100
    params.cloud_fraction = 0.1
    scene, guide, truth = lstsr.write_scene_files(tmp_path, params, 5)

    cfg = lstsr.RunConfig()
    cfg.input_dir = scene.parent
    cfg.guide_path = guide
    cfg.output_dir = tmp_path / "out"
    cfg.solver.n_iterations = 40
    cfg.tile.patch_h = 60
    cfg.tile.patch_w = 60
    cfg.tile.stride_v = 40
    cfg.tile.stride_h = 40
    status, log = lstsr.downscale(cfg)
    assert status == 0
    assert "status=ok" in log

    blocks = lstsr.read_npg(tmp_path / "out" / scene.name)
    names = [b.header.variable_name for b in blocks]
    assert "LST" in names and "LST_GAC" in names
    hr = lstsr.unpack(blocks[names.index("LST")])
    coarse = lstsr.unpack(blocks[names.index("LST_GAC")])
    back = lstsr.coarsen_nan_aware(hr, 5)
    m = coarse.valid
    assert np.abs(back.values[m] - coarse.values[m]).max() <= 0.005 + 1e-9


def test_error_mapping(geo):
    g = make_grid(geo, np.full((10, 10), 280.0))
    with pytest.raises(lstsr.LstsrError):
        lstsr.coarsen_nan_aware(g, 3)  # 10 is not divisible by 3
