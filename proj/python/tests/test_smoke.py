import math

import numpy as np
import pytest

import gmcf


def test_smooth_min_profile_values():
    assert gmcf.smooth_min_profile(2.0) == 0.0
    assert gmcf.smooth_min_profile(-2.0) == -2.0
    assert -1.0 < gmcf.smooth_min_profile(0.0) < 0.0


def test_mollified_min_sandwich():
    rng = np.random.default_rng(1)
    for a, b, d in zip(rng.uniform(-2, 2, 200), rng.uniform(-2, 2, 200), rng.uniform(0.01, 0.99, 200)):
        phi = gmcf.mollified_min(a, b, d)
        assert min(a, b) - d < phi <= min(a, b)


def test_infeasible_alteration_raises():
    assert gmcf.alteration_feasibility_bound() == pytest.approx(0.2237, rel=1e-3)
    with pytest.raises(gmcf.GmcfError):
        gmcf.boundary_alteration(10.0, 0.1)


def test_domain_geometry():
    ball = gmcf.parse_domain("ball:0,0:2")
    assert ball.dim == 2
    assert ball.signed_distance(np.array([0.5, 0.0])) == pytest.approx(1.5)
    assert ball.principal_curvatures(np.array([2.0, 0.0]))[0] == pytest.approx(0.5, rel=1e-5)
    assert gmcf.cone_contains("mean", np.array([-1.0, 2.0]))


def test_grid_round_trip(tmp_path):
    values = np.arange(12, dtype=float).reshape(3, 4)
    g = gmcf.Grid(values, 0.5, np.array([-1.0, 0.0]))
    path = str(tmp_path / "g.bin")
    gmcf.write_grid(path, g)
    r = gmcf.read_grid(path)
    assert r.extents == [3, 4]
    np.testing.assert_array_equal(r.values, values)


def test_grim_reaper_flow():
    times, frames = gmcf.solve_flow("interval:0.1:3.0415926535897931", "grim_reaper", "grim_reaper",
                                    math.pi / 128, 0.5)
    assert times[-1] == pytest.approx(0.5)
    final = frames[-1]
    err = 0.0
    for i, v in enumerate(final.values):
        if np.isfinite(v):
            x = final.node(i)[0]
            err = max(err, abs(v - (0.5 - math.log(math.sin(x)))))
    assert err < 5e-3


def test_cli_run_writes_outputs(tmp_path):
    text = "[run]\nsubcommand = flow\n[flow]\nh = 0.1\nt_end = 0.02\n"
    code, message, outputs = gmcf.run(text, str(tmp_path / "out"), 2)
    assert code == 0, message
    assert (tmp_path / "out" / "manifest.txt").exists()
    assert any("frames" in o for o in outputs)
    assert "flow.scheme" in " ".join(gmcf.documented_keys())
