import json
import math

import numpy as np
import pytest

import cgpdf


def test_presets():
    p = cgpdf.triad_preset("triad_modified")
    assert p.A1 == -2.5 and p.epsilon == 0.1
    assert cgpdf.triad_preset("triad_damped").A1 == -0.5
    with pytest.raises(cgpdf.ConfigError):
        cgpdf.triad_preset("nope")


def test_invariant_measure():
    cov = cgpdf.invariant_covariance(cgpdf.triad_preset("triad", "I"))
    assert np.allclose(np.diag(cov), [5 / 7, 0.5, 1.0])
    assert cgpdf.invariant_covariance(cgpdf.triad_preset("triad", "II")) is None


def test_simulate_shapes_and_reproducibility():
    p = cgpdf.triad_preset("triad_modified")
    t, x = cgpdf.simulate(p, L=16, t_end=0.1, dt=1e-3, stride=10, seed=3)
    assert len(t) == 11 and x.shape == (11, 3, 16)
    _, y = cgpdf.simulate(p, L=16, t_end=0.1, dt=1e-3, stride=10, seed=3)
    assert np.array_equal(x, y)


def test_filter_and_density():
    p = cgpdf.triad_preset("triad_modified")
    r = cgpdf.simulate_filtered(p, L=200, t_end=1.0, stride=1000, seed=2)
    assert r["degenerate_count"] == 0
    uI = r["states"][-1, :2, :]
    grid = np.linspace(-4, 4, 41)
    pts = np.array([[0.0] * 41, [0.0] * 41, grid])
    vals = cgpdf.hybrid_density(uI, r["post_mean"], r["post_var"], pts)
    assert np.all(vals >= 0) and vals.max() > 0


def test_formulas():
    assert math.isclose(cgpdf.gaussian_l2_norm(np.eye(1)), 1 / (2 * math.sqrt(math.pi)))
    assert math.isclose(cgpdf.scaling_bandwidth_H(500, 2), 500 ** (-1 / 3))
    c = cgpdf.structural_constants(cgpdf.triad_preset("triad_damped", "I"))
    assert c["applicable"]
    assert math.isclose(c["Dc"], 200 / (1 - math.exp(-2)))


def test_run_command(tmp_path):
    cfg = {"simulation": {"L": 10, "t_end": 0.2}, "output": {"dir": str(tmp_path)}}
    assert cgpdf.run("simulate", cfg) == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["status"] == "ok"
    assert {f["path"] for f in manifest["files"]} == {"trajectories.csv", "moments.csv"}
    with pytest.raises(cgpdf.ConfigError):
        cgpdf.run("simulate", {"simulation": {"bogus": 1}})
