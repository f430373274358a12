import numpy as np
import pytest

import octimls


@pytest.fixture(scope="module")
def sphere_recon():
    gt = octimls.make_icosphere(0.5, 4)
    positions, normals = octimls.sample_surface(gt, 3000, seed=1)
    return gt, octimls.reconstruct(positions, normals, depth=5)


def test_mesh_arrays():
    mesh = octimls.make_icosphere(0.5, 2)
    assert mesh.vertices.shape == (162, 3)
    assert mesh.triangles.shape == (320, 3)
    assert mesh.euler_characteristic() == 2
    assert np.allclose(np.linalg.norm(mesh.vertices, axis=1), 0.5)
    rebuilt = octimls.TriangleMesh(mesh.vertices, mesh.triangles)
    assert rebuilt.area() == pytest.approx(mesh.area())


def test_bad_input_raises_library_error():
    with pytest.raises(octimls.Error, match="invalid-mesh"):
        octimls.TriangleMesh(np.zeros((3, 3)), np.array([[0, 1, 5]], dtype=np.int32))
    with pytest.raises(octimls.Error, match="io"):
        octimls.read_obj("/nonexistent/mesh.obj")


def test_sphere_field(sphere_recon):
    _, mls = sphere_recon
    assert len(mls) == 3000
    assert mls.depth == 5
    assert np.all(mls.radii > 0)
    x = np.array([[0.55, 0.0, 0.0], [0.0, -0.45, 0.0]])
    values, gradients, band = mls.eval(x)
    assert band.all()
    assert values == pytest.approx([0.05, -0.05], abs=0.01)
    assert gradients[0] @ [1, 0, 0] > 0.99


def test_pipeline_roundtrip(sphere_recon, tmp_path):
    gt, mls = sphere_recon
    mesh = octimls.extract_mesh(mls, resolution=64)
    assert mesh.is_closed_manifold()
    assert mesh.euler_characteristic() == 2
    path = tmp_path / "recon.obj"
    octimls.write_obj(path, mesh)
    again = octimls.read_obj(path)
    assert np.allclose(again.vertices, mesh.vertices)
    report = octimls.evaluate(again, gt, samples=20000)
    assert report["cd1"] < 0.1
    assert report["nc"] > 0.95
    mls.write(tmp_path / "recon.mls")
    assert len(octimls.read_mls(tmp_path / "recon.mls")) == len(mls)


def test_chamfer_of_shifted_sets():
    x = np.random.default_rng(0).uniform(-1, 1, (200, 3))
    assert octimls.chamfer_l1(x, x) == 0.0
    assert octimls.chamfer_l1(x, x + [1e-3, 0, 0]) == pytest.approx(1e-3)


def test_short_fit_runs():
    cfg = octimls.FitConfig()
    cfg.stage1_epochs = 1
    cfg.stage2_epochs = 1
    cfg.steps_per_epoch = 2
    mls, initial, final, diverged = octimls.fit_mesh(octimls.make_icosphere(0.5, 2), depth=4, config=cfg)
    assert not diverged
    assert len(mls) > 0
    assert final < initial
