import numpy as np
import pytest

from helmdd import mesh, model


def test_homogeneous_slowness():
    vm = model.HomogeneousModel(1500.0)
    assert vm.sample_slowness(np.array([3.0, 4.0])) == pytest.approx(1 / 1500.0)


def test_gridded_midpoint_averages_slowness():
    # bilinear interpolation acts on 1/c, not on c
    vm = model.GriddedModel(100.0, np.array([[1500.0, 1500.0],
                                             [3000.0, 3000.0]]))
    s = vm.sample_slowness(np.array([50.0, 50.0]))
    assert s == pytest.approx((1 / 1500.0 + 1 / 3000.0) / 2)


def test_gridded_exact_at_nodes():
    vals = np.array([[1500.0, 2500.0], [3000.0, 8500.0]])
    vm = model.GriddedModel(10.0, vals)
    for iy in range(2):
        for ix in range(2):
            s = vm.sample_slowness(np.array([10.0 * ix, 10.0 * iy]))
            assert s == pytest.approx(1 / vals[iy, ix], rel=1e-15)


def test_gridded_clamps_outside():
    vm = model.GriddedModel(10.0, np.array([[1500.0, 3000.0]]))
    assert vm.sample_slowness(np.array([-5.0, 0.0])) == pytest.approx(1 / 1500.0)
    assert vm.sample_slowness(np.array([50.0, 3.0])) == pytest.approx(1 / 3000.0)


def test_layered_lookup():
    vm = model.LayeredModel([0.0, 10_000.0], [1500.0, 8500.0])
    assert vm.sample_slowness(np.array([0.0, 12_000.0])) == pytest.approx(1 / 8500.0)
    assert vm.sample_slowness(np.array([0.0, 100.0])) == pytest.approx(1 / 1500.0)
    assert vm.c_min == 1500.0


def test_invalid_models_rejected():
    with pytest.raises(ValueError):
        model.HomogeneousModel(-5.0)
    with pytest.raises(ValueError):
        model.LayeredModel([0.0, 5.0], [1500.0])
    with pytest.raises(ValueError):
        model.GriddedModel(0.0, np.ones((2, 2)))


def test_wavenumber_homogeneous(unit_square, water):
    kf = model.build_wavenumber(water, unit_square, 1.0)
    assert np.allclose(kf.k, 2 * np.pi / 1500.0)


def test_wavenumber_linear_in_frequency(unit_square, water):
    k1 = model.build_wavenumber(water, unit_square, 1.0).k
    k2 = model.build_wavenumber(water, unit_square, 2.0).k
    assert np.allclose(k2, 2 * k1)


def test_wavenumber_bounds(unit_square):
    vm = model.mini_subduction_model()
    kf = model.build_wavenumber(vm, mesh.generate_rect_mesh(8, 4, 10200.0, 2800.0), 2.0)
    w = 2 * np.pi * 2.0
    assert np.all(kf.k >= w / vm.c_max - 1e-15)
    assert np.all(kf.k <= w / vm.c_min + 1e-15)


def test_layered_field_continuous_at_vertices():
    # the nodal field is single-valued, so the projected k is continuous
    m = mesh.generate_rect_mesh(4, 4, 100.0, 100.0)
    vm = model.LayeredModel([0.0, 50.0], [1500.0, 3000.0])
    kf = model.build_wavenumber(vm, m, 1.0)
    assert kf.k.shape == (m.num_vertices,)
    assert np.all(kf.k > 0)


def test_mini_subduction_contrast():
    vm = model.mini_subduction_model()
    assert vm.c_min == pytest.approx(1500.0)
    assert vm.c_max == pytest.approx(8500.0)
    # water on top, fast material at depth
    assert vm.sample_slowness(np.array([100.0, 0.0])) == pytest.approx(1 / 1500.0)
    assert vm.sample_slowness(np.array([100.0, 2800.0])) < 1 / 2000.0


def test_gridded_model_file_roundtrip(tmp_path):
    vm = model.mini_subduction_model(Lx=1000.0, Ly=500.0, spacing=100.0)
    path = tmp_path / "model.grid"
    model.write_gridded_model(vm, path)
    back = model.read_gridded_model(path)
    assert back.spacing == vm.spacing
    assert np.array_equal(back.values, vm.values)
