import pytest

from helmdd import assembly, mesh, model


@pytest.fixture(scope="session")
def unit_square():
    return mesh.generate_rect_mesh(4, 4, 1.0, 1.0)


@pytest.fixture(scope="session")
def water():
    return model.HomogeneousModel(1500.0)


@pytest.fixture(scope="session")
def two_strip_setup():
    """Small heterogeneous two-strip problem used across solver tests."""
    m = mesh.generate_rect_mesh(16, 8, 2000.0, 1000.0)
    vm = model.LayeredModel([0.0, 500.0], [1500.0, 4000.0])
    kf = model.build_wavenumber(vm, m, 1.5)
    part = mesh.partition_strips(m, 2, "x")
    dm = assembly.build_dofmap(m, part, order=2)
    prob = assembly.assemble_global(m, dm, kf)
    src = assembly.assemble_point_sources(m, dm, [(500.0, 300.0), (1400.0, 650.0)])
    return m, vm, kf, part, dm, prob, src
