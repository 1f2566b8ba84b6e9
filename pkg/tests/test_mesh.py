import numpy as np
import pytest

from helmdd import mesh
from helmdd.assembly import build_dofmap
from helmdd.model import HomogeneousModel


def test_minimal_grid():
    m = mesh.generate_rect_mesh(1, 1, 1.0, 1.0)
    assert m.num_triangles == 2
    assert m.num_vertices == 4
    assert len(m.boundary_edges) == 4
    m.validate()


def test_counts_follow_grid():
    # 2*nx*ny triangles, (nx+1)(ny+1) vertices
    m = mesh.generate_rect_mesh(4, 2, 2.0, 1.0)
    assert m.num_triangles == 16
    assert m.num_vertices == 15


def test_areas_partition_domain():
    m = mesh.generate_rect_mesh(3, 3, 1.0, 1.0)
    assert abs(m.signed_areas().sum() - 1.0) < 1e-14
    assert np.all(m.signed_areas() > 0)


def test_boundary_edges_match_topology():
    mesh.generate_rect_mesh(5, 3, 2.5, 1.0).validate()


@pytest.mark.parametrize("nx,ny,Lx,Ly", [(0, 1, 1.0, 1.0), (1, 1, 0.0, 1.0),
                                         (1, 1, 1.0, -2.0)])
def test_degenerate_grid_rejected(nx, ny, Lx, Ly):
    with pytest.raises(ValueError):
        mesh.generate_rect_mesh(nx, ny, Lx, Ly)


def test_resolution_follows_min_velocity():
    water = HomogeneousModel(1500.0)
    assert mesh.resolution_for(water, 1.0, 4, 1) == pytest.approx(375.0)
    assert mesh.resolution_for(water, 2.0, 4, 3) == pytest.approx(562.5)
    from helmdd.model import LayeredModel
    two = LayeredModel([0.0, 10_000.0], [1500.0, 8500.0])
    assert mesh.resolution_for(two, 1.0, 4, 1) == pytest.approx(375.0)


def test_single_strip_has_no_interfaces(unit_square):
    p = mesh.partition_strips(unit_square, 1, "x")
    assert p.n_subdomains == 1
    assert np.all(p.subdomain_of == 0)
    assert p.interfaces == {}


def test_two_strips_split_evenly(unit_square):
    p = mesh.partition_strips(unit_square, 2, "x")
    counts = np.bincount(p.subdomain_of)
    assert counts.tolist() == [16, 16]
    # one vertical cut of 4 shared edges
    assert set(p.interfaces) == {(0, 1), (1, 0)}
    assert len(p.interfaces[(0, 1)]) == 4
    assert np.array_equal(p.interfaces[(0, 1)], p.interfaces[(1, 0)])


def test_four_strips_on_thin_grid():
    m = mesh.generate_rect_mesh(4, 1, 4.0, 1.0)
    p = mesh.partition_strips(m, 4, "x")
    assert np.bincount(p.subdomain_of).tolist() == [2, 2, 2, 2]


def test_too_many_strips_rejected(unit_square):
    with pytest.raises(ValueError):
        mesh.partition_strips(unit_square, 5, "x")


def test_grid_partition_adjacency(unit_square):
    p = mesh.partition_grid(unit_square, 2, 2)
    assert p.n_subdomains == 4
    pairs = {k for k in p.interfaces if k[0] < k[1]}
    assert pairs == {(0, 1), (2, 3), (0, 2), (1, 3)}


def test_grid_degenerates_to_strips(unit_square):
    a = mesh.partition_grid(unit_square, 2, 1)
    b = mesh.partition_strips(unit_square, 2, "x")
    assert np.array_equal(a.subdomain_of, b.subdomain_of)


def test_single_block_grid(unit_square):
    p = mesh.partition_grid(unit_square, 1, 1)
    assert p.n_subdomains == 1 and p.interfaces == {}


def test_labels_cover_all_triangles(unit_square):
    for p in (mesh.partition_strips(unit_square, 4, "y"),
              mesh.partition_grid(unit_square, 2, 2)):
        assert np.bincount(p.subdomain_of, minlength=p.n_subdomains).sum() \
            == unit_square.num_triangles


def test_overlap_single_domain(unit_square):
    p = mesh.partition_strips(unit_square, 1, "x")
    ov = mesh.grow_overlap(p)
    assert np.array_equal(ov.extended_elements[0],
                          np.arange(unit_square.num_triangles))
    assert len(ov.artificial_boundary[0]) == 0


def test_overlap_adds_node_adjacent_layer(unit_square):
    p = mesh.partition_strips(unit_square, 2, "x")
    ov = mesh.grow_overlap(p)
    for i in range(2):
        owned = set(p.elements_of(i).tolist())
        ext = set(ov.extended_elements[i].tolist())
        assert ext >= owned
        owned_nodes = set(unit_square.triangles[sorted(owned)].ravel())
        for t in ext - owned:
            tri_nodes = set(unit_square.triangles[t].tolist())
            assert tri_nodes & owned_nodes, "added element shares no node"
    # extended sets overlap each other
    inter = set(ov.extended_elements[0]) & set(ov.extended_elements[1])
    assert inter


def test_overlap_preserves_owned_sets(unit_square):
    # re-deriving the base partition from the overlap returns the input
    p = mesh.partition_strips(unit_square, 4, "x")
    ov = mesh.grow_overlap(p)
    assert ov.base is p
    total = sum(len(p.elements_of(i)) for i in range(4))
    assert total == unit_square.num_triangles


def test_overlap_rim_inside_neighbors(unit_square):
    p = mesh.partition_strips(unit_square, 2, "x")
    ov = mesh.grow_overlap(p)
    # rim edges of subdomain 0 lie strictly inside subdomain 1's owned strip
    rim = ov.artificial_boundary[0]
    mids = 0.5 * (unit_square.vertices[rim[:, 0]] + unit_square.vertices[rim[:, 1]])
    assert np.all(mids[:, 0] > 0.5)


def test_interface_dofs_on_cut_line(unit_square):
    p = mesh.partition_strips(unit_square, 2, "x")
    dm = build_dofmap(unit_square, p, order=1)
    ifaces = mesh.extract_interfaces(p, dm)
    dofs = ifaces[(0, 1)]
    assert len(dofs) == 5  # vertices on x = Lx/2
    assert np.allclose(dm.dof_coords[dofs][:, 0], 0.5)
    assert np.array_equal(ifaces[(0, 1)], ifaces[(1, 0)])


def test_single_domain_interfaces_empty(unit_square):
    p = mesh.partition_strips(unit_square, 1, "x")
    dm = build_dofmap(unit_square, p, order=1)
    assert mesh.extract_interfaces(p, dm) == {}


def test_cross_point_in_all_four_interfaces(unit_square):
    p = mesh.partition_grid(unit_square, 2, 2)
    dm = build_dofmap(unit_square, p, order=1)
    ifaces = mesh.extract_interfaces(p, dm)
    center = np.flatnonzero((np.abs(dm.dof_coords[:, 0] - 0.5) < 1e-12)
                            & (np.abs(dm.dof_coords[:, 1] - 0.5) < 1e-12))[0]
    for pair in ((0, 1), (2, 3), (0, 2), (1, 3)):
        assert center in ifaces[pair]


def test_mesh_text_export_roundtrippable(tmp_path, unit_square):
    path = tmp_path / "mesh.txt"
    mesh.write_mesh_text(unit_square, path)
    lines = path.read_text().splitlines()
    head = lines[0].split()
    assert head[0] == "mesh"
    assert int(head[1]) == unit_square.num_vertices
    assert sum(1 for ln in lines if ln.startswith("v ")) == unit_square.num_vertices
    assert sum(1 for ln in lines if ln.startswith("t ")) == unit_square.num_triangles
    assert sum(1 for ln in lines if ln.startswith("b ")) == len(unit_square.boundary_edges)
