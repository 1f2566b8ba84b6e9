"""Structured triangular meshes, geometric partitions, one-layer overlaps
and subdomain interface extraction.

Coordinates are in meters; the second coordinate is depth (y = 0 is the
surface). Meshes and partitions are immutable after construction.
"""

from dataclasses import dataclass, field

import numpy as np

GAMMA_INF = "Gamma_inf"


@dataclass(frozen=True, eq=False)
class Mesh:
    """2D triangulation of the rectangle [0, Lx] x [0, Ly].

    vertices : (nv, 2) float array
    triangles : (nt, 3) int array, counter-clockwise
    boundary_edges : (nbe, 2) int array of vertex pairs on the outer boundary
    boundary_tags : list of tag strings, one per boundary edge
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: list[str]
    Lx: float
    Ly: float

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_triangles(self) -> int:
        return len(self.triangles)

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def centroids(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    def validate(self) -> None:
        """Check structural invariants; raises ValueError on violation."""
        if np.any(self.signed_areas() <= 0):
            raise ValueError("mesh contains a non-positively-oriented triangle")
        counts = _edge_use_counts(self.triangles)
        boundary = {tuple(sorted(e)) for e, c in counts.items() if c == 1}
        tagged = {tuple(sorted(e)) for e in self.boundary_edges}
        if boundary != tagged:
            raise ValueError("tagged boundary does not match topological boundary")


@dataclass(eq=False)
class Partition:
    """Element labelling into N subdomains plus shared-edge interfaces.

    interfaces maps every ordered neighbor pair (i, j) to the same canonical
    (nedges, 2) array of shared edges as (j, i); edges are vertex pairs with
    the lower index first, sorted by midpoint coordinates.
    """

    mesh: Mesh
    subdomain_of: np.ndarray
    n_subdomains: int
    interfaces: dict[tuple[int, int], np.ndarray]
    owner_of_dof: np.ndarray | None = field(default=None, compare=False)

    def elements_of(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.subdomain_of == i)

    def neighbors_of(self, i: int) -> list[int]:
        return sorted(j for (a, j) in self.interfaces if a == i)


@dataclass(frozen=True, eq=False)
class OverlapPartition:
    """One-layer node-connected extension of a Partition.

    extended_elements[i] is the owned element set plus every element sharing
    at least one vertex with it; artificial_boundary[i] holds the rim edges
    of the extended set that are not on the outer boundary.
    """

    base: Partition
    extended_elements: list[np.ndarray]
    artificial_boundary: list[np.ndarray]


def _edge_use_counts(triangles: np.ndarray) -> dict[tuple[int, int], int]:
    counts: dict[tuple[int, int], int] = {}
    for tri in triangles:
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            key = (int(a), int(b)) if a < b else (int(b), int(a))
            counts[key] = counts.get(key, 0) + 1
    return counts


def generate_rect_mesh(nx: int, ny: int, Lx: float, Ly: float) -> Mesh:
    """Uniform right-triangle split of an nx-by-ny grid on [0,Lx] x [0,Ly].

    Produces 2*nx*ny triangles and (nx+1)*(ny+1) vertices; every outer edge
    is tagged Gamma_inf.
    """
    if nx < 1 or ny < 1:
        raise ValueError("cell counts must be at least 1")
    if Lx <= 0 or Ly <= 0:
        raise ValueError("domain extents must be positive")
    xs = np.linspace(0.0, Lx, nx + 1)
    ys = np.linspace(0.0, Ly, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * (nx + 1) + i

    tris = []
    for j in range(ny):
        for i in range(nx):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v01, v11 = vid(i, j + 1), vid(i + 1, j + 1)
            tris.append((v00, v10, v11))
            tris.append((v00, v11, v01))
    triangles = np.array(tris, dtype=np.int64)

    edges = []
    for i in range(nx):
        edges.append((vid(i, 0), vid(i + 1, 0)))
        edges.append((vid(i, ny), vid(i + 1, ny)))
    for j in range(ny):
        edges.append((vid(0, j), vid(0, j + 1)))
        edges.append((vid(nx, j), vid(nx, j + 1)))
    boundary_edges = np.array(edges, dtype=np.int64)
    tags = [GAMMA_INF] * len(boundary_edges)
    return Mesh(vertices, triangles, boundary_edges, tags, float(Lx), float(Ly))


def resolution_for(model, f: float, ppw: int, order: int) -> float:
    """Cell size h (m) giving `ppw` grid points per minimum wavelength.

    One order-p element spans p first-order spacings, hence the factor.
    """
    if f <= 0:
        raise ValueError("frequency must be positive")
    if ppw < 2:
        raise ValueError("need at least 2 points per wavelength")
    if order not in (1, 2, 3):
        raise ValueError(f"unsupported polynomial order {order}")
    return model.c_min / (f * ppw) * order


def _canonical_edge_array(edges: list[tuple[int, int]], vertices: np.ndarray) -> np.ndarray:
    arr = np.array([(min(a, b), max(a, b)) for a, b in edges], dtype=np.int64)
    if len(arr) == 0:
        return arr.reshape(0, 2)
    mid = 0.5 * (vertices[arr[:, 0]] + vertices[arr[:, 1]])
    order = np.lexsort((mid[:, 1], mid[:, 0]))
    return arr[order]


def _interfaces_from_labels(mesh: Mesh, labels: np.ndarray) -> dict[tuple[int, int], np.ndarray]:
    edge_owners: dict[tuple[int, int], list[int]] = {}
    for t, tri in enumerate(mesh.triangles):
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            key = (int(a), int(b)) if a < b else (int(b), int(a))
            edge_owners.setdefault(key, []).append(int(labels[t]))
    pairs: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for edge, owners in edge_owners.items():
        if len(owners) == 2 and owners[0] != owners[1]:
            i, j = sorted(owners)
            pairs.setdefault((i, j), []).append(edge)
    interfaces: dict[tuple[int, int], np.ndarray] = {}
    for (i, j), edges in pairs.items():
        arr = _canonical_edge_array(edges, mesh.vertices)
        interfaces[(i, j)] = arr
        interfaces[(j, i)] = arr
    return interfaces


def partition_strips(mesh: Mesh, N: int, axis: str = "x") -> Partition:
    """Split into N strips of equal width by element-centroid bucketing."""
    if axis not in ("x", "y"):
        raise ValueError("axis must be 'x' or 'y'")
    if N < 1:
        raise ValueError("subdomain count must be at least 1")
    extent = mesh.Lx if axis == "x" else mesh.Ly
    coords = np.unique(mesh.vertices[:, 0 if axis == "x" else 1])
    if N > len(coords) - 1:
        raise ValueError(f"cannot cut {len(coords) - 1} cells into {N} strips")
    c = mesh.centroids()[:, 0 if axis == "x" else 1]
    labels = np.minimum((c / (extent / N)).astype(np.int64), N - 1)
    return Partition(mesh, labels, N, _interfaces_from_labels(mesh, labels))


def partition_grid(mesh: Mesh, Nx: int, Ny: int) -> Partition:
    """2D centroid bucketing into an Nx-by-Ny block grid.

    Blocks are numbered row-major (index = iy * Nx + ix). Cross-point
    vertices belong to every incident interface edge set.
    """
    if Nx < 1 or Ny < 1:
        raise ValueError("block counts must be at least 1")
    xs = np.unique(mesh.vertices[:, 0])
    ys = np.unique(mesh.vertices[:, 1])
    if Nx > len(xs) - 1 or Ny > len(ys) - 1:
        raise ValueError("more blocks than cells along an axis")
    c = mesh.centroids()
    ix = np.minimum((c[:, 0] / (mesh.Lx / Nx)).astype(np.int64), Nx - 1)
    iy = np.minimum((c[:, 1] / (mesh.Ly / Ny)).astype(np.int64), Ny - 1)
    labels = iy * Nx + ix
    return Partition(mesh, labels, Nx * Ny, _interfaces_from_labels(mesh, labels))


def grow_overlap(p: Partition) -> OverlapPartition:
    """Add one node-connected element layer to every subdomain."""
    mesh = p.mesh
    nv = mesh.num_vertices
    vert_to_tris: list[list[int]] = [[] for _ in range(nv)]
    for t, tri in enumerate(mesh.triangles):
        for v in tri:
            vert_to_tris[v].append(t)
    global_boundary = {tuple(sorted(map(int, e))) for e in mesh.boundary_edges}

    extended: list[np.ndarray] = []
    rims: list[np.ndarray] = []
    for i in range(p.n_subdomains):
        owned = p.elements_of(i)
        verts = np.unique(mesh.triangles[owned])
        ext = set(owned.tolist())
        for v in verts:
            ext.update(vert_to_tris[v])
        ext_arr = np.array(sorted(ext), dtype=np.int64)
        extended.append(ext_arr)

        counts = _edge_use_counts(mesh.triangles[ext_arr])
        rim = [e for e, c in counts.items() if c == 1 and e not in global_boundary]
        rims.append(_canonical_edge_array(rim, mesh.vertices))
    return OverlapPartition(p, extended, rims)


def extract_interfaces(p: Partition, dofmap) -> dict[tuple[int, int], np.ndarray]:
    """Canonical per-pair interface DOF lists, shared by both directions.

    DOFs are every volume DOF geometrically on the interface edges, sorted
    by coordinates so that the (i, j) and (j, i) fields index identically.
    """
    out: dict[tuple[int, int], np.ndarray] = {}
    for (i, j), edges in p.interfaces.items():
        if i > j:
            continue
        dofs = dofmap.dofs_on_edges(edges)
        out[(i, j)] = dofs
        out[(j, i)] = dofs
    return out


def write_mesh_text(mesh: Mesh, path) -> None:
    """Plain-text export: one record per line (vertices, triangles, edges)."""
    with open(path, "w") as fh:
        fh.write(f"mesh {mesh.num_vertices} {mesh.num_triangles} "
                 f"{len(mesh.boundary_edges)} {mesh.Lx!r} {mesh.Ly!r}\n")
        for i, (x, y) in enumerate(mesh.vertices):
            fh.write(f"v {i} {float(x)!r} {float(y)!r}\n")
        for i, (a, b, c) in enumerate(mesh.triangles):
            fh.write(f"t {i} {a} {b} {c}\n")
        for i, ((a, b), tag) in enumerate(zip(mesh.boundary_edges, mesh.boundary_tags)):
            fh.write(f"b {i} {a} {b} {tag}\n")
