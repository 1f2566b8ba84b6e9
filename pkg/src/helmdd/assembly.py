"""Continuous-Galerkin Lagrange assembly of the Helmholtz system, point
sources, interface transmission operators and subdomain matrices.

The global weak form is A = K - M_{k^2} - i M_{Gamma,k}: stiffness minus
the k^2-weighted mass minus i times the k-weighted boundary mass on the
outer (radiating) boundary, giving a complex symmetric (not Hermitian)
matrix. The transmission operator acting on interface traces is

    S u = i k alpha u + (beta / (i k)) Lap_tangential u,

discretized as S = i alpha M_{S,k} - beta K_{S,1/(ik)} with the tangential
stiffness integrated by parts and endpoint terms dropped; alpha and beta
are the dimensionless complex coefficients tuned for convergence.
"""

from dataclasses import dataclass

import numpy as np

from . import reference
from .linalg import CsrMatrix, MultiVector
from .mesh import Mesh, OverlapPartition, Partition

EDGE_QUAD_POINTS = 6


@dataclass(frozen=True)
class TransmissionParams:
    """Impedance coefficients: `order` 0 uses alpha only, `order` 2 adds the
    tangential-Laplacian term scaled by beta."""

    order: int = 0
    alpha: complex = 1.0
    beta: complex = 0.0

    def __post_init__(self):
        if self.order not in (0, 2):
            raise ValueError("transmission order must be 0 or 2")
        if self.order == 0 and self.beta != 0:
            raise ValueError("order-0 conditions require beta = 0")
        if self.alpha.real < 0:
            raise ValueError("alpha must have nonnegative real part "
                             "(dissipative condition)")


@dataclass(eq=False)
class DofMap:
    """Lagrange DOF numbering: vertices, then (order-1) nodes per mesh edge
    (ordered from the lower vertex index), then cell-interior nodes."""

    mesh: Mesh
    order: int
    n_dofs: int
    element_dofs: np.ndarray
    dof_coords: np.ndarray
    edge_vertices: np.ndarray
    _edge_index: dict
    subdomain_dofs: dict
    trace_dofs: dict

    def edge_dof_slots(self, a: int, b: int) -> np.ndarray:
        """Global DOFs on edge (a, b): endpoints then interior nodes ordered
        from min(a,b) to max(a,b). Matches reference.lagrange_nodes_edge."""
        lo, hi = (a, b) if a < b else (b, a)
        e = self._edge_index[(lo, hi)]
        nv = self.mesh.num_vertices
        interior = nv + e * (self.order - 1) + np.arange(self.order - 1)
        return np.concatenate([[lo, hi], interior]).astype(np.int64)

    def dofs_on_edges(self, edges: np.ndarray) -> np.ndarray:
        """Unique DOFs on an edge set, sorted canonically by coordinates."""
        if len(edges) == 0:
            return np.empty(0, dtype=np.int64)
        dofs = np.unique(np.concatenate(
            [self.edge_dof_slots(int(a), int(b)) for a, b in edges]))
        xy = self.dof_coords[dofs]
        return dofs[np.lexsort((xy[:, 1], xy[:, 0]))]

    def dofs_of_elements(self, elements: np.ndarray) -> np.ndarray:
        return np.unique(self.element_dofs[elements])


def build_dofmap(mesh: Mesh, partition: Partition | None = None,
                 order: int = 1) -> DofMap:
    """Number the DOFs and, when a partition is given, record per-subdomain
    and per-interface index maps."""
    if order not in (1, 2, 3):
        raise ValueError(f"unsupported polynomial order {order}")
    nv = mesh.num_vertices
    nt = mesh.num_triangles

    tri = mesh.triangles
    raw_edges = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    raw_edges = np.sort(raw_edges, axis=1)
    edge_vertices = np.unique(raw_edges, axis=0)
    edge_index = {(int(a), int(b)): e for e, (a, b) in enumerate(edge_vertices)}
    ne = len(edge_vertices)

    per_edge = order - 1
    n_interior = {1: 0, 2: 0, 3: 1}[order]
    n_dofs = nv + ne * per_edge + nt * n_interior

    nb = (order + 1) * (order + 2) // 2
    element_dofs = np.empty((nt, nb), dtype=np.int64)
    element_dofs[:, :3] = tri
    if per_edge > 0:
        for le, (va, vb) in enumerate(((0, 1), (1, 2), (2, 0))):
            ga, gb = tri[:, va], tri[:, vb]
            lo = np.minimum(ga, gb)
            hi = np.maximum(ga, gb)
            eids = np.array([edge_index[(int(a), int(b))]
                             for a, b in zip(lo, hi)], dtype=np.int64)
            base = nv + eids * per_edge
            for m in range(per_edge):
                # local node m sits at parameter (m+1)/order along va->vb;
                # flip the slot when the canonical direction is reversed
                slot = np.where(ga < gb, m, per_edge - 1 - m)
                element_dofs[:, 3 + le * per_edge + m] = base + slot
    if n_interior:
        element_dofs[:, nb - n_interior:] = (
            nv + ne * per_edge + np.arange(nt, dtype=np.int64)[:, None])

    coords = np.empty((n_dofs, 2))
    coords[:nv] = mesh.vertices
    if per_edge > 0:
        va = mesh.vertices[edge_vertices[:, 0]]
        vb = mesh.vertices[edge_vertices[:, 1]]
        for m in range(per_edge):
            t = (m + 1) / order
            coords[nv + m::per_edge][:ne] = (1 - t) * va + t * vb
    if n_interior:
        coords[nv + ne * per_edge:] = mesh.vertices[tri].mean(axis=1)

    dm = DofMap(mesh, order, n_dofs, element_dofs, coords,
                edge_vertices, edge_index, {}, {})
    if partition is not None:
        for i in range(partition.n_subdomains):
            dm.subdomain_dofs[i] = dm.dofs_of_elements(partition.elements_of(i))
        for (i, j), edges in partition.interfaces.items():
            if i < j:
                dofs = dm.dofs_on_edges(edges)
                dm.trace_dofs[(i, j)] = dofs
                dm.trace_dofs[(j, i)] = dofs
    return dm


def _geometry(mesh: Mesh, elements: np.ndarray):
    pts = mesh.vertices[mesh.triangles[elements]]
    J = np.stack([pts[:, 1] - pts[:, 0], pts[:, 2] - pts[:, 0]], axis=2)
    detJ = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    invJ = np.empty_like(J)
    invJ[:, 0, 0] = J[:, 1, 1]
    invJ[:, 0, 1] = -J[:, 0, 1]
    invJ[:, 1, 0] = -J[:, 1, 0]
    invJ[:, 1, 1] = J[:, 0, 0]
    invJ /= detJ[:, None, None]
    return detJ, invJ


def _volume_coo(mesh: Mesh, dofmap: DofMap, kfield, elements: np.ndarray):
    """COO triples of K - M_{k^2} over the element set (global DOF ids)."""
    p = dofmap.order
    pts, w = reference.triangle_rule(2 * p + 2)
    N, dN = reference.tri_basis(p, pts)
    lam, _ = reference.tri_basis(1, pts)
    detJ, invJ = _geometry(mesh, elements)
    if np.any(detJ <= 0):
        bad = elements[np.flatnonzero(detJ <= 0)[0]]
        raise ValueError(f"degenerate element {bad} (nonpositive area)")
    G = np.einsum("eji,qaj->eqai", invJ, dN)
    K = np.einsum("q,e,eqai,eqbi->eab", w, detJ, G, G, optimize=True)
    k_vert = kfield.k[mesh.triangles[elements]]
    kq = np.einsum("qa,ea->eq", lam, k_vert)
    Mk2 = np.einsum("q,e,eq,qa,qb->eab", w, detJ, kq**2, N, N, optimize=True)
    ed = dofmap.element_dofs[elements]
    nb = ed.shape[1]
    rows = np.broadcast_to(ed[:, :, None], (len(elements), nb, nb))
    cols = np.broadcast_to(ed[:, None, :], (len(elements), nb, nb))
    return rows.ravel(), cols.ravel(), (K - Mk2).astype(np.complex128).ravel()


def _mass_coo(mesh: Mesh, dofmap: DofMap, elements: np.ndarray):
    p = dofmap.order
    pts, w = reference.triangle_rule(2 * p + 2)
    N, _ = reference.tri_basis(p, pts)
    detJ, _ = _geometry(mesh, elements)
    Mref = np.einsum("q,qa,qb->ab", w, N, N)
    M = detJ[:, None, None] * Mref[None]
    ed = dofmap.element_dofs[elements]
    nb = ed.shape[1]
    rows = np.broadcast_to(ed[:, :, None], (len(elements), nb, nb))
    cols = np.broadcast_to(ed[:, None, :], (len(elements), nb, nb))
    return rows.ravel(), cols.ravel(), M.astype(np.complex128).ravel()


def _edge_quadrature(dofmap: DofMap, kfield, edges: np.ndarray):
    """Per-edge trace DOFs (ne, p+1), lengths, and k at quadrature points."""
    p = dofmap.order
    tq, wq = reference.edge_rule(EDGE_QUAD_POINTS)
    N1, dN1 = reference.edge_basis(p, tq)
    edofs = np.array([dofmap.edge_dof_slots(int(a), int(b)) for a, b in edges])
    va = dofmap.mesh.vertices[edges[:, 0]]
    vb = dofmap.mesh.vertices[edges[:, 1]]
    # edge_dof_slots orders nodes from the lower vertex index
    lo_is_a = edges[:, 0] < edges[:, 1]
    ka = np.where(lo_is_a, kfield.k[edges[:, 0]], kfield.k[edges[:, 1]])
    kb = np.where(lo_is_a, kfield.k[edges[:, 1]], kfield.k[edges[:, 0]])
    L = np.linalg.norm(vb - va, axis=1)
    kq = ka[:, None] * (1 - tq)[None, :] + kb[:, None] * tq[None, :]
    return edofs, L, kq, (tq, wq, N1, dN1)


def _boundary_robin_coo(mesh: Mesh, dofmap: DofMap, kfield, edges: np.ndarray):
    """k-weighted boundary mass M_{Gamma,k} (caller applies the -i factor)."""
    if len(edges) == 0:
        z = np.empty(0, dtype=np.int64)
        return z, z, np.empty(0, dtype=np.complex128)
    edofs, L, kq, (tq, wq, N1, _) = _edge_quadrature(dofmap, kfield, edges)
    Me = np.einsum("e,eq,q,qa,qb->eab", L, kq, wq, N1, N1)
    nb = edofs.shape[1]
    rows = np.broadcast_to(edofs[:, :, None], (len(edges), nb, nb))
    cols = np.broadcast_to(edofs[:, None, :], (len(edges), nb, nb))
    return rows.ravel(), cols.ravel(), Me.astype(np.complex128).ravel()


def assemble_interface_operator(dofmap: DofMap, edges: np.ndarray, kfield,
                                params: TransmissionParams):
    """Transmission matrix S and unweighted interface mass on an edge set.

    Returns (S, M_S, trace_dofs): both matrices are symmetric and indexed by
    the canonical trace ordering `trace_dofs`.
    """
    if len(edges) == 0:
        raise ValueError("empty interface")
    trace = dofmap.dofs_on_edges(edges)
    pos = {int(d): idx for idx, d in enumerate(trace)}
    nt = len(trace)
    edofs, L, kq, (tq, wq, N1, dN1) = _edge_quadrature(dofmap, kfield, edges)

    Mk = np.einsum("e,eq,q,qa,qb->eab", L, kq, wq, N1, N1)
    M0 = np.einsum("e,q,qa,qb->eab", L, wq, N1, N1)
    S_el = 1j * params.alpha * Mk
    if params.beta != 0:
        # tangential stiffness with coefficient 1/(i k): d/ds = (1/L) d/dt
        Kc = np.einsum("e,eq,q,qa,qb->eab", 1.0 / L, 1.0 / (1j * kq), wq,
                       dN1, dN1)
        S_el = S_el - params.beta * Kc
    loc = np.vectorize(pos.__getitem__)(edofs)
    nb = edofs.shape[1]
    rows = np.broadcast_to(loc[:, :, None], (len(edges), nb, nb)).ravel()
    cols = np.broadcast_to(loc[:, None, :], (len(edges), nb, nb)).ravel()
    S = CsrMatrix.from_coo((nt, nt), rows, cols, S_el.ravel(), symmetric=True)
    M_S = CsrMatrix.from_coo((nt, nt), rows, cols,
                             M0.astype(np.complex128).ravel(), symmetric=True)
    return S, M_S, trace


@dataclass(eq=False)
class AssembledProblem:
    """Global system matrix A, unweighted mass M (for L2 norms) and the
    point-source batch."""

    A: CsrMatrix
    M: CsrMatrix
    sources: MultiVector | None = None


def assemble_global(mesh: Mesh, dofmap: DofMap, kfield) -> AssembledProblem:
    """Assemble A = K - M_{k^2} - i M_{Gamma,k} and the mass matrix M."""
    n = dofmap.n_dofs
    all_el = np.arange(mesh.num_triangles)
    r1, c1, v1 = _volume_coo(mesh, dofmap, kfield, all_el)
    r2, c2, v2 = _boundary_robin_coo(mesh, dofmap, kfield, mesh.boundary_edges)
    A = CsrMatrix.from_coo((n, n), np.concatenate([r1, r2]),
                           np.concatenate([c1, c2]),
                           np.concatenate([v1, -1j * v2]), symmetric=True)
    rm, cm, vm = _mass_coo(mesh, dofmap, all_el)
    M = CsrMatrix.from_coo((n, n), rm, cm, vm, symmetric=True)
    return AssembledProblem(A, M)


def locate_point(mesh: Mesh, x_s) -> tuple[int, np.ndarray]:
    """Containing element (lowest index on ties) and barycentric-style
    reference coordinates of the point."""
    x_s = np.asarray(x_s, dtype=float)
    detJ, invJ = _geometry(mesh, np.arange(mesh.num_triangles))
    p0 = mesh.vertices[mesh.triangles[:, 0]]
    xi = np.einsum("eij,ej->ei", invJ, x_s[None, :] - p0)
    tol = 1e-12
    inside = (xi[:, 0] >= -tol) & (xi[:, 1] >= -tol) & (xi.sum(axis=1) <= 1 + tol)
    hits = np.flatnonzero(inside)
    if len(hits) == 0:
        raise ValueError(f"source position {tuple(x_s)} is outside the domain")
    return int(hits[0]), xi[hits[0]]


def assemble_point_source(mesh: Mesh, dofmap: DofMap, x_s) -> np.ndarray:
    """Discrete delta load: basis functions of the containing element
    evaluated at the source position."""
    el, xi = locate_point(mesh, x_s)
    N, _ = reference.tri_basis(dofmap.order, xi[None, :])
    load = np.zeros(dofmap.n_dofs, dtype=np.complex128)
    load[dofmap.element_dofs[el]] = N[0]
    return load


def assemble_point_sources(mesh: Mesh, dofmap: DofMap, positions) -> MultiVector:
    cols = [assemble_point_source(mesh, dofmap, x) for x in positions]
    return MultiVector(np.column_stack(cols))


def _boundary_edges_of(mesh: Mesh, elements: np.ndarray) -> np.ndarray:
    """Outer-boundary edges owned by triangles of the given element set."""
    elset = set(elements.tolist())
    owner = {}
    for t, tri in enumerate(mesh.triangles):
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            key = (int(a), int(b)) if a < b else (int(b), int(a))
            owner.setdefault(key, []).append(t)
    keep = []
    for (a, b) in mesh.boundary_edges:
        key = (int(a), int(b)) if a < b else (int(b), int(a))
        tris = owner[key]
        if tris[0] in elset:
            keep.append((a, b))
    return np.array(keep, dtype=np.int64).reshape(-1, 2)


def _local_matrix(mesh: Mesh, dofmap: DofMap, kfield, elements: np.ndarray,
                  transmission_edge_sets, params: TransmissionParams):
    """Subdomain matrix: volume terms, outer Robin terms, and -S on each of
    the given transmission edge sets. Returns (local_dofs, A_local)."""
    local_dofs = dofmap.dofs_of_elements(elements)
    rows, cols, vals = [], [], []
    r, c, v = _volume_coo(mesh, dofmap, kfield, elements)
    rows.append(r), cols.append(c), vals.append(v)
    br, bc, bv = _boundary_robin_coo(mesh, dofmap, kfield,
                                     _boundary_edges_of(mesh, elements))
    rows.append(br), cols.append(bc), vals.append(-1j * bv)
    for edges in transmission_edge_sets:
        if len(edges) == 0:
            continue
        S, _, trace = assemble_interface_operator(dofmap, edges, kfield, params)
        sr = np.repeat(np.arange(len(trace)), np.diff(S.indptr))
        rows.append(trace[sr])
        cols.append(trace[S.indices])
        vals.append(-S.data)
    gr = np.concatenate(rows)
    gc = np.concatenate(cols)
    gv = np.concatenate(vals)
    lr = np.searchsorted(local_dofs, gr)
    lc = np.searchsorted(local_dofs, gc)
    nl = len(local_dofs)
    return local_dofs, CsrMatrix.from_coo((nl, nl), lr, lc, gv, symmetric=True)


def assemble_local_oras(mesh: Mesh, dofmap: DofMap, overlap: OverlapPartition,
                        i: int, kfield, params: TransmissionParams):
    """Extended-subdomain matrix with transmission conditions on its rim."""
    return _local_matrix(mesh, dofmap, kfield, overlap.extended_elements[i],
                         [overlap.artificial_boundary[i]], params)


def assemble_local_osm(mesh: Mesh, dofmap: DofMap, partition: Partition,
                       i: int, kfield, params: TransmissionParams):
    """Owned-subdomain matrix with transmission conditions on every owned
    interface; incoming trace data couples as a weak M_S load (see osm)."""
    edge_sets = [partition.interfaces[(i, j)] for j in partition.neighbors_of(i)]
    return _local_matrix(mesh, dofmap, kfield, partition.elements_of(i),
                         edge_sets, params)
