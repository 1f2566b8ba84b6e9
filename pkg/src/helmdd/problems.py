"""Desk-problem setup shared by the tuning and benchmark drivers: build the
mesh at the requested resolution, partition it, assemble the global system
and sources, and run either solver against it."""

from dataclasses import dataclass, field

import numpy as np

from .assembly import (AssembledProblem, DofMap, TransmissionParams,
                       assemble_global, assemble_point_sources, build_dofmap)
from .krylov import KrylovConfig, RunStats
from .linalg import Factorization, MultiVector, factorize, solve_batch
from .mesh import (Mesh, OverlapPartition, Partition, generate_rect_mesh,
                   grow_overlap, partition_grid, partition_strips,
                   resolution_for)
from .model import VelocityModel, build_wavenumber
from .oras import build_oras, solve_oras
from .osm import build_osm, solve_osm

METHODS = ("oras", "osm")
DEFAULT_DOF_CAP = 200_000


def source_line(Lx: float, Ly: float, count: int, depth_frac: float = 0.05,
                margin_frac: float = 0.05) -> list[tuple[float, float]]:
    """Shallow horizontal source line: evenly spaced x, fixed small depth."""
    xs = np.linspace(margin_frac * Lx, (1 - margin_frac) * Lx, count)
    return [(float(x), depth_frac * Ly) for x in xs]


@dataclass(eq=False)
class ProblemSetup:
    """One assembled Helmholtz problem plus both solver front ends."""

    model: VelocityModel
    mesh: Mesh
    partition: Partition
    overlap: OverlapPartition
    dofmap: DofMap
    kfield: object
    problem: AssembledProblem
    sources: MultiVector
    f: float
    _ctx_cache: dict = field(default_factory=dict)
    _direct: Factorization | None = None

    @property
    def n_dofs(self) -> int:
        return self.dofmap.n_dofs

    def direct_reference(self) -> MultiVector:
        """Sparse-direct solution of all sources (factorization cached)."""
        if self._direct is None:
            self._direct = factorize(self.problem.A)
        return solve_batch(self._direct, self.sources)

    def build_ctx(self, method: str, params: TransmissionParams,
                  reuse: bool = True):
        key = (method, params)
        if reuse and key in self._ctx_cache:
            return self._ctx_cache[key]
        if method == "oras":
            ctx = build_oras(self.mesh, self.overlap, self.kfield, params,
                             self.dofmap, self.problem)
        elif method == "osm":
            ctx = build_osm(self.mesh, self.partition, self.kfield, params,
                            self.dofmap, self.problem)
        else:
            raise ValueError(f"unknown method {method!r}")
        if reuse:
            self._ctx_cache[key] = ctx
        return ctx

    def run(self, method: str, params: TransmissionParams, cfg: KrylovConfig,
            monitor=None, reuse: bool = True) -> tuple[MultiVector, RunStats]:
        ctx = self.build_ctx(method, params, reuse=reuse)
        if method == "oras":
            return solve_oras(ctx, self.sources, cfg, monitor=monitor)
        g, U, stats = solve_osm(ctx, self.sources, cfg, monitor=monitor)
        return U, stats

    def krylov_vector_length(self, method: str) -> int:
        """Global length of the vector GMRES iterates on."""
        if method == "oras":
            return self.n_dofs
        total = 0
        for (i, j), dofs in self.dofmap.trace_dofs.items():
            total += len(dofs)
        return total


def build_problem(model: VelocityModel, Lx: float, Ly: float, f: float,
                  order: int, ppw: int, partition_kind: str,
                  n_subdomains, source_positions,
                  dof_cap: int = DEFAULT_DOF_CAP) -> ProblemSetup:
    """Mesh at ppw points per minimum wavelength, partition, assemble.

    `partition_kind` is strips_x, strips_y or grid; for grid,
    `n_subdomains` is an (Nx, Ny) pair.
    """
    h = resolution_for(model, f, ppw, order)
    nx = max(1, int(np.ceil(Lx / h)))
    ny = max(1, int(np.ceil(Ly / h)))
    mesh = generate_rect_mesh(nx, ny, Lx, Ly)
    if partition_kind == "strips_x":
        partition = partition_strips(mesh, int(n_subdomains), "x")
    elif partition_kind == "strips_y":
        partition = partition_strips(mesh, int(n_subdomains), "y")
    elif partition_kind == "grid":
        Nx, Ny = n_subdomains
        partition = partition_grid(mesh, int(Nx), int(Ny))
    else:
        raise ValueError(f"unknown partition kind {partition_kind!r}")
    dofmap = build_dofmap(mesh, partition, order=order)
    if dofmap.n_dofs > dof_cap:
        raise ValueError(f"problem size {dofmap.n_dofs} exceeds the desk-scale "
                         f"cap of {dof_cap} DOFs")
    kfield = build_wavenumber(model, mesh, f)
    problem = assemble_global(mesh, dofmap, kfield)
    sources = assemble_point_sources(mesh, dofmap, source_positions)
    overlap = grow_overlap(partition)
    return ProblemSetup(model, mesh, partition, overlap, dofmap, kfield,
                        problem, sources, f)
