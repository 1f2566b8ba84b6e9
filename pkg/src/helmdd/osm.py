"""Non-overlapping substructured Schwarz solver.

The unknowns are impedance traces: segment (i, j) of the interface field
holds the datum emitted by subdomain i toward j on their shared interface.
One operator application is a block-triangular 2x2 sweep: solve every
subdomain Helmholtz block for the incoming traces, then solve the interface
mass block to update the outgoing traces by

    t_ij = M^{-1} (-M g_ji - 2 S u_i|_interface),

whose fixed point solves the coupled problem. GMRES runs on (I - T) g = b
without a preconditioner; the right-hand side b comes from the same sweep
applied to the local source solutions, so the sign conventions cannot
drift apart.
"""

from dataclasses import dataclass, field

import numpy as np

from .assembly import AssembledProblem, DofMap, TransmissionParams, \
    assemble_interface_operator, assemble_local_osm
from .instrument import CostCounters
from .krylov import KrylovConfig, LinearOperator, RunStats, pblock_gmres
from .linalg import (CsrMatrix, Factorization, MultiVector,
                     SingularMatrixError, factorize, solve_batch, spmm)
from .mesh import Mesh, Partition
from .oras import dof_owners


@dataclass(frozen=True)
class InterfaceLayout:
    """Concatenation order of the per-ordered-pair trace segments."""

    pairs: tuple
    offsets: dict
    lengths: dict
    total: int

    def segment(self, data: np.ndarray, pair) -> np.ndarray:
        off = self.offsets[pair]
        return data[off:off + self.lengths[pair]]


def _build_layout(trace_dofs: dict) -> InterfaceLayout:
    pairs = tuple(sorted(trace_dofs))
    offsets, lengths = {}, {}
    total = 0
    for p in pairs:
        offsets[p] = total
        lengths[p] = len(trace_dofs[p])
        total += lengths[p]
    return InterfaceLayout(pairs, offsets, lengths, total)


class InterfaceField:
    """Batch of interface trace values over every ordered pair."""

    def __init__(self, layout: InterfaceLayout, data=None, width: int = 1):
        self.layout = layout
        if data is None:
            data = np.zeros((layout.total, width), dtype=np.complex128)
        self.data = np.ascontiguousarray(data, dtype=np.complex128)
        if self.data.shape[0] != layout.total:
            raise ValueError("field length does not match layout")

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def segment(self, pair) -> np.ndarray:
        return self.layout.segment(self.data, pair)

    def copy(self) -> "InterfaceField":
        return InterfaceField(self.layout, self.data.copy())


@dataclass(eq=False)
class _PairOps:
    """Shared discrete operators of one geometric interface {i, j}."""

    trace: np.ndarray           # global trace DOFs, canonical order
    S: CsrMatrix                # transmission matrix on the trace
    M: CsrMatrix                # unweighted interface mass
    M_factor: Factorization
    local_pos: dict             # side -> positions of trace in local dofs


@dataclass(eq=False)
class OsmContext:
    partition: Partition
    dofmap: DofMap
    local_dofs: list
    factors: list
    pair_ops: dict              # unordered (i, j), i < j -> _PairOps
    layout: InterfaceLayout
    owner_of_dof: np.ndarray
    A: CsrMatrix
    M_global: CsrMatrix
    counters: CostCounters = field(default_factory=CostCounters)

    @property
    def n_subdomains(self) -> int:
        return len(self.local_dofs)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def ops_of(self, i: int, j: int) -> _PairOps:
        return self.pair_ops[(i, j) if i < j else (j, i)]

    def local_interface_lengths(self) -> list[int]:
        """Per subdomain, the length of its outgoing trace segments: the
        local part of the vector GMRES iterates on."""
        out = [0] * self.n_subdomains
        for (i, j) in self.layout.pairs:
            out[i] += self.layout.lengths[(i, j)]
        return out


def build_osm(mesh: Mesh, partition: Partition, kfield,
              params: TransmissionParams, dofmap: DofMap,
              problem: AssembledProblem) -> OsmContext:
    """Factorize the subdomain and interface-mass blocks and wire the
    exchange tables."""
    if set(dofmap.trace_dofs) != set(partition.interfaces):
        raise ValueError("dofmap was not built for this partition "
                         "(interface trace maps are missing or stale)")
    owner = partition.owner_of_dof
    if owner is None:
        owner = dof_owners(partition, dofmap)
        partition.owner_of_dof = owner
    counters = CostCounters()
    local_dofs, factors = [], []
    for i in range(partition.n_subdomains):
        dofs, A_i = assemble_local_osm(mesh, dofmap, partition, i, kfield, params)
        try:
            factors.append(factorize(A_i, counters=counters))
        except SingularMatrixError as err:
            raise SingularMatrixError(err.step, err.column,
                                      where=f"subdomain {i}") from err
        local_dofs.append(dofs)

    pair_ops = {}
    for (i, j), edges in partition.interfaces.items():
        if i > j:
            continue
        S, M, trace = assemble_interface_operator(dofmap, edges, kfield, params)
        try:
            M_factor = factorize(M, counters=counters)
        except SingularMatrixError as err:
            raise SingularMatrixError(err.step, err.column,
                                      where=f"interface mass ({i},{j})") from err
        pos = {side: np.searchsorted(local_dofs[side], trace) for side in (i, j)}
        pair_ops[(i, j)] = _PairOps(trace, S, M, M_factor, pos)

    layout = _build_layout({p: d for p, d in dofmap.trace_dofs.items()})
    return OsmContext(partition, dofmap, local_dofs, factors, pair_ops,
                      layout, owner, problem.A, problem.M, counters)


def split_sources(ctx: OsmContext, sources: MultiVector) -> list[np.ndarray]:
    """Per-subdomain local loads; each global entry goes to the DOF's owner
    so that the per-subdomain loads sum back to the global load."""
    out = []
    for i, dofs in enumerate(ctx.local_dofs):
        f_i = sources.data[dofs].copy()
        f_i[ctx.owner_of_dof[dofs] != i] = 0.0
        out.append(f_i)
    return out


def _local_trace_loads(ctx: OsmContext, G: InterfaceField):
    """Incoming weak loads per subdomain and the cached M g_ji products."""
    width = G.width
    loads = [np.zeros((len(d), width), dtype=np.complex128)
             for d in ctx.local_dofs]
    mass_times_incoming = {}
    for (j, i) in ctx.layout.pairs:  # segment (j, i): emitted by j, into i
        ops = ctx.ops_of(i, j)
        Mg = spmm(ops.M, MultiVector(G.segment((j, i))),
                  counters=ctx.counters).data
        mass_times_incoming[(j, i)] = Mg
        loads[i][ops.local_pos[i]] += Mg
    return loads, mass_times_incoming


def _sweep(ctx: OsmContext, local_loads, mass_times_incoming, width):
    """Solve every subdomain block, then the interface-mass block; returns
    the updated outgoing field (the shared path of b and T)."""
    out = InterfaceField(ctx.layout, width=width)
    for i in range(ctx.n_subdomains):
        u_i = solve_batch(ctx.factors[i], MultiVector(local_loads[i]),
                          counters=ctx.counters).data
        for j in ctx.partition.neighbors_of(i):
            ops = ctx.ops_of(i, j)
            Su = spmm(ops.S, MultiVector(u_i[ops.local_pos[i]]),
                      counters=ctx.counters).data
            rhs = -2.0 * Su
            Mg = mass_times_incoming.get((j, i))
            if Mg is not None:
                rhs = rhs - Mg
            t_ij = solve_batch(ops.M_factor, MultiVector(rhs),
                               counters=ctx.counters).data
            out.segment((i, j))[:] = t_ij
    return out


def compute_b(ctx: OsmContext, sources: MultiVector) -> InterfaceField:
    """Traces emitted by the homogeneous-boundary local source solutions."""
    loads = split_sources(ctx, sources)
    return _sweep(ctx, loads, {}, sources.width)


def apply_T(ctx: OsmContext, G: InterfaceField) -> InterfaceField:
    """Exchange operator: local solves driven by incoming traces only."""
    loads, mass_in = _local_trace_loads(ctx, G)
    return _sweep(ctx, loads, mass_in, G.width)


def apply_IminusT(ctx: OsmContext, G: InterfaceField) -> InterfaceField:
    TG = apply_T(ctx, G)
    return InterfaceField(ctx.layout, G.data - TG.data)


def reconstruct(ctx: OsmContext, g: InterfaceField,
                sources: MultiVector) -> MultiVector:
    """Volume solution from converged traces: solve the local problems with
    both the incoming traces and the local source, then take each shared
    DOF from its owning (lowest-index) subdomain."""
    loads, _ = _local_trace_loads(ctx, g)
    for f_i, load in zip(split_sources(ctx, sources), loads):
        load += f_i
    U = np.zeros((ctx.n, sources.width), dtype=np.complex128)
    for i in range(ctx.n_subdomains):
        u_i = solve_batch(ctx.factors[i], MultiVector(loads[i]),
                          counters=ctx.counters).data
        mine = ctx.owner_of_dof[ctx.local_dofs[i]] == i
        U[ctx.local_dofs[i][mine]] = u_i[mine]
    return MultiVector(U)


def interface_jumps(ctx: OsmContext, g: InterfaceField,
                    sources: MultiVector) -> float:
    """Largest trace mismatch max |u_i - u_j| over all interfaces, for the
    continuity cross-check at convergence."""
    loads, _ = _local_trace_loads(ctx, g)
    for f_i, load in zip(split_sources(ctx, sources), loads):
        load += f_i
    locals_ = [solve_batch(ctx.factors[i], MultiVector(loads[i]),
                           counters=ctx.counters).data
               for i in range(ctx.n_subdomains)]
    worst = 0.0
    for (i, j), ops in ctx.pair_ops.items():
        jump = locals_[i][ops.local_pos[i]] - locals_[j][ops.local_pos[j]]
        worst = max(worst, float(np.max(np.abs(jump))))
    return worst


def solve_osm(ctx: OsmContext, sources: MultiVector, cfg: KrylovConfig,
              monitor=None):
    """Solve the substructured system, then reconstruct the volume field.

    Returns (g, U, stats); with a single subdomain there is no interface
    system and the solve degenerates to the direct local solves.
    """
    width = sources.width
    if ctx.layout.total == 0:
        before = ctx.counters.snapshot()
        U = reconstruct(ctx, InterfaceField(ctx.layout, width=width), sources)
        after = ctx.counters.snapshot()
        stats = RunStats([np.array([0.0])] * width, [0] * width,
                         ["converged"] * width,
                         {c: after[c] - before[c] for c in after},
                         krylov_bytes=0, n_space=0, width=width,
                         restart=cfg.restart)
        return InterfaceField(ctx.layout, width=width), U, stats

    b = compute_b(ctx, sources)
    op = LinearOperator(
        ctx.layout.total,
        lambda X: MultiVector(apply_IminusT(
            ctx, InterfaceField(ctx.layout, X.data)).data),
        label="local_solve")
    step = max(1, cfg.batch)
    G = np.empty((ctx.layout.total, width), dtype=np.complex128)
    stats: RunStats | None = None
    for lo in range(0, width, step):
        hi = min(lo + step, width)
        before = ctx.counters.snapshot()
        Gb, st = pblock_gmres(op, MultiVector(b.data[:, lo:hi]), cfg,
                              counters=ctx.counters, monitor=monitor)
        after = ctx.counters.snapshot()
        st.times = {c: after[c] - before[c] for c in after}
        G[:, lo:hi] = Gb.data
        stats = st if stats is None else stats.merge(st)
    g = InterfaceField(ctx.layout, G)
    U = reconstruct(ctx, g, sources)
    return g, U, stats


def write_traces_csv(g: InterfaceField, path) -> None:
    """Debug export: one line per trace DOF per ordered-pair segment."""
    with open(path, "w") as fh:
        fh.write("pair_i;pair_j;offset;re;im\n")
        for pair in g.layout.pairs:
            seg = g.segment(pair)
            for t in range(seg.shape[0]):
                v = complex(seg[t, 0])
                fh.write(f"{pair[0]};{pair[1]};{t};{v.real!r};{v.imag!r}\n")
