"""Overlapping restricted additive Schwarz preconditioner.

Each subdomain restricts the residual to its extended DOF set, solves its
factorized local matrix (with transmission conditions on the artificial
rim), and writes back only the DOFs it owns: ownership is Boolean and the
extensions sum to the exact identity. GMRES runs right-preconditioned on
the global system, so the residual reported is the unpreconditioned one.
"""

from dataclasses import dataclass, field

import numpy as np

from .assembly import AssembledProblem, DofMap, TransmissionParams, assemble_local_oras
from .instrument import CostCounters
from .krylov import KrylovConfig, LinearOperator, RunStats, pblock_gmres
from .linalg import (CsrMatrix, Factorization, MultiVector,
                     SingularMatrixError, factorize, solve_batch, spmm)
from .mesh import Mesh, OverlapPartition


def dof_owners(partition, dofmap: DofMap) -> np.ndarray:
    """Owning subdomain per global DOF: the lowest subdomain index among the
    elements containing it."""
    owner = np.full(dofmap.n_dofs, np.iinfo(np.int64).max, dtype=np.int64)
    labels = partition.subdomain_of
    for t in range(dofmap.mesh.num_triangles):
        dofs = dofmap.element_dofs[t]
        np.minimum.at(owner, dofs, labels[t])
    return owner


@dataclass(eq=False)
class OrasContext:
    """Per-subdomain restrictions, Boolean ownership and factorized local
    matrices, plus the global matrix the preconditioner serves."""

    A: CsrMatrix
    restrictions: list[np.ndarray]
    owned_masks: list[np.ndarray]
    factors: list[Factorization]
    owner_of_dof: np.ndarray
    counters: CostCounters = field(default_factory=CostCounters)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def n_subdomains(self) -> int:
        return len(self.restrictions)

    def partition_of_unity_counts(self) -> np.ndarray:
        """Integer diagonal of sum(R^T D R); all ones when consistent."""
        counts = np.zeros(self.n, dtype=np.int64)
        for R, D in zip(self.restrictions, self.owned_masks):
            counts[R[D]] += 1
        return counts


def build_oras(mesh: Mesh, overlap: OverlapPartition, kfield,
               params: TransmissionParams, dofmap: DofMap,
               problem: AssembledProblem) -> OrasContext:
    """Factorize every extended-subdomain matrix and verify the partition
    of unity at build time."""
    base = overlap.base
    owner = base.owner_of_dof
    if owner is None:
        owner = dof_owners(base, dofmap)
        base.owner_of_dof = owner
    restrictions, masks, factors = [], [], []
    counters = CostCounters()
    for i in range(base.n_subdomains):
        local_dofs, A_i = assemble_local_oras(mesh, dofmap, overlap, i,
                                              kfield, params)
        try:
            F = factorize(A_i, counters=counters)
        except SingularMatrixError as err:
            raise SingularMatrixError(err.step, err.column,
                                      where=f"subdomain {i}") from err
        restrictions.append(local_dofs)
        masks.append(owner[local_dofs] == i)
        factors.append(F)
    ctx = OrasContext(problem.A, restrictions, masks, factors, owner, counters)
    counts = ctx.partition_of_unity_counts()
    if not np.all(counts == 1):
        bad = np.flatnonzero(counts != 1)[:5]
        raise AssertionError(f"partition of unity broken at DOFs {bad.tolist()}")
    return ctx


def apply_oras(ctx: OrasContext, V: MultiVector) -> MultiVector:
    """W = sum_i R_i^T D_i A_i^{-1} R_i V with batched local solves; the
    owned sets are disjoint so the summation order cannot matter."""
    if V.n != ctx.n:
        raise ValueError(f"dimension mismatch: {ctx.n} vs {V.n}")
    W = np.zeros_like(V.data)
    for R, D, F in zip(ctx.restrictions, ctx.owned_masks, ctx.factors):
        Y = solve_batch(F, MultiVector(V.data[R]), counters=ctx.counters)
        W[R[D]] += Y.data[D]
    return MultiVector(W)


def solve_oras(ctx: OrasContext, sources: MultiVector, cfg: KrylovConfig,
               monitor=None):
    """Solve A U = sources by GMRES right-preconditioned with the Schwarz
    sum, batching the right-hand sides `cfg.batch` at a time."""
    op = LinearOperator(ctx.n, lambda X: spmm(ctx.A, X, counters=ctx.counters),
                        label="spmm")
    pc = LinearOperator(ctx.n, lambda X: apply_oras(ctx, X),
                        label="local_solve")
    width = sources.width
    step = max(1, cfg.batch)
    X = np.empty((ctx.n, width), dtype=np.complex128)
    stats: RunStats | None = None
    for lo in range(0, width, step):
        hi = min(lo + step, width)
        before = ctx.counters.snapshot()
        Xb, st = pblock_gmres(op, MultiVector(sources.data[:, lo:hi]), cfg,
                              precond=pc, counters=ctx.counters,
                              monitor=monitor)
        after = ctx.counters.snapshot()
        st.times = {c: after[c] - before[c] for c in after}
        X[:, lo:hi] = Xb.data
        stats = st if stats is None else stats.merge(st)
    return MultiVector(X), stats
