"""Restarted pseudo-block GMRES and the Richardson fixed-point iteration.

Every right-hand side keeps its own Arnoldi recurrence (Hessenberg column,
Givens rotations, residual estimate) while operator and preconditioner
applications are batched across the columns that have not converged yet.
Orthogonalization is modified Gram-Schmidt with one conditional
reorthogonalization pass; inner products are conjugate-linear in the first
argument. Right preconditioning keeps the recurrence residual equal to the
unpreconditioned one, and residuals are reported relative to the
columnwise norm of B.
"""

from dataclasses import dataclass, field

import numpy as np

from .instrument import CostCounters, timed
from .linalg import MultiVector

BYTES_PER_SCALAR = 16  # double-precision complex


class LinearOperator:
    """Dimension-preserving linear map on column batches.

    `apply` maps MultiVector -> MultiVector; `label` names the dominant cost
    category of one application (spmm, local_solve or exchange).
    """

    def __init__(self, n: int, apply, label: str = "spmm"):
        self.n = int(n)
        self._apply = apply
        self.label = label

    def __call__(self, X: MultiVector) -> MultiVector:
        if X.n != self.n:
            raise ValueError(f"operator dimension {self.n}, got {X.n}")
        Y = self._apply(X)
        if Y.n != self.n:
            raise ValueError("operator did not preserve dimension")
        return Y


@dataclass
class KrylovConfig:
    tol: float = 1e-4
    restart: int = 50
    max_iters: int = 1000
    batch: int = 16

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")
        if self.restart < 1:
            raise ValueError("restart must be at least 1")


@dataclass
class RunStats:
    """Per-RHS convergence data and cost attribution for one solve."""

    histories: list  # per RHS: relative residual per iteration (incl. 0)
    iterations: list
    statuses: list  # "converged" | "max_iters" | "stagnated"
    times: dict = field(default_factory=dict)
    krylov_bytes: int = 0
    n_space: int = 0
    width: int = 0
    restart: int = 0
    bases: list | None = None

    @property
    def max_iterations(self) -> int:
        return max(self.iterations, default=0)

    def merge(self, other: "RunStats") -> "RunStats":
        """Concatenate column data of two runs over the same operator."""
        times = {k: self.times.get(k, 0.0) + other.times.get(k, 0.0)
                 for k in set(self.times) | set(other.times)}
        return RunStats(self.histories + other.histories,
                        self.iterations + other.iterations,
                        self.statuses + other.statuses, times,
                        max(self.krylov_bytes, other.krylov_bytes),
                        self.n_space, self.width + other.width, self.restart)


def write_history_csv(stats: RunStats, path) -> None:
    """Residual histories, one row per iteration: `iteration;res_rhs0;...`
    (semicolon-separated like the convergence data files this mirrors)."""
    depth = max((len(h) for h in stats.histories), default=0)
    with open(path, "w") as fh:
        fh.write(";".join(["iteration"] +
                          [f"rhs{j}" for j in range(len(stats.histories))]) + "\n")
        for it in range(depth):
            row = [str(it)]
            for h in stats.histories:
                row.append(repr(float(h[it])) if it < len(h) else "")
            fh.write(";".join(row) + "\n")


def _solve_upper(H, g, k):
    """Back-substitution on the k x k Givens-reduced Hessenberg."""
    y = np.zeros(k, dtype=np.complex128)
    for i in range(k - 1, -1, -1):
        y[i] = (g[i] - H[i, i + 1:k] @ y[i + 1:k]) / H[i, i]
    return y


class _ColumnState:
    """Arnoldi recurrence of a single right-hand side within one cycle."""

    def __init__(self, col, n, m, norm_b):
        self.col = col
        self.n = n
        self.m = m
        self.norm_b = norm_b
        self.V = np.zeros((m + 1, n), dtype=np.complex128)
        self.H = np.zeros((m + 1, m), dtype=np.complex128)
        self.cs = np.zeros(m, dtype=np.complex128)
        self.sn = np.zeros(m, dtype=np.complex128)
        self.g = np.zeros(m + 1, dtype=np.complex128)
        self.k = 0
        self.breakdown = False

    def start(self, r0, beta):
        self.k = 0
        self.breakdown = False
        self.g[:] = 0.0
        self.g[0] = beta
        self.V[0] = r0 / beta

    def orthogonalize(self, w):
        """One MGS pass (re-run once if the norm drops by more than 1/sqrt2);
        returns the new Hessenberg column filled into H[:, k]."""
        k = self.k
        norm_in = np.linalg.norm(w)
        h = np.zeros(k + 2, dtype=np.complex128)
        for i in range(k + 1):
            hi = np.vdot(self.V[i], w)
            w -= hi * self.V[i]
            h[i] = hi
        norm_out = np.linalg.norm(w)
        if norm_out < norm_in / np.sqrt(2.0):
            for i in range(k + 1):
                hi = np.vdot(self.V[i], w)
                w -= hi * self.V[i]
                h[i] += hi
            norm_out = np.linalg.norm(w)
        h[k + 1] = norm_out
        self.H[:k + 2, k] = h
        if norm_out > 0:
            self.V[k + 1] = w / norm_out
        else:
            self.breakdown = True
        return h

    def apply_givens(self):
        """Rotate the new column and return the residual estimate."""
        k = self.k
        H, cs, sn, g = self.H, self.cs, self.sn, self.g
        for i in range(k):
            t = cs[i] * H[i, k] + sn[i] * H[i + 1, k]
            H[i + 1, k] = -np.conj(sn[i]) * H[i, k] + np.conj(cs[i]) * H[i + 1, k]
            H[i, k] = t
        denom = np.sqrt(abs(H[k, k]) ** 2 + abs(H[k + 1, k]) ** 2)
        if denom == 0.0:
            cs[k], sn[k] = 1.0, 0.0
        else:
            cs[k] = np.conj(H[k, k]) / denom
            sn[k] = np.conj(H[k + 1, k]) / denom
        H[k, k] = cs[k] * H[k, k] + sn[k] * H[k + 1, k]
        H[k + 1, k] = 0.0
        g[k + 1] = -np.conj(sn[k]) * g[k]
        g[k] = cs[k] * g[k]
        self.k += 1
        return abs(g[self.k])

    def update_direction(self):
        """Krylov-space update z = V_k y minimizing the residual so far."""
        y = _solve_upper(self.H, self.g, self.k)
        return y @ self.V[:self.k]


def pblock_gmres(op: LinearOperator, B: MultiVector, cfg: KrylovConfig,
                 precond: LinearOperator | None = None,
                 counters: CostCounters | None = None,
                 monitor=None, keep_basis: bool = False):
    """Pseudo-block restarted GMRES; right-preconditioned when `precond` is
    given (X = precond(Y) is returned and residuals stay unpreconditioned).

    Converged columns are deflated: they stop contributing to the batched
    operator applications. `monitor(col, iteration, x_estimate)` is invoked
    per iteration when given (estimates cost one extra preconditioner
    application each). Zero columns converge at iteration 0.
    """
    counters = counters or CostCounters()
    n, width = B.n, B.width
    m = cfg.restart
    norm_b = np.linalg.norm(B.data, axis=0)
    X = np.zeros((n, width), dtype=np.complex128)
    histories = [[] for _ in range(width)]
    statuses = ["running"] * width
    iterations = [0] * width
    bases = [None] * width if keep_basis else None

    active = []
    for j in range(width):
        if norm_b[j] == 0.0:
            histories[j] = [0.0]
            statuses[j] = "converged"
        else:
            histories[j] = [1.0]
            active.append(j)

    states = {j: _ColumnState(j, n, m, norm_b[j]) for j in active}

    def apply_full(Vin: MultiVector) -> MultiVector:
        return op(precond(Vin)) if precond is not None else op(Vin)

    while active:
        R = B.data[:, active] - apply_full(MultiVector(X[:, active])).data
        cycle_cols = []
        for idx, j in enumerate(active):
            beta = np.linalg.norm(R[:, idx])
            rel = beta / norm_b[j]
            if rel <= cfg.tol:
                statuses[j] = "converged"
                continue
            states[j].start(R[:, idx], beta)
            cycle_cols.append(j)
        active = [j for j in active if statuses[j] == "running"]
        if not cycle_cols:
            break
        cycle_start_rel = {j: histories[j][-1] for j in cycle_cols}
        running = list(cycle_cols)
        finished_dirs = {}
        for step in range(m):
            if not running:
                break
            Vin = MultiVector(np.column_stack([states[j].V[states[j].k]
                                               for j in running]))
            W = apply_full(Vin)
            still = []
            for idx, j in enumerate(running):
                st = states[j]
                with timed(counters, "orthogonalization"):
                    st.orthogonalize(W.data[:, idx].copy())
                rel = st.apply_givens() / st.norm_b
                histories[j].append(rel)
                iterations[j] += 1
                if monitor is not None:
                    z = st.update_direction()
                    zc = precond(MultiVector(z)).data[:, 0] if precond else z
                    monitor(j, iterations[j], X[:, j] + zc)
                done = rel <= cfg.tol or st.breakdown or iterations[j] >= cfg.max_iters
                if done or step == m - 1:
                    finished_dirs[j] = st.update_direction()
                    if rel <= cfg.tol:
                        statuses[j] = "converged"
                    elif iterations[j] >= cfg.max_iters:
                        statuses[j] = "max_iters"
                    if keep_basis:
                        bases[j] = st.V[:st.k + 1].copy()
                else:
                    still.append(j)
            running = still
        # one batched preconditioner application finalizes the cycle updates
        cols = sorted(finished_dirs)
        Z = MultiVector(np.column_stack([finished_dirs[j] for j in cols]))
        if precond is not None:
            Z = precond(Z)
        for idx, j in enumerate(cols):
            X[:, j] += Z.data[:, idx]
        for j in list(active):
            if statuses[j] == "running":
                if histories[j][-1] >= cycle_start_rel[j] * (1.0 - 1e-12):
                    statuses[j] = "stagnated"
        active = [j for j in active if statuses[j] == "running"]

    stats = RunStats([np.array(h) for h in histories], iterations, statuses,
                     counters.snapshot(),
                     krylov_bytes=n * width * (m + 1) * BYTES_PER_SCALAR,
                     n_space=n, width=width, restart=m, bases=bases)
    return MultiVector(X), stats


def richardson(op_fixed_point: LinearOperator, b: MultiVector, iters: int,
               divergence_factor: float = 1e6):
    """Iterate g <- T g + b from zero; returns the list [g0, g1, ..., g_iters].

    Raises RuntimeError when the iterate norm exceeds `divergence_factor`
    times the norm of b.
    """
    if iters < 0:
        raise ValueError("iteration count must be nonnegative")
    g = MultiVector(np.zeros_like(b.data))
    history = [g.copy()]
    scale = max(np.linalg.norm(b.data), 1e-300)
    for _ in range(iters):
        g = MultiVector(op_fixed_point(g).data + b.data)
        if np.linalg.norm(g.data) > divergence_factor * scale:
            raise RuntimeError(
                f"fixed-point iteration diverged beyond {divergence_factor:g}x")
        history.append(g.copy())
    return history
