"""Complex sparse/dense building blocks: CSR storage, batched products,
sparse LU with minimum-degree ordering, batched solves and mass norms.

All heavy loops run in the selected kernel backend (see backend.py); this
layer owns validation, conversions, memory accounting and cost attribution.
"""

import numpy as np

from ..instrument import CostCounters, timed
from .backend import BACKEND, kernels
from .errors import SingularMatrixError

__all__ = [
    "BACKEND", "CsrMatrix", "MultiVector", "Factorization",
    "SingularMatrixError", "spmm", "factorize", "solve_batch",
    "norms", "relative_error", "default_counters",
    "write_triplets", "read_triplets",
]

# module-level sink used when no explicit counters are passed
default_counters = CostCounters()


class MultiVector:
    """Dense batch of complex columns (length n, width b)."""

    __slots__ = ("data",)

    def __init__(self, data):
        arr = np.ascontiguousarray(data, dtype=np.complex128)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2:
            raise ValueError("MultiVector needs a 1D or 2D array")
        self.data = arr

    @classmethod
    def zeros(cls, n: int, width: int) -> "MultiVector":
        return cls(np.zeros((n, width), dtype=np.complex128))

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def column(self, j: int) -> np.ndarray:
        return self.data[:, j]

    def copy(self) -> "MultiVector":
        return MultiVector(self.data.copy())


class CsrMatrix:
    """Compressed sparse rows with complex values.

    Column indices are sorted within each row and duplicates are summed at
    construction.
    """

    def __init__(self, shape, indptr, indices, data, symmetric=False):
        self.shape = (int(shape[0]), int(shape[1]))
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int64)
        self.data = np.ascontiguousarray(data, dtype=np.complex128)
        self.symmetric = bool(symmetric)

    @classmethod
    def from_coo(cls, shape, rows, cols, vals, symmetric=False) -> "CsrMatrix":
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        vals = np.asarray(vals, dtype=np.complex128).ravel()
        if len(rows):
            order = np.lexsort((cols, rows))
            rows, cols, vals = rows[order], cols[order], vals[order]
            keep = np.ones(len(rows), dtype=bool)
            keep[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
            starts = np.flatnonzero(keep)
            vals = np.add.reduceat(vals, starts)
            rows, cols = rows[starts], cols[starts]
        indptr = np.zeros(shape[0] + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        np.cumsum(indptr, out=indptr)
        return cls(shape, indptr, cols, vals, symmetric=symmetric)

    @classmethod
    def identity(cls, n: int) -> "CsrMatrix":
        return cls((n, n), np.arange(n + 1), np.arange(n),
                   np.ones(n, dtype=np.complex128), symmetric=True)

    @property
    def nnz(self) -> int:
        return len(self.data)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=np.complex128)
        for i in range(self.shape[0]):
            sl = slice(self.indptr[i], self.indptr[i + 1])
            out[i, self.indices[sl]] = self.data[sl]
        return out

    def diagonal(self) -> np.ndarray:
        d = np.zeros(min(self.shape), dtype=np.complex128)
        for i in range(len(d)):
            sl = slice(self.indptr[i], self.indptr[i + 1])
            hit = np.flatnonzero(self.indices[sl] == i)
            if len(hit):
                d[i] = self.data[sl][hit[0]]
        return d

    def to_csc_arrays(self):
        """Column-compressed copy (indptr, row_indices, data)."""
        n_rows, n_cols = self.shape
        rows = np.repeat(np.arange(n_rows, dtype=np.int64), np.diff(self.indptr))
        order = np.lexsort((rows, self.indices))
        cols = self.indices[order]
        indptr = np.zeros(n_cols + 1, dtype=np.int64)
        np.add.at(indptr, cols + 1, 1)
        np.cumsum(indptr, out=indptr)
        return indptr, rows[order], self.data[order]

    def validate(self) -> None:
        if self.indptr[0] != 0 or self.indptr[-1] != self.nnz:
            raise ValueError("inconsistent row offsets")
        if np.any(np.diff(self.indptr) < 0):
            raise ValueError("row offsets not monotone")
        for i in range(self.shape[0]):
            cols = self.indices[self.indptr[i]:self.indptr[i + 1]]
            if np.any(np.diff(cols) <= 0):
                raise ValueError(f"row {i} has unsorted or duplicate columns")


def _as_batch(X) -> np.ndarray:
    if isinstance(X, MultiVector):
        return X.data
    return MultiVector(X).data


def spmm(A: CsrMatrix, X, counters: CostCounters | None = None) -> MultiVector:
    """Sparse matrix times dense batch; elapsed time goes to the spmm
    counter (the module default when none is passed)."""
    Xd = _as_batch(X)
    if Xd.shape[0] != A.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape} @ {Xd.shape}")
    with timed(counters or default_counters, "spmm"):
        out = kernels.csr_spmm(A.indptr, A.indices, A.data, Xd)
    return MultiVector(out)


class Factorization:
    """Sparse LU factors P A Q = L U with memory accounting.

    factor_nnz counts the stored scalars: strictly-lower L entries plus all
    of U (the unit diagonal of L carries no data, so a diagonal matrix
    reports n). peak_bytes models 16 bytes per stored factor scalar plus
    the integer/complex workspace of the factorization sweep.
    """

    def __init__(self, n, lu_arrays, col_perm):
        (self.Lp, self.Li, self.Lx,
         self.Up, self.Ui, self.Ux, self.row_order) = lu_arrays
        self.n = n
        self.col_perm = col_perm
        self.factor_nnz = int(len(self.Lx) - n + len(self.Ux))
        self.factor_bytes = 16 * self.factor_nnz
        self.workspace_bytes = 56 * n
        self.peak_bytes = self.factor_bytes + self.workspace_bytes


def factorize(A: CsrMatrix, counters: CostCounters | None = None,
              pivot_threshold: float = 0.1) -> Factorization:
    """Sparse LU with threshold partial pivoting over a minimum-degree
    column order.

    The diagonal entry is kept as pivot while it is within
    `pivot_threshold` of the column maximum, which preserves the
    minimum-degree fill on the structurally symmetric matrices this package
    assembles; 1.0 recovers strict partial pivoting. Ordering ties break
    toward the lowest index, so factor fill is reproducible. Raises
    SingularMatrixError naming the failing pivot.
    """
    n_rows, n_cols = A.shape
    if n_rows != n_cols:
        raise ValueError(f"matrix is not square: {A.shape}")
    n = n_rows
    if n == 0:
        return Factorization(0, tuple(np.empty(0, dtype=np.int64) for _ in range(7)),
                             np.empty(0, dtype=np.int64))
    # order the symmetrized pattern, then factor columns in that order
    rows = np.repeat(np.arange(n, dtype=np.int64), np.diff(A.indptr))
    sym_r = np.concatenate([rows, A.indices])
    sym_c = np.concatenate([A.indices, rows])
    pattern = CsrMatrix.from_coo((n, n), sym_r, sym_c,
                                 np.ones(len(sym_r), dtype=np.complex128))
    q = kernels.min_degree_order(n, pattern.indptr, pattern.indices)
    Cp, Ci, Cx = A.to_csc_arrays()
    lu = kernels.lu_factor(n, Cp, Ci, Cx, q, pivot_threshold)
    return Factorization(n, lu, q)


def solve_batch(F: Factorization, B, counters: CostCounters | None = None) -> MultiVector:
    """Solve against the factors for every column of B in one pass; elapsed
    time goes to the local_solve counter."""
    Bd = _as_batch(B)
    if Bd.shape[0] != F.n:
        raise ValueError(f"dimension mismatch: n={F.n}, B has {Bd.shape[0]} rows")
    if Bd.shape[1] == 0:
        return MultiVector(np.zeros((F.n, 0), dtype=np.complex128))
    with timed(counters or default_counters, "local_solve"):
        X = kernels.lu_solve(F.Lp, F.Li, F.Lx, F.Up, F.Ui, F.Ux,
                             F.row_order, F.col_perm, Bd)
    return MultiVector(X)


def norms(X, M: CsrMatrix | None = None) -> np.ndarray:
    """Per-column Euclidean norms, or mass-weighted norms sqrt(x* M x)."""
    Xd = _as_batch(X)
    if not np.all(np.isfinite(Xd)):
        bad = np.flatnonzero(~np.all(np.isfinite(Xd), axis=0))
        raise ValueError(f"nonfinite entries in columns {bad.tolist()}")
    if M is None:
        return np.linalg.norm(Xd, axis=0)
    MX = spmm(M, Xd, counters=CostCounters())
    vals = np.einsum("ij,ij->j", np.conj(Xd), MX.data)
    return np.sqrt(np.maximum(vals.real, 0.0))


def relative_error(X, X_ref, M: CsrMatrix | None = None) -> np.ndarray:
    """Columnwise ||x - x_ref|| / ||x_ref|| in the chosen norm."""
    Xd, Rd = _as_batch(X), _as_batch(X_ref)
    return norms(Xd - Rd, M) / norms(Rd, M)


def write_triplets(A: CsrMatrix, path) -> None:
    """Coordinate-format plain text export: `row col re im` per line."""
    with open(path, "w") as fh:
        fh.write(f"{A.shape[0]} {A.shape[1]} {A.nnz}\n")
        for i in range(A.shape[0]):
            for t in range(A.indptr[i], A.indptr[i + 1]):
                v = complex(A.data[t])
                fh.write(f"{i} {A.indices[t]} {v.real!r} {v.imag!r}\n")


def read_triplets(path) -> CsrMatrix:
    with open(path) as fh:
        n_rows, n_cols, nnz = (int(s) for s in fh.readline().split())
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz, dtype=np.complex128)
        for t in range(nnz):
            r, c, re, im = fh.readline().split()
            rows[t], cols[t] = int(r), int(c)
            vals[t] = complex(float(re), float(im))
    return CsrMatrix.from_coo((n_rows, n_cols), rows, cols, vals)
