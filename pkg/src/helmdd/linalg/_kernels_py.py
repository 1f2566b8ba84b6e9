"""Pure-Python reference kernels.

Same algorithms and tie-breaking rules as the compiled extension, so both
backends produce identical orderings, factors and products; this module is
the import-time fallback when the extension is unavailable and the baseline
for the kernel benchmark.
"""

import heapq

import numpy as np

from .errors import SingularMatrixError

COMPILED = False


def csr_spmm(indptr, indices, data, X):
    """CSR matrix times dense batch; returns a new (n_rows, width) array."""
    n_rows = len(indptr) - 1
    out = np.zeros((n_rows, X.shape[1]), dtype=np.complex128)
    if len(data):
        rows = np.repeat(np.arange(n_rows), np.diff(indptr))
        np.add.at(out, rows, data[:, None] * X[indices])
    return out


def min_degree_order(n, adj_indptr, adj_indices):
    """Minimum-degree ordering of a symmetric adjacency pattern.

    Eliminates the lowest-index vertex among those of minimal current degree;
    elimination turns the neighborhood into a clique.
    """
    adj = [set() for _ in range(n)]
    for i in range(n):
        for t in range(adj_indptr[i], adj_indptr[i + 1]):
            j = adj_indices[t]
            if j != i:
                adj[i].add(int(j))
    heap = [(len(adj[i]), i) for i in range(n)]
    heapq.heapify(heap)
    eliminated = np.zeros(n, dtype=bool)
    perm = np.empty(n, dtype=np.int64)
    count = 0
    while heap:
        d, v = heapq.heappop(heap)
        if eliminated[v] or d != len(adj[v]):
            continue
        eliminated[v] = True
        perm[count] = v
        count += 1
        nbrs = sorted(adj[v])
        for u in nbrs:
            adj[u].discard(v)
        for ai, a in enumerate(nbrs):
            adj_a = adj[a]
            for b in nbrs[ai + 1:]:
                if b not in adj_a:
                    adj_a.add(b)
                    adj[b].add(a)
        for u in nbrs:
            heapq.heappush(heap, (len(adj[u]), u))
        adj[v] = set()
    return perm


def lu_factor(n, Ap, Ai, Ax, q, pivot_tol=1.0):
    """Left-looking sparse LU with partial pivoting, columns taken in the
    order `q`. Returns CSC factors (L unit-diagonal first per column, U with
    the pivot last per column, rows in pivotal numbering) plus the row order.
    """
    Lp = np.zeros(n + 1, dtype=np.int64)
    Up = np.zeros(n + 1, dtype=np.int64)
    Li, Lx = [], []
    Ui, Ux = [], []
    pinv = np.full(n, -1, dtype=np.int64)
    mark = np.full(n, -1, dtype=np.int64)
    x = np.zeros(n, dtype=np.complex128)
    xi = np.empty(n, dtype=np.int64)
    snode = np.empty(n, dtype=np.int64)
    spos = np.empty(n, dtype=np.int64)

    for k in range(n):
        col = q[k]
        # symbolic: topological pattern of L \ A(:, col) by DFS through
        # already-pivotal columns of L
        top = n
        for t in range(Ap[col], Ap[col + 1]):
            i = Ai[t]
            if mark[i] == k:
                continue
            depth = 0
            snode[0] = i
            jp = pinv[i]
            spos[0] = Lp[jp] + 1 if jp >= 0 else 0
            mark[i] = k
            while depth >= 0:
                node = snode[depth]
                jp = pinv[node]
                end = Lp[jp + 1] if jp >= 0 else 0
                pos = spos[depth]
                descended = False
                while pos < end:
                    child = Li[pos]
                    pos += 1
                    if mark[child] != k:
                        mark[child] = k
                        spos[depth] = pos
                        depth += 1
                        snode[depth] = child
                        cjp = pinv[child]
                        spos[depth] = Lp[cjp] + 1 if cjp >= 0 else 0
                        descended = True
                        break
                if descended:
                    continue
                top -= 1
                xi[top] = node
                depth -= 1
        # numeric: scatter the column, eliminate in topological order
        # (x is all-zero outside the pattern: every step clears its entries)
        for t in range(Ap[col], Ap[col + 1]):
            x[Ai[t]] = Ax[t]
        for p in range(top, n):
            i = xi[p]
            jp = pinv[i]
            if jp < 0:
                continue
            xj = x[i]
            for t in range(Lp[jp] + 1, Lp[jp + 1]):
                x[Li[t]] -= Lx[t] * xj
        # pivot: largest magnitude among non-pivotal rows, lowest index on
        # ties, diagonal preferred when within pivot_tol of the maximum
        a = -1.0
        ipiv = -1
        for p in range(top, n):
            i = xi[p]
            if pinv[i] < 0:
                t_abs = abs(x[i])
                if t_abs > a or (t_abs == a and i < ipiv):
                    a = t_abs
                    ipiv = i
            else:
                Ui.append(pinv[i])
                Ux.append(x[i])
        if ipiv == -1 or a <= 0.0:
            raise SingularMatrixError(k, col)
        if pinv[col] < 0 and abs(x[col]) >= a * pivot_tol:
            ipiv = col
        pivot = x[ipiv]
        Ui.append(k)
        Ux.append(pivot)
        Up[k + 1] = len(Ui)
        pinv[ipiv] = k
        Li.append(ipiv)
        Lx.append(1.0 + 0.0j)
        for p in range(top, n):
            i = xi[p]
            if pinv[i] < 0:
                Li.append(i)
                Lx.append(x[i] / pivot)
            x[i] = 0.0
        Lp[k + 1] = len(Li)

    Li = np.array(Li, dtype=np.int64)
    row_order = np.empty(n, dtype=np.int64)
    row_order[pinv] = np.arange(n)
    Li = pinv[Li]
    return (Lp, Li, np.array(Lx, dtype=np.complex128),
            Up, np.array(Ui, dtype=np.int64), np.array(Ux, dtype=np.complex128),
            row_order)


def lu_solve(Lp, Li, Lx, Up, Ui, Ux, row_order, col_perm, B):
    """Solve LU X = P B with the factors of lu_factor; columns batched."""
    n = len(Lp) - 1
    Y = np.array(B[row_order], dtype=np.complex128)
    for j in range(n):
        yj = Y[j]
        for t in range(Lp[j] + 1, Lp[j + 1]):
            Y[Li[t]] -= Lx[t] * yj
    for j in range(n - 1, -1, -1):
        t_end = Up[j + 1]
        Y[j] = yj = Y[j] / Ux[t_end - 1]
        for t in range(Up[j], t_end - 1):
            Y[Ui[t]] -= Ux[t] * yj
    X = np.empty_like(Y)
    X[col_perm] = Y
    return X
