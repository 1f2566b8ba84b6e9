# cython: boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Compiled hot kernels: CSR batched products, left-looking sparse LU with
partial pivoting, batched triangular solves and minimum-degree ordering.

Algorithms and tie-breaking match helmdd.linalg._kernels_py exactly; the
pure module is the fallback and documents the semantics.
"""

import numpy as np

cimport numpy as cnp
from libc.stdlib cimport free, malloc
from libcpp.pair cimport pair
from libcpp.queue cimport priority_queue
from libcpp.set cimport set as cset
from libcpp.vector cimport vector

from .errors import SingularMatrixError

COMPILED = True

ctypedef cnp.int64_t i64
ctypedef cnp.complex128_t c128


def csr_spmm(i64[::1] indptr, i64[::1] indices, c128[::1] data,
             c128[:, ::1] X):
    cdef Py_ssize_t n_rows = indptr.shape[0] - 1
    cdef Py_ssize_t width = X.shape[1]
    out_arr = np.zeros((n_rows, width), dtype=np.complex128)
    cdef c128[:, ::1] out = out_arr
    cdef Py_ssize_t i, t, c, col
    cdef c128 v
    for i in range(n_rows):
        for t in range(indptr[i], indptr[i + 1]):
            col = indices[t]
            v = data[t]
            for c in range(width):
                out[i, c] = out[i, c] + v * X[col, c]
    return out_arr


def min_degree_order(Py_ssize_t n, i64[::1] adj_indptr, i64[::1] adj_indices):
    cdef vector[cset[int]] adj = vector[cset[int]](n)
    cdef Py_ssize_t i, t
    cdef int j, v, u, a, b, d
    for i in range(n):
        for t in range(adj_indptr[i], adj_indptr[i + 1]):
            j = <int>adj_indices[t]
            if j != <int>i:
                adj[i].insert(j)
    # max-heap over (-degree, -index) pops the min-degree, lowest-index node
    cdef priority_queue[pair[int, int]] heap
    for i in range(n):
        heap.push(pair[int, int](-<int>adj[i].size(), -<int>i))
    eliminated_arr = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] eliminated = eliminated_arr
    perm_arr = np.empty(n, dtype=np.int64)
    cdef i64[::1] perm = perm_arr
    cdef Py_ssize_t count = 0
    cdef pair[int, int] top
    cdef vector[int] nbrs
    cdef size_t ai, bi
    while not heap.empty():
        top = heap.top()
        heap.pop()
        d = -top.first
        v = -top.second
        if eliminated[v] or d != <int>adj[v].size():
            continue
        eliminated[v] = 1
        perm[count] = v
        count += 1
        nbrs.clear()
        for u in adj[v]:
            nbrs.push_back(u)
        for ai in range(nbrs.size()):
            adj[nbrs[ai]].erase(v)
        for ai in range(nbrs.size()):
            a = nbrs[ai]
            for bi in range(ai + 1, nbrs.size()):
                b = nbrs[bi]
                if adj[a].insert(b).second:
                    adj[b].insert(a)
        for ai in range(nbrs.size()):
            u = nbrs[ai]
            heap.push(pair[int, int](-<int>adj[u].size(), -u))
        adj[v].clear()
    return perm_arr


def lu_factor(Py_ssize_t n, i64[::1] Ap, i64[::1] Ai, c128[::1] Ax,
              i64[::1] q, double pivot_tol=1.0):
    cdef cnp.ndarray[i64, ndim=1] Lp_arr = np.zeros(n + 1, dtype=np.int64)
    cdef cnp.ndarray[i64, ndim=1] Up_arr = np.zeros(n + 1, dtype=np.int64)
    cdef i64[::1] Lp = Lp_arr
    cdef i64[::1] Up = Up_arr
    cdef vector[i64] Li
    cdef vector[c128] Lx
    cdef vector[i64] Ui
    cdef vector[c128] Ux
    cdef cnp.ndarray[i64, ndim=1] pinv_arr = np.full(n, -1, dtype=np.int64)
    cdef i64[::1] pinv = pinv_arr
    cdef cnp.ndarray[i64, ndim=1] mark_arr = np.full(n, -1, dtype=np.int64)
    cdef i64[::1] mark = mark_arr
    cdef cnp.ndarray[c128, ndim=1] x_arr = np.zeros(n, dtype=np.complex128)
    cdef c128[::1] x = x_arr
    cdef cnp.ndarray[i64, ndim=1] xi_arr = np.empty(n, dtype=np.int64)
    cdef i64[::1] xi = xi_arr
    cdef cnp.ndarray[i64, ndim=1] snode_arr = np.empty(n, dtype=np.int64)
    cdef i64[::1] snode = snode_arr
    cdef cnp.ndarray[i64, ndim=1] spos_arr = np.empty(n, dtype=np.int64)
    cdef i64[::1] spos = spos_arr

    cdef Py_ssize_t k, t, p, top, depth, pos, end
    cdef i64 col, i, jp, node, child, cjp, ipiv
    cdef double a, t_abs
    cdef c128 xj, pivot
    cdef bint descended

    for k in range(n):
        col = q[k]
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
        for t in range(Ap[col], Ap[col + 1]):
            x[Ai[t]] = Ax[t]
        for p in range(top, n):
            i = xi[p]
            jp = pinv[i]
            if jp < 0:
                continue
            xj = x[i]
            for t in range(Lp[jp] + 1, Lp[jp + 1]):
                x[Li[t]] = x[Li[t]] - Lx[t] * xj
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
                Ui.push_back(pinv[i])
                Ux.push_back(x[i])
        if ipiv == -1 or a <= 0.0:
            raise SingularMatrixError(k, col)
        if pinv[col] < 0 and abs(x[col]) >= a * pivot_tol:
            ipiv = col
        pivot = x[ipiv]
        Ui.push_back(k)
        Ux.push_back(pivot)
        Up[k + 1] = Ui.size()
        pinv[ipiv] = k
        Li.push_back(ipiv)
        Lx.push_back(1.0)
        for p in range(top, n):
            i = xi[p]
            if pinv[i] < 0:
                Li.push_back(i)
                Lx.push_back(x[i] / pivot)
            x[i] = 0.0
        Lp[k + 1] = Li.size()

    cdef cnp.ndarray[i64, ndim=1] Li_arr = np.empty(Li.size(), dtype=np.int64)
    cdef cnp.ndarray[c128, ndim=1] Lx_arr = np.empty(Li.size(), dtype=np.complex128)
    cdef cnp.ndarray[i64, ndim=1] Ui_arr = np.empty(Ui.size(), dtype=np.int64)
    cdef cnp.ndarray[c128, ndim=1] Ux_arr = np.empty(Ui.size(), dtype=np.complex128)
    cdef Py_ssize_t m
    for m in range(<Py_ssize_t>Li.size()):
        Li_arr[m] = pinv[Li[m]]
        Lx_arr[m] = Lx[m]
    for m in range(<Py_ssize_t>Ui.size()):
        Ui_arr[m] = Ui[m]
        Ux_arr[m] = Ux[m]
    row_order = np.empty(n, dtype=np.int64)
    row_order[pinv_arr] = np.arange(n, dtype=np.int64)
    return Lp_arr, Li_arr, Lx_arr, Up_arr, Ui_arr, Ux_arr, row_order


def lu_solve(i64[::1] Lp, i64[::1] Li, c128[::1] Lx,
             i64[::1] Up, i64[::1] Ui, c128[::1] Ux,
             i64[::1] row_order, i64[::1] col_perm, B):
    cdef Py_ssize_t n = Lp.shape[0] - 1
    B = np.asarray(B, dtype=np.complex128)
    Y_arr = np.ascontiguousarray(B[np.asarray(row_order)])
    cdef c128[:, ::1] Y = Y_arr
    cdef Py_ssize_t width = Y.shape[1]
    cdef Py_ssize_t j, t, c, row, t_end
    cdef c128 v, d
    for j in range(n):
        for t in range(Lp[j] + 1, Lp[j + 1]):
            row = Li[t]
            v = Lx[t]
            for c in range(width):
                Y[row, c] = Y[row, c] - v * Y[j, c]
    for j in range(n - 1, -1, -1):
        t_end = Up[j + 1]
        d = Ux[t_end - 1]
        for c in range(width):
            Y[j, c] = Y[j, c] / d
        for t in range(Up[j], t_end - 1):
            row = Ui[t]
            v = Ux[t]
            for c in range(width):
                Y[row, c] = Y[row, c] - v * Y[j, c]
    X_arr = np.empty_like(Y_arr)
    X_arr[np.asarray(col_perm)] = Y_arr
    return X_arr
