"""Reference-element data: quadrature rules and Lagrange bases on the
unit triangle {(x, y): x, y >= 0, x + y <= 1} and the unit interval.

Triangle rules are built as collapsed (Duffy) tensor products of
Gauss-Legendre rules, with the map Jacobian absorbed into the weights.
They are exact for all polynomials up to the requested total degree,
which the tests verify against closed-form monomial integrals.
"""

from fractions import Fraction
from functools import lru_cache

import numpy as np


def _exact_inverse(rows: list[list[Fraction]]) -> np.ndarray:
    """Gauss-Jordan inverse in exact rational arithmetic.

    The Lagrange node sets used here are rational, so solving the
    generalized Vandermonde exactly removes the conditioning error that
    would otherwise dominate the quadrature-exactness guarantees.
    """
    n = len(rows)
    aug = [row[:] + [Fraction(int(i == j)) for j in range(n)]
           for i, row in enumerate(rows)]
    for col in range(n):
        piv = next(r for r in range(col, n) if aug[r][col] != 0)
        aug[col], aug[piv] = aug[piv], aug[col]
        inv_p = 1 / aug[col][col]
        aug[col] = [v * inv_p for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                factor = aug[r][col]
                aug[r] = [v - factor * w for v, w in zip(aug[r], aug[col])]
    return np.array([[float(v) for v in row[n:]] for row in aug])


def gauss_legendre_01(n: int) -> tuple[np.ndarray, np.ndarray]:
    """n-point Gauss-Legendre rule on [0, 1]; exact through degree 2n-1."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def triangle_rule(degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature points (nq, 2) and weights (nq,) exact for total `degree`.

    The collapsed square map is x = a (1 - b), y = b with Jacobian (1 - b);
    a Gauss-Legendre rule in each direction with n = ceil((degree + 2) / 2)
    points covers the extra Jacobian degree.
    """
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    n = (degree + 3) // 2
    a, wa = gauss_legendre_01(n)
    b, wb = gauss_legendre_01(n)
    A, B = np.meshgrid(a, b, indexing="ij")
    pts = np.column_stack([(A * (1.0 - B)).ravel(), B.ravel()])
    w = (np.outer(wa, wb) * (1.0 - B)).ravel()
    return pts, w


def edge_rule(n: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """1D rule on [0, 1] for interface/boundary integrals."""
    return gauss_legendre_01(n)


def _rational_nodes_tri(order: int) -> list[tuple[Fraction, Fraction]]:
    verts = [(Fraction(0), Fraction(0)), (Fraction(1), Fraction(0)),
             (Fraction(0), Fraction(1))]
    nodes = list(verts)
    ts = [Fraction(i + 1, order) for i in range(order - 1)]
    for a, b in ((0, 1), (1, 2), (2, 0)):
        for t in ts:
            nodes.append(((1 - t) * verts[a][0] + t * verts[b][0],
                          (1 - t) * verts[a][1] + t * verts[b][1]))
    if order == 3:
        nodes.append((Fraction(1, 3), Fraction(1, 3)))
    return nodes


def lagrange_nodes_tri(order: int) -> np.ndarray:
    """Reference-triangle node coordinates in the local DOF order.

    Order: 3 vertices, then (order-1) equispaced nodes per edge following the
    local edge direction (v0->v1, v1->v2, v2->v0), then interior nodes.
    """
    if order not in (1, 2, 3):
        raise ValueError(f"unsupported polynomial order {order}")
    return np.array([[float(x), float(y)] for x, y in _rational_nodes_tri(order)])


def _monomial_exponents(order: int) -> list[tuple[int, int]]:
    return [(i, j) for d in range(order + 1) for i in range(d + 1) for j in [d - i]]


@lru_cache(maxsize=None)
def _tri_coeffs(order: int) -> np.ndarray:
    """Monomial coefficients of the Lagrange basis: the generalized
    Vandermonde on the node set, inverted exactly."""
    if order not in (1, 2, 3):
        raise ValueError(f"unsupported polynomial order {order}")
    nodes = _rational_nodes_tri(order)
    exps = _monomial_exponents(order)
    V = [[x**i * y**j for (i, j) in exps] for x, y in nodes]
    return _exact_inverse(V)


def tri_basis(order: int, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Basis values N (nq, nb) and gradients dN (nq, nb, 2) at `points`."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    exps = _monomial_exponents(order)
    C = _tri_coeffs(order)
    x, y = pts[:, 0], pts[:, 1]
    P = np.stack([x**i * y**j for (i, j) in exps], axis=1)
    Px = np.stack(
        [i * x ** max(i - 1, 0) * y**j for (i, j) in exps], axis=1
    )
    Py = np.stack(
        [j * x**i * y ** max(j - 1, 0) for (i, j) in exps], axis=1
    )
    N = P @ C
    dN = np.stack([Px @ C, Py @ C], axis=2)
    return N, dN


def lagrange_nodes_edge(order: int) -> np.ndarray:
    """Trace-node parameters on [0, 1]: endpoints then interior, ascending."""
    return np.concatenate([[0.0, 1.0], [(i + 1) / order for i in range(order - 1)]])


@lru_cache(maxsize=None)
def _edge_coeffs(order: int) -> np.ndarray:
    t = ([Fraction(0), Fraction(1)]
         + [Fraction(i + 1, order) for i in range(order - 1)])
    V = [[ti**k for k in range(order + 1)] for ti in t]
    return _exact_inverse(V)


def edge_basis(order: int, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """1D Lagrange values (nq, order+1) and derivatives at parameters `points`.

    The node set matches the restriction of the triangle basis to an edge, so
    these are the exact traces of the volume basis.
    """
    t = np.asarray(points, dtype=float)
    C = _edge_coeffs(order)
    P = np.vander(t, order + 1, increasing=True)
    dP = np.zeros_like(P)
    for k in range(1, order + 1):
        dP[:, k] = k * t ** (k - 1)
    return P @ C, dP @ C
