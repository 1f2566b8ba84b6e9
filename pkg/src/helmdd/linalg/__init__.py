"""Complex sparse linear algebra with a compiled kernel core and a
pure-Python fallback (see backend.py)."""

from .sparse import (
    BACKEND,
    CsrMatrix,
    Factorization,
    MultiVector,
    SingularMatrixError,
    default_counters,
    factorize,
    norms,
    read_triplets,
    relative_error,
    solve_batch,
    spmm,
    write_triplets,
)

__all__ = [
    "BACKEND", "CsrMatrix", "Factorization", "MultiVector",
    "SingularMatrixError", "default_counters", "factorize", "norms",
    "read_triplets", "relative_error", "solve_batch", "spmm",
    "write_triplets",
]
