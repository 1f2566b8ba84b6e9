"""Exceptions raised by the sparse kernels."""


class SingularMatrixError(RuntimeError):
    """Structural or numerical singularity met during factorization.

    Carries the elimination step and the original column index at which no
    acceptable pivot was found; `where` optionally names the matrix.
    """

    def __init__(self, step: int, column: int, where: str = ""):
        self.step = int(step)
        self.column = int(column)
        self.where = where
        loc = f" in {where}" if where else ""
        super().__init__(
            f"singular matrix{loc}: no pivot at elimination step {step} "
            f"(original column {column})"
        )
