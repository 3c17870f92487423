"""Exception types shared across the package."""


class SpecMismatchError(ValueError):
    """Operands belong to different semigroups or algebras."""


class ResourceCapError(RuntimeError):
    """An enumeration or matrix size exceeded the configured cap."""


class SchemaError(ValueError):
    """A problem-instance file failed validation.

    `location` is a JSON-pointer-ish path into the offending document.
    """

    def __init__(self, message: str, location: str = ""):
        self.location = location
        super().__init__(f"{message} (at {location or '/'})")


class CornerMembershipError(ValueError):
    """An element handed to a kernel lies outside the required corner."""

    def __init__(self, residual: float, tol: float):
        self.residual = residual
        self.tol = tol
        super().__init__(
            f"element is not in the corner subspace: projection residual "
            f"{residual:.3e} exceeds tolerance {tol:.3e}"
        )


class CovarianceError(ValueError):
    """A (phi, T) pair failed the covariance relation at construction."""

    def __init__(self, residual: float, tol: float, where: str):
        self.residual = residual
        self.tol = tol
        self.where = where
        super().__init__(
            f"covariance residual {residual:.3e} exceeds {tol:.3e} ({where})"
        )


class GramNotPositiveError(RuntimeError):
    """The Gram operator of a kernel has a genuinely negative eigenvalue.

    Dilation refuses such inputs; the witness eigenvector is kept so callers
    can report it.
    """

    def __init__(self, min_eigenvalue: float, scale: float, witness=None):
        self.min_eigenvalue = min_eigenvalue
        self.scale = scale
        self.witness = witness
        super().__init__(
            f"Gram operator is not positive semidefinite: min eigenvalue "
            f"{min_eigenvalue:.6e} (largest magnitude {scale:.6e})"
        )
