"""Exception hierarchy shared by every layer of the workbench."""


class WickError(Exception):
    """Base class for all workbench errors."""


class DimensionCapExceeded(WickError, ValueError):
    def __init__(self, dim: int, cap: int):
        self.dim = dim
        self.cap = cap
        super().__init__(f"dimension {dim} exceeds the desk-scale cap {cap} (raise it with --dim-cap)")


class NotHermitianError(WickError, ValueError):
    def __init__(self, residual: float, scale: float):
        self.residual = residual
        self.scale = scale
        super().__init__(f"matrix is not Hermitian: ||A - A^H|| = {residual:.3e} (scale {scale:.3e})")


class EigenConvergenceError(WickError, RuntimeError):
    def __init__(self, info: str):
        self.info = info
        super().__init__(f"Hermitian eigensolver did not converge: {info}")


class SubspaceMismatchError(WickError, ValueError):
    pass


class IndexRangeError(WickError, ValueError):
    pass


class WickSymmetryError(WickError, ValueError):
    def __init__(self, deviation: float):
        self.deviation = deviation
        super().__init__(f"coefficients violate T_ij^kl = conj(T_ji^lk): max deviation {deviation:.3e}")


class PresetError(WickError, ValueError):
    pass


class ValidationFailed(WickError, ValueError):
    def __init__(self, result):
        self.result = result
        super().__init__("invalid Wick coefficients: " + "; ".join(result.violations))


class IndefiniteGramError(WickError):
    def __init__(self, degree: int, min_eigenvalue: float):
        self.degree = degree
        self.min_eigenvalue = min_eigenvalue
        super().__init__(
            f"Fock inner product is indefinite at degree {degree} "
            f"(min eigenvalue {min_eigenvalue:.6g}); representation refused"
        )


class QuotientError(WickError):
    def __init__(self, residual: float):
        self.residual = residual
        super().__init__(f"creation does not preserve the inner-product kernel (residual {residual:.3e})")


class ExprSyntaxError(WickError, ValueError):
    def __init__(self, message: str, position: int):
        self.position = position
        super().__init__(f"{message} at position {position}")


class AlgebraDocumentError(WickError, ValueError):
    pass
