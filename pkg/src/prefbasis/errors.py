"""Exception hierarchy shared by all modules."""


class PrefBasisError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(PrefBasisError, ValueError):
    pass


class IndexOutOfRange(PrefBasisError, IndexError):
    pass


class NonUnitary(PrefBasisError, ValueError):
    pass


class NonUnitaryKick(NonUnitary):
    pass


class ZeroVector(PrefBasisError, ValueError):
    pass


class NoConvergence(PrefBasisError, ArithmeticError):
    """An iterative numerical routine hit its iteration cap."""


class NotDegenerate(PrefBasisError, ValueError):
    """A basis rotation was requested across distinct Schmidt coefficients."""


class NotFound(PrefBasisError):
    """The state has no tridecomposition (best residual far above tolerance)."""

    def __init__(self, message, best_residual=None):
        super().__init__(message)
        self.best_residual = best_residual


class Inconclusive(PrefBasisError, ArithmeticError):
    """Best residual sits between tol and 100*tol; no honest yes/no answer."""

    def __init__(self, message, best_residual=None):
        super().__init__(message)
        self.best_residual = best_residual


class InvalidCanonical(PrefBasisError, ValueError):
    pass


class DimensionTooSmall(PrefBasisError, ValueError):
    pass


class AliasRisk(PrefBasisError, ValueError):
    """A momentum kick or wavepacket width falls outside the grid's safe band."""


class BranchCountUnsupported(PrefBasisError, ValueError):
    pass


class ConfigError(PrefBasisError, ValueError):
    """Invalid scenario configuration. ``field`` names the offending key."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
