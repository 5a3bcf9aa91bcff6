"""Exception types raised across the package."""


class PurifyError(Exception):
    """Base class for all errors raised by eigenpurify."""


class NonHermitianInput(PurifyError, ValueError):
    pass


class DimensionMismatch(PurifyError, ValueError):
    pass


class InvalidState(PurifyError, ValueError):
    pass


class NonOrthonormalBasis(PurifyError, ValueError):
    pass


class ZeroCoefficient(PurifyError, ValueError):
    pass


class InvalidSpec(PurifyError, ValueError):
    pass


class UnknownTarget(PurifyError, KeyError):
    pass


class InvalidSchedule(PurifyError, ValueError):
    pass


class NoConvergence(PurifyError, RuntimeError):
    pass


class VanishingProbability(PurifyError, ArithmeticError):
    """The heralded outcome has (numerically) zero probability."""

    def __init__(self, p_phi: float, threshold: float):
        super().__init__(f"measurement probability {p_phi:.3e} below {threshold:.1e}")
        self.p_phi = p_phi
        self.threshold = threshold
