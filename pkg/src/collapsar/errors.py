"""Exception hierarchy shared by every solver module."""


class CollapsarError(Exception):
    """Base class for all errors raised by the package."""


class InvalidArgument(CollapsarError, ValueError):
    pass


class ParameterError(InvalidArgument):
    """Raised when a parameter set violates the invariants of its solution case."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations) or "invalid parameters")


class NumericalFailure(CollapsarError):
    """Integration could not be carried to completion."""


class DegenerateDenominator(NumericalFailure):
    def __init__(self, z, f, message=None):
        self.z = z
        self.f = f
        super().__init__(message or f"profile denominator vanishes at z={z:.6g}, f={f:.6g}")


class StiffnessFailure(NumericalFailure):
    def __init__(self, t, y, message=None):
        self.t = t
        self.y = y
        super().__init__(message or f"step size underflow at t={t:.6g}")


class BlowupReached(CollapsarError):
    """Evaluation requested at or beyond the collapse of the scaling factor."""
