"""Exception types shared across the package."""


class CubicAvoidError(Exception):
    """Base class for all domain errors raised by cubicavoid."""


class LogNearCutLocus(CubicAvoidError):
    """Rotation logarithm requested too close to the antipodal cut locus."""

    def __init__(self, angle, limit):
        self.angle = float(angle)
        self.limit = float(limit)
        super().__init__(
            f"rotation angle {self.angle:.6f} rad is beyond the admissible "
            f"limit {self.limit:.6f} rad"
        )


class CutLocusDuringIntegration(CubicAvoidError):
    """A trajectory left the geodesically convex neighborhood of the obstacle."""

    def __init__(self, t, cause=None):
        self.t = float(t)
        self.cause = cause
        super().__init__(f"trajectory left the convex neighborhood at t={self.t:.6g}")


class NonFiniteState(CubicAvoidError):
    """Integration produced NaN or infinite state components."""

    def __init__(self, t):
        self.t = float(t)
        super().__init__(f"non-finite state encountered at t={self.t:.6g}")


class NoConvergence(CubicAvoidError):
    """Shooting iteration exhausted its budget without meeting the tolerance."""

    def __init__(self, iterations, residual):
        self.iterations = int(iterations)
        self.residual = float(residual)
        super().__init__(
            f"no convergence after {self.iterations} iterations, "
            f"best residual {self.residual:.3e}"
        )


class StepUnderflow(CubicAvoidError):
    """A finite-difference step cannot fit inside the admissible neighborhood."""


class GridTooCoarse(CubicAvoidError):
    """The trajectory grid is too coarse for the requested quadrature."""


class ConfigInvalid(CubicAvoidError):
    """Scenario configuration failed validation.

    The offending field is recorded as a dotted path, e.g. "interval.nodes".
    """

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
