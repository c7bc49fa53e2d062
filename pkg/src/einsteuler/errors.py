"""Exception types raised by the toolkit.

Every numerical failure carries enough location data (grid index, time,
component) to find the offending point in a dump.
"""


class EinsteulerError(Exception):
    """Base class for all toolkit errors."""


class SingularMetric(EinsteulerError):
    def __init__(self, point, det=None):
        self.point = point
        self.det = det
        super().__init__(f"metric determinant {det!r} below threshold at point {point}")


class NotPositiveDefinite(EinsteulerError):
    def __init__(self, point, what="metric"):
        self.point = point
        super().__init__(f"{what} not positive definite at point {point}")


class NegativeDensity(EinsteulerError, ValueError):
    pass


class NegativeMakino(EinsteulerError, ValueError):
    pass


class NotNormalized(EinsteulerError):
    def __init__(self, point, residual):
        self.point = point
        self.residual = residual
        super().__init__(f"g(u,u) + 1 = {residual:.3e} at point {point}")


class PastDirected(EinsteulerError):
    def __init__(self, point):
        self.point = point
        super().__init__(f"four-velocity is past directed (u^0 < 0) at point {point}")


class CausalityViolation(EinsteulerError):
    def __init__(self, point, sigma2):
        self.point = point
        self.sigma2 = sigma2
        super().__init__(f"sound speed squared {sigma2:.6g} >= 1 at point {point}")


class NonHyperbolic(EinsteulerError):
    pass


class SingularLapse(EinsteulerError):
    def __init__(self, point, g00):
        self.point = point
        self.g00 = g00
        super().__init__(f"|g^00| = {abs(g00):.3e} too small at point {point}")


class IndefiniteA0(EinsteulerError):
    def __init__(self, point, eig, t=None):
        self.point = point
        self.eig = eig
        self.t = t
        where = f"t={t}, " if t is not None else ""
        super().__init__(f"A0 not positive definite ({where}point {point}, min eig {eig:.3e})")


class IndefiniteWeight(EinsteulerError):
    pass


class NonUniformGrid(EinsteulerError, ValueError):
    pass


class TailNotConverged(EinsteulerError):
    def __init__(self, j_max, ratio):
        self.j_max = j_max
        self.ratio = ratio
        super().__init__(
            f"last dyadic shell j={j_max} carries {ratio:.3e} of the norm; increase j_max"
        )


class CflViolation(EinsteulerError):
    pass


class NonFinite(EinsteulerError):
    def __init__(self, t, point, component):
        self.t = t
        self.point = point
        self.component = component
        super().__init__(f"non-finite value at t={t}, point {point}, component {component}")


class LapseCollapse(EinsteulerError):
    def __init__(self, point, u0):
        self.point = point
        self.u0 = u0
        super().__init__(f"u^0 = {u0:.3e} below minimum at point {point}")


class ParseError(EinsteulerError):
    def __init__(self, line, message):
        self.line = line
        self.message = message
        super().__init__(f"line {line}: {message}")


class ValidationError(EinsteulerError):
    def __init__(self, field, constraint, line=None):
        self.field = field
        self.constraint = constraint
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{field}: {constraint}")
