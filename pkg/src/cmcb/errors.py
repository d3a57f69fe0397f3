"""Exception hierarchy for cmcb."""


class CMCBError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(CMCBError, ValueError):
    """Radius outside the (clamped) open domain of a warping function."""


class NonPositiveWarp(CMCBError, ValueError):
    """alpha**2 or psi**2 is not strictly positive at the requested radius."""


class QuadratureFailure(CMCBError, RuntimeError):
    pass


class DerivativeMismatch(CMCBError, ValueError):
    """A user-supplied derivative disagrees with finite differences."""


class InvalidDimension(CMCBError, ValueError):
    pass


class SingularBasis(CMCBError, ValueError):
    pass


class MissingZeroMode(CMCBError, ValueError):
    pass


class NonMonotone(CMCBError, ValueError):
    pass


class BoundExceedsData(CMCBError, ValueError):
    """An explicit spectrum was queried beyond its last supplied eigenvalue."""


class SpectrumBoundExceeded(BoundExceedsData):
    pass


class ConvergenceFailure(CMCBError, RuntimeError):
    pass


class ZeroModeQueried(CMCBError, ValueError):
    """Constants violate the volume constraint and are never shifted."""


class DegeneratePoint(CMCBError, ArithmeticError):
    """Some fiber eigenvalue lies inside the degeneracy band around h(r)."""


class DegenerateEndpoint(DegeneratePoint):
    pass


class MissingFiberCurvature(CMCBError, ValueError):
    pass


class InvalidMass(CMCBError, ValueError):
    pass


class RootNotFound(CMCBError, RuntimeError):
    pass


class UnknownModel(CMCBError, KeyError):
    pass


class InvalidParams(CMCBError, ValueError):
    pass


class ConfigError(CMCBError, ValueError):
    pass
