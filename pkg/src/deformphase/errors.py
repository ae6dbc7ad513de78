"""Exception hierarchy.

Every error raised on purpose by the package derives from
:class:`DeformPhaseError`, so callers (and the CLI) can separate our
validation failures from genuine bugs.
"""


class DeformPhaseError(Exception):
    """Base class for all package errors."""


# geom3
class NotSkew(DeformPhaseError, ValueError):
    pass


class Degenerate(DeformPhaseError, ValueError):
    pass


class NotPositiveDefinite(DeformPhaseError, ValueError):
    pass


# deformation
class Collinear(NotPositiveDefinite):
    pass


class NonPositiveScale(DeformPhaseError, ValueError):
    pass


class NonPositiveMoment(DeformPhaseError, ValueError):
    pass


class UnsortedSamples(DeformPhaseError, ValueError):
    pass


class NotCenterOfMassFrame(DeformPhaseError, ValueError):
    pass


# momentum / reconstruct
class StepNotDividing(DeformPhaseError, ValueError):
    pass


class NumericalFailure(DeformPhaseError, RuntimeError):
    pass


class NotANode(DeformPhaseError, ValueError):
    pass


# phase
class DegenerateCurve(DeformPhaseError, ValueError):
    pass


class NotSimple(DeformPhaseError, ValueError):
    pass


class NotClosed(DeformPhaseError, ValueError):
    pass


class AxisMismatch(DeformPhaseError, ValueError):
    pass


class NotDiagonalOrdered(DeformPhaseError, ValueError):
    pass


class RegimeNotApplicable(DeformPhaseError, ValueError):
    pass


# analytic
class DegenerateRate(DeformPhaseError, ValueError):
    pass


# cli
class ConfigError(DeformPhaseError, ValueError):
    pass
