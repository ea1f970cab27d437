"""Exception hierarchy shared by all modules."""


class AERError(Exception):
    """Base class for every error raised by this package."""


# core asymptotics
class NonFiniteSource(AERError):
    pass


class NonrealRegularFunction(AERError):
    """A radicand of the regular functions is not positive."""


class FrontExitedDomain(AERError):
    pass


class StepTooLarge(AERError):
    pass


class DegenerateLayer(AERError):
    pass


class OutOfDomain(AERError):
    pass


# finite volumes
class CFLViolation(AERError):
    pass


class NonFiniteState(AERError):
    pass


class TimeNotStored(AERError):
    pass


class EmptyRegion(AERError):
    pass


# inversion
class NoLayerDetected(AERError):
    pass


class DiscrepancyUnreachable(AERError):
    pass


class DegenerateSide(AERError):
    pass


class MissingGradient(AERError):
    pass


class NonUniformGrid(AERError):
    pass


class OneSidedData(AERError):
    pass


# error estimation
class InfeasibleSet(AERError):
    pass


class InfeasibleEstimate(AERError):
    pass


class DegenerateBreakpoint(AERError):
    pass


class UnboundedLP(AERError):
    pass
