"""Typed error hierarchy.

PreconditionError subclasses signal bad inputs (CLI exit code 2);
NumericalError subclasses signal failures detected during computation
(CLI exit code 3).
"""


class ShellwaveError(Exception):
    pass


class PreconditionError(ShellwaveError):
    pass


class NumericalError(ShellwaveError):
    pass


# -- scalar functions ------------------------------------------------------

class DomainError(PreconditionError):
    pass


class PoleError(PreconditionError):
    pass


# -- Dirac algebra ---------------------------------------------------------

class DimensionError(PreconditionError):
    pass


class FrameError(PreconditionError):
    pass


class SquareNotScalarError(PreconditionError):
    pass


class DegenerateFiberError(PreconditionError):
    pass


# -- couplings -------------------------------------------------------------

class ScalingSingularError(PreconditionError):
    pass


class HypothesisError(PreconditionError):
    pass


class CriticalTargetError(PreconditionError):
    pass


# -- kernels ---------------------------------------------------------------

class OriginError(PreconditionError):
    pass


class ZeroDisplacementError(PreconditionError):
    pass


class SingularError(NumericalError):
    pass


class DivergentBoundError(NumericalError):
    pass


class TruncationError(NumericalError):
    pass


class DegenerateFitError(NumericalError):
    pass


# -- zero-mode solver ------------------------------------------------------

class EpsTooLargeError(PreconditionError):
    pass


class ConditionNotMetError(PreconditionError):
    pass


class TailWarning(UserWarning):
    """Fiber-norm tail on the momentum grid was not monotonically decreasing."""
