"""Exception hierarchy for the difem package."""


class DifemError(Exception):
    """Base class for all package errors."""


class AssumptionViolation(DifemError):
    """The mesh does not resolve the interface well enough for the scheme."""


class InterfaceResolutionError(AssumptionViolation):
    pass


class NoSignChangeError(DifemError):
    pass


class NonConvergenceError(DifemError):
    pass


class DegenerateCutError(AssumptionViolation):
    pass


class PatchError(AssumptionViolation):
    pass


class ConfigError(DifemError):
    pass


class UnknownExampleError(ConfigError):
    pass


class FieldUndefinedError(DifemError):
    pass


class NumericalError(DifemError):
    """Failure inside assembly or the linear solve."""


class AssemblyError(NumericalError):
    pass


class SingularSystemError(NumericalError):
    pass


class ResourceError(DifemError):
    pass
