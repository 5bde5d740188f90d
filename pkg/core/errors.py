"""Exception hierarchy shared by the core modules."""


class DeligneError(Exception):
    """Base class for every error raised by the toolkit."""


class SpaceMismatchError(DeligneError, ValueError):
    pass


class DifferentiabilityError(DeligneError, ValueError):
    pass


class CoordinateNameError(DeligneError, KeyError):
    pass


class BadCoverError(DeligneError, ValueError):
    pass


class NerveIndexError(DeligneError, IndexError):
    pass


class NotACocycleError(DeligneError, ValueError):
    pass


class IntegralityError(DeligneError, ValueError):
    pass


class NotClosedError(DeligneError, ValueError):
    pass


class NotAGerbeError(DeligneError, ValueError):
    pass


class NormalityRequiredError(DeligneError, ValueError):
    pass


class PreconditionError(DeligneError, ValueError):
    pass


class InternalConsistencyError(DeligneError, RuntimeError):
    pass


class FormulaViolationError(DeligneError, ValueError):
    pass


class ConfigurationError(DeligneError, ValueError):
    pass

