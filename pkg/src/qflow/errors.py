"""Exception hierarchy; ``exit_code`` maps each class onto the CLI status."""


class QFlowError(Exception):
    exit_code = 1


class ConfigInvalid(QFlowError, ValueError):
    exit_code = 2


class NumericalFailure(QFlowError, ArithmeticError):
    exit_code = 3


class NonpositiveDensity(NumericalFailure):
    pass


class NonFinite(NumericalFailure):
    pass


class SteadyStateTimeout(QFlowError):
    exit_code = 4


class IoError(QFlowError, OSError):
    exit_code = 5


class FormatError(IoError):
    pass
