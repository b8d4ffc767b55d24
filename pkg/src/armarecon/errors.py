"""Exception hierarchy. The CLI maps each family to an exit code."""


class ArmaReconError(Exception):
    pass


class ConfigError(ArmaReconError, ValueError):
    """Invalid configuration or hyperparameter (exit code 1)."""


class DataError(ArmaReconError, ValueError):
    """Malformed or out-of-range input data (exit code 2)."""


class InputRangeError(DataError):
    def __init__(self, index, value, message=None):
        self.index = index
        self.value = value
        super().__init__(message or f"value {value!r} at index {index} is outside [0, 1]")


class NiftiError(DataError):
    pass


class BadMagicError(NiftiError):
    pass


class UnsupportedDatatypeError(NiftiError):
    pass


class TruncatedDataError(NiftiError):
    pass


class NumericalError(ArmaReconError, ArithmeticError):
    """Numerical failure: singular solve, non-convergence, poles (exit code 3)."""


class SingularFilterError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    def __init__(self, message, residual=None, iterations=None):
        self.residual = residual
        self.iterations = iterations
        super().__init__(message)


class PoleError(NumericalError):
    def __init__(self, lam):
        self.lam = lam
        super().__init__(f"filter denominator vanishes at lambda={lam!r}")
