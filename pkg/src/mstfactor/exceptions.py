"""Exception hierarchy. The CLI maps each family to an exit code."""


class MSTFactorError(Exception):
    """Base class for all package errors."""


class DataError(MSTFactorError, ValueError):
    """Malformed, missing or otherwise unusable input data."""


class ModelError(MSTFactorError, ArithmeticError):
    """Numerical or model failure (no factors, singular matrices, non-convergence)."""


class NoSignificantFactorsError(ModelError):
    pass


class SingularMatrixError(ModelError):
    pass


class ConvergenceError(ModelError):
    pass
