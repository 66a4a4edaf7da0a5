"""Exception hierarchy. Each family maps to a CLI exit code."""


class GridshareError(Exception):
    exit_code = 1


class ConfigError(GridshareError, ValueError):
    exit_code = 2


class CapabilityError(ConfigError):
    """Requested size exceeds what an exhaustive routine supports."""


class DataError(GridshareError, ValueError):
    exit_code = 3


class ParseError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SchemaError(DataError):
    pass


class ValidationError(DataError):
    pass


class AlignmentError(DataError):
    pass


class InputError(DataError):
    pass


class NumericError(GridshareError, ArithmeticError):
    exit_code = 4


class DegenerateError(NumericError):
    pass


class OrderSelectionError(NumericError):
    pass


class FitError(NumericError):
    def __init__(self, message, best_params=None, best_objective=None, iterations=None):
        super().__init__(message)
        self.best_params = best_params
        self.best_objective = best_objective
        self.iterations = iterations
