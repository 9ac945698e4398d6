class LapDefenseError(Exception):
    """Base class for errors raised by this package."""


class PreconditionError(LapDefenseError, ValueError):
    pass


class DimensionError(LapDefenseError, ValueError):
    pass


class ContractError(LapDefenseError, ValueError):
    pass


class ParameterError(LapDefenseError, ValueError):
    pass


class InputError(LapDefenseError, ValueError):
    pass


class CapacityError(LapDefenseError, ValueError):
    pass


class ValidationError(LapDefenseError, ValueError):
    pass


class ZeroEnergyError(LapDefenseError, ZeroDivisionError):
    pass


class ParseError(LapDefenseError, ValueError):
    def __init__(self, path, lineno, message):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{self.path}:{lineno}: {message}")


class NumericalError(LapDefenseError, ArithmeticError):
    def __init__(self, message, iteration=None):
        self.iteration = iteration
        if iteration is not None:
            message = f"{message} (iteration {iteration})"
        super().__init__(message)
