"""Exception hierarchy shared by all parkcast modules."""


class ParkcastError(Exception):
    """Base class for every error raised by this package."""


class InvalidParams(ParkcastError, ValueError):
    pass


class DegenerateSupport(ParkcastError, ArithmeticError):
    pass


class NoSaturation(ParkcastError, ValueError):
    pass


class DataError(ParkcastError):
    """Errors caused by the input data rather than by how the API was called."""


class ParseError(DataError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class NonMonotonicTimestamps(ParseError):
    pass


class NegativeOccupancy(ParseError):
    pass


class DegenerateProfile(DataError, ValueError):
    pass


class InsufficientData(DataError, ValueError):
    pass


class LengthMismatch(ParkcastError, ValueError):
    pass


class OptimizerDiverged(ParkcastError, RuntimeError):
    pass


class SingularFit(ParkcastError, ArithmeticError):
    pass


class InvalidConfig(ParkcastError, ValueError):
    pass
