"""Exception and warning types raised across rigcal."""


class CalibrationError(ValueError):
    """Base class for data errors (CLI exit code 2)."""


class _LineError(CalibrationError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(message)


class NotARotation(_LineError):
    pass


class NotUnitQuaternion(_LineError):
    pass


class ParseError(CalibrationError):
    def __init__(self, message, line=None, token=None, path=None):
        self.line = line
        self.token = token
        self.path = path
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if token is not None:
            where.append(f"token {token}")
        prefix = ":".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class EmptyTrajectory(CalibrationError):
    pass


class LengthMismatch(CalibrationError):
    pass


class RankDeficient(CalibrationError):
    pass


class InvalidForgetting(CalibrationError):
    pass


class InvalidConfig(CalibrationError):
    pass


class NumericalBreakdown(ArithmeticError):
    """Internal failure of a recursion that should not happen for valid input."""


class NoData(CalibrationError):
    pass


class IllConditionedWarning(RuntimeWarning):
    """The rig rotation is poorly observable from the motion seen so far."""
