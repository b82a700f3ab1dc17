"""Exception types raised across the package."""


class ExocauseError(Exception):
    """Base class for all package errors."""


class ParseError(ExocauseError):
    def __init__(self, path, line_no, line):
        self.path = str(path)
        self.line_no = line_no
        self.line = line
        super().__init__(f"{path}:{line_no}: cannot parse row {line.strip()!r}")


class TooFewRows(ExocauseError):
    pass


class DegenerateVariable(ExocauseError):
    pass


class OptimizationFailure(ExocauseError):
    pass


class RootNotFound(ExocauseError):
    pass


class NonPositiveVariance(ExocauseError):
    pass


class ShapeMismatch(ExocauseError):
    pass


class ReplicateFailure(ExocauseError):
    def __init__(self, b, cause=None):
        self.b = b
        self.cause = cause
        super().__init__(f"bootstrap replicate {b} failed: {cause}")


class TooManyFailures(ExocauseError):
    pass
