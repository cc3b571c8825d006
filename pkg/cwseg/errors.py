"""
Exception hierarchy. Every error carries the process exit code the CLI
reports for it.
"""
from typing import Optional, Tuple


class CwsegError(Exception):
    exit_code = 1


class PreconditionError(CwsegError, ValueError):
    exit_code = 2


class FormatError(CwsegError, ValueError):
    exit_code = 2


class MaskFormatError(FormatError):
    def __init__(self, message: str, coord: Optional[Tuple[int, int]] = None):
        super().__init__(message)
        self.coord = coord


class CapacityError(CwsegError):
    exit_code = 3


class LabelCoverageError(CapacityError):
    pass


class ConvergenceError(CwsegError):
    """Raised when the damping factor runs past its ceiling.

    `result` holds the TrainResult with the best model reached so far.
    """
    exit_code = 4

    def __init__(self, message: str, result=None):
        super().__init__(message)
        self.result = result
