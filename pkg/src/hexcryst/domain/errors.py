from typing import Any, Optional


class HexcrystError(Exception):
    """Base class for every error raised by the library."""


class InvalidGeometry(HexcrystError):
    pass


class CellTooLarge(HexcrystError):
    """A torus cell reaches beyond the 3x3 block of period images."""


class NonConvergence(HexcrystError):

    def __init__(self, message: str, partial: Optional[Any] = None):
        super().__init__(message)
        self.partial = partial


class EmptyCellUnrecoverable(HexcrystError):
    pass


class InstanceTooLarge(HexcrystError):
    pass


class DegenerateFit(HexcrystError):
    pass


class StepRejected(HexcrystError):
    pass


class ConfigError(HexcrystError):

    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(message)
        self.line = line


class InvalidParameter(HexcrystError, ValueError):
    pass
