"""
Exception hierarchy shared by every stage
"""

from pathlib import Path

USAGE_EXIT_CODE = 1
DATA_EXIT_CODE = 2


class UdiKitError(Exception):
    """Base class for all udikit failures"""

    exit_code = USAGE_EXIT_CODE


class DataError(UdiKitError):
    """Input data is missing, malformed or inconsistent"""

    exit_code = DATA_EXIT_CODE


class GridMismatchError(DataError):
    """Two rasters that must share a grid do not"""

    def __init__(self, detail: str = ""):
        msg = "grids not aligned"
        if detail:
            msg = f"{msg}: {detail}"
        super().__init__(msg)


class NoOverlapError(DataError):
    """Source and target extents are disjoint"""

    def __init__(self) -> None:
        super().__init__("no spatial overlap")


class FormatError(DataError):
    """A file could not be parsed; carries the offending location"""

    def __init__(self, message: str, path: Path | str | None = None, offset: str | None = None):
        self.path = Path(path) if path is not None else None
        self.offset = offset
        parts = []
        if self.path is not None:
            parts.append(str(self.path))
        if offset is not None:
            parts.append(offset)
        prefix = ": ".join(parts)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class InsufficientHistoryError(DataError):
    """Too few present months to fit a seasonal model"""


class StageOrderError(UdiKitError):
    """A stage was invoked before the stage producing its inputs"""

    exit_code = USAGE_EXIT_CODE
