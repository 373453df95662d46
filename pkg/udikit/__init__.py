"""
udikit: Urban Development Index time-series toolkit for post-disaster power and infrastructure loss estimates
"""

__version__ = "0.1.0"

from .core.months import MonthKey
from .core.raster import GridGeometry, MultibandRaster, Raster
from .utils.config import Config
from .utils.errors import DataError, FormatError, GridMismatchError, UdiKitError
from .utils.logging_config import get_logger, setup_logging

__all__ = [
    "Config",
    "DataError",
    "FormatError",
    "GridGeometry",
    "GridMismatchError",
    "MonthKey",
    "MultibandRaster",
    "Raster",
    "UdiKitError",
    "__version__",
    "get_logger",
    "setup_logging",
]
