"""
Urban Development Index: impervious index times nighttime radiance
"""

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from loguru import logger

from udikit.core.classify import ImperviousMap
from udikit.core.months import MonthKey
from udikit.core.raster import CombineMode, GridGeometry, Raster, combine, mean_stack, resample_nearest
from udikit.utils.errors import DataError

BASELINE_TAG = "pre-storm composite"


@dataclass(frozen=True)
class UdiRaster:
    """UDI values for one month, or a tagged composite"""

    raster: Raster
    month: MonthKey | None = None
    tag: str | None = None

    def __post_init__(self):
        if self.month is None and self.tag is None:
            msg = "UdiRaster needs a month or a tag"
            raise ValueError(msg)
        values = self.raster.valid_values()
        if values.size and values.min() < 0:
            msg = "UDI values must be >= 0"
            raise DataError(msg)

    @property
    def label(self) -> str:
        return str(self.month) if self.month is not None else str(self.tag)


def brightness_on_grid(radiance: Raster, target: GridGeometry) -> Raster:
    """Sharpen a coarse radiance composite onto the impervious grid"""
    return resample_nearest(radiance, target)


def compute_udi(impervious: ImperviousMap, brightness: Raster, month: MonthKey | None = None) -> UdiRaster:
    """
    UDI = i × B per pixel

    brightness must already sit on the impervious grid. B = 0 gives a valid
    UDI of 0; an invalid factor gives an invalid UDI. Negative radiance (sensor
    noise) is treated as unlit.
    """
    negative = brightness.valid & (np.where(brightness.valid, brightness.samples, 0.0) < 0)
    if negative.any():
        logger.debug(f"UDI {month}: {int(negative.sum())} negative radiance pixels treated as 0")
        brightness = Raster(brightness.geometry, np.where(negative, 0.0, brightness.samples), brightness.valid)
    product = combine(impervious.raster, brightness, CombineMode.MULTIPLY)
    return UdiRaster(product, month=month, tag=None if month is not None else "composite")


def prestorm_baseline(
    udis: Sequence[UdiRaster],
    window: tuple[MonthKey, MonthKey] | None = None,
) -> UdiRaster:
    """Mean of the supplied monthly UDIs, tagged as the pre-storm composite"""
    if not udis:
        msg = "prestorm_baseline needs at least one monthly UDI"
        raise DataError(msg)
    if window is not None:
        start, end = window
        outside = [u.label for u in udis if u.month is None or not start <= u.month <= end]
        if outside:
            msg = f"months outside the baseline window {start}..{end}: {', '.join(outside)}"
            raise DataError(msg)
    return UdiRaster(mean_stack([u.raster for u in udis]), tag=BASELINE_TAG)


def udi_change(monthly: UdiRaster, baseline: UdiRaster, mode: CombineMode | str = CombineMode.SUBTRACT) -> Raster:
    """Monthly UDI against the baseline: difference or percent change"""
    mode = CombineMode(mode)
    if mode is CombineMode.MULTIPLY:
        msg = "udi_change mode must be subtract or percent_change"
        raise ValueError(msg)
    return combine(monthly.raster, baseline.raster, mode)
