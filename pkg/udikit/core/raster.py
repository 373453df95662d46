"""
Grid geometry, masked rasters and the per-pixel algebra shared by every stage
"""

import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from enum import StrEnum

import numpy as np

from udikit.utils.errors import DataError, GridMismatchError, NoOverlapError

BAND_NAMES = ("blue", "green", "red", "nir", "swir1", "swir2")


@dataclass(frozen=True)
class GridGeometry:
    """North-up grid of square pixels; origin is the upper-left corner in map meters"""

    width: int
    height: int
    x_origin: float
    y_origin: float
    pixel_size: float

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            msg = f"Invalid grid size: {self.width}x{self.height}"
            raise ValueError(msg)
        if not (math.isfinite(self.pixel_size) and self.pixel_size > 0):
            msg = f"Invalid pixel size: {self.pixel_size}"
            raise ValueError(msg)
        if not (math.isfinite(self.x_origin) and math.isfinite(self.y_origin)):
            msg = "Grid origin must be finite"
            raise ValueError(msg)

    @property
    def shape(self) -> tuple[int, int]:
        return self.height, self.width

    @property
    def size(self) -> int:
        return self.width * self.height

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax)"""
        return (
            self.x_origin,
            self.y_origin - self.height * self.pixel_size,
            self.x_origin + self.width * self.pixel_size,
            self.y_origin,
        )

    def pixel_center(self, col: int, row: int) -> tuple[float, float]:
        return (
            self.x_origin + (col + 0.5) * self.pixel_size,
            self.y_origin - (row + 0.5) * self.pixel_size,
        )

    def column_centers(self) -> np.ndarray:
        return self.x_origin + (np.arange(self.width) + 0.5) * self.pixel_size

    def row_centers(self) -> np.ndarray:
        return self.y_origin - (np.arange(self.height) + 0.5) * self.pixel_size

    def overlaps(self, other: "GridGeometry") -> bool:
        """True when the two extents share a region of positive area"""
        ax0, ay0, ax1, ay1 = self.bounds
        bx0, by0, bx1, by1 = other.bounds
        return min(ax1, bx1) > max(ax0, bx0) and min(ay1, by1) > max(ay0, by0)

    def translated(self, dx: float, dy: float) -> "GridGeometry":
        return GridGeometry(self.width, self.height, self.x_origin + dx, self.y_origin + dy, self.pixel_size)


class Raster:
    """
    Float64 samples with a validity mask

    Invalid samples carry no information and are never read by arithmetic;
    any payload may sit under them (including NaN).
    """

    __slots__ = ("geometry", "samples", "valid")

    def __init__(self, geometry: GridGeometry, samples: np.ndarray, valid: np.ndarray | None = None):
        samples = np.array(samples, dtype=np.float64, copy=True)
        if samples.shape != geometry.shape:
            msg = f"Sample shape {samples.shape} does not match grid {geometry.shape}"
            raise ValueError(msg)
        if valid is None:
            valid = np.isfinite(samples)
        else:
            valid = np.array(valid, dtype=bool, copy=True)
            if valid.shape != geometry.shape:
                msg = f"Mask shape {valid.shape} does not match grid {geometry.shape}"
                raise ValueError(msg)
            if not np.isfinite(samples[valid]).all():
                msg = "A sample flagged valid is not finite"
                raise ValueError(msg)
        self.geometry = geometry
        self.samples = samples
        self.valid = valid

    @classmethod
    def full(cls, geometry: GridGeometry, value: float) -> "Raster":
        return cls(geometry, np.full(geometry.shape, value, dtype=np.float64))

    @classmethod
    def empty(cls, geometry: GridGeometry) -> "Raster":
        """Fully invalid raster"""
        return cls(geometry, np.full(geometry.shape, np.nan), np.zeros(geometry.shape, dtype=bool))

    @property
    def width(self) -> int:
        return self.geometry.width

    @property
    def height(self) -> int:
        return self.geometry.height

    @property
    def valid_count(self) -> int:
        return int(self.valid.sum())

    def valid_values(self) -> np.ndarray:
        """Valid samples in row-major order"""
        return self.samples[self.valid]

    def filled(self, fill_value: float = np.nan) -> np.ndarray:
        return np.where(self.valid, self.samples, fill_value)

    def masked(self) -> np.ma.MaskedArray:
        return np.ma.MaskedArray(self.samples, mask=~self.valid)

    def with_mask(self, keep: np.ndarray) -> "Raster":
        """Copy with extra pixels invalidated (keep=False)"""
        return Raster(self.geometry, self.samples, self.valid & keep)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Raster):
            return NotImplemented
        return (
            self.geometry == other.geometry
            and np.array_equal(self.valid, other.valid)
            and np.array_equal(self.samples[self.valid], other.samples[other.valid])
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        g = self.geometry
        return f"Raster({g.width}x{g.height} @ {g.pixel_size}m, valid={self.valid_count})"


class MultibandRaster:
    """Ordered named bands on one grid; a pixel is valid only if valid in every band"""

    def __init__(self, bands: Mapping[str, Raster]):
        if not bands:
            msg = "A multiband raster needs at least one band"
            raise ValueError(msg)
        items = list(bands.items())
        geometry = items[0][1].geometry
        for name, band in items:
            if band.geometry != geometry:
                raise GridMismatchError(f"band {name!r}")
        self.geometry = geometry
        self.bands: dict[str, Raster] = dict(items)

    @classmethod
    def from_array(
        cls,
        geometry: GridGeometry,
        array: np.ndarray,
        valid: np.ndarray | None = None,
        names: Sequence[str] = BAND_NAMES,
    ) -> "MultibandRaster":
        """Build from a (bands, height, width) array with an optional shared mask"""
        if array.shape[0] != len(names):
            msg = f"Expected {len(names)} bands, got {array.shape[0]}"
            raise ValueError(msg)
        if len(set(names)) != len(names):
            msg = "Band names must be unique"
            raise ValueError(msg)
        return cls({name: Raster(geometry, array[i], valid) for i, name in enumerate(names)})

    @property
    def band_names(self) -> tuple[str, ...]:
        return tuple(self.bands)

    @property
    def valid(self) -> np.ndarray:
        mask = np.ones(self.geometry.shape, dtype=bool)
        for band in self.bands.values():
            mask &= band.valid
        return mask

    def stack(self) -> np.ndarray:
        """(bands, height, width) array of raw samples"""
        return np.stack([band.samples for band in self.bands.values()])

    def __getitem__(self, name: str) -> Raster:
        return self.bands[name]

    def __len__(self) -> int:
        return len(self.bands)


class CombineMode(StrEnum):
    MULTIPLY = "multiply"
    SUBTRACT = "subtract"
    PERCENT_CHANGE = "percent_change"


def require_aligned(a: Raster, b: Raster) -> None:
    if a.geometry != b.geometry:
        raise GridMismatchError(f"{a.geometry} vs {b.geometry}")


def combine(a: Raster, b: Raster, mode: CombineMode | str) -> Raster:
    """
    Element-wise a (op) b over pixels valid in both inputs

    percent_change is 100·(a−b)/b and is additionally invalid where b == 0.
    """
    mode = CombineMode(mode)
    require_aligned(a, b)

    valid = a.valid & b.valid
    if mode is CombineMode.PERCENT_CHANGE:
        valid &= b.samples != 0

    av = a.samples[valid]
    bv = b.samples[valid]
    if mode is CombineMode.MULTIPLY:
        values = av * bv
    elif mode is CombineMode.SUBTRACT:
        values = av - bv
    else:
        values = 100.0 * (av - bv) / bv

    out = np.full(a.geometry.shape, np.nan)
    out[valid] = values
    # Overflow to inf is not a valid sample
    valid[valid] = np.isfinite(values)
    return Raster(a.geometry, out, valid)


def mean_stack(rasters: Iterable[Raster]) -> Raster:
    """
    Per-pixel mean over the inputs valid at that pixel

    A pixel is invalid only where every input is invalid. Inputs are
    accumulated in sequence order.
    """
    rasters = list(rasters)
    if not rasters:
        msg = "mean_stack needs at least one raster"
        raise DataError(msg)

    geometry = rasters[0].geometry
    total = np.zeros(geometry.shape, dtype=np.float64)
    count = np.zeros(geometry.shape, dtype=np.int64)
    for raster in rasters:
        if raster.geometry != geometry:
            raise GridMismatchError(f"{raster.geometry} vs {geometry}")
        total += np.where(raster.valid, raster.samples, 0.0)
        count += raster.valid

    valid = count > 0
    out = np.full(geometry.shape, np.nan)
    out[valid] = total[valid] / count[valid]
    return Raster(geometry, out, valid)


def _nearest_index(centers: np.ndarray, origin: float, pixel_size: float, n: int, sign: float) -> tuple[np.ndarray, np.ndarray]:
    # Half-open pixel intervals: a centre on a shared edge maps to the higher index
    index = np.floor(sign * (centers - origin) / pixel_size).astype(np.int64)
    inside = (index >= 0) & (index < n)
    return np.clip(index, 0, n - 1), inside


def resample_nearest(src: Raster, target: GridGeometry) -> Raster:
    """
    Nearest-centre resampling onto target

    Each output pixel takes the source sample whose centre is nearest its own
    centre. Output pixels falling outside the source extent, or whose source
    pixel is invalid, are invalid.
    """
    sg = src.geometry
    if not sg.overlaps(target):
        raise NoOverlapError

    cols, col_inside = _nearest_index(target.column_centers(), sg.x_origin, sg.pixel_size, sg.width, 1.0)
    rows, row_inside = _nearest_index(target.row_centers(), sg.y_origin, sg.pixel_size, sg.height, -1.0)

    samples = src.samples[np.ix_(rows, cols)]
    valid = src.valid[np.ix_(rows, cols)] & row_inside[:, None] & col_inside[None, :]
    return Raster(target, np.where(valid, samples, np.nan), valid)
