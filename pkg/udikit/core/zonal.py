"""
Zonal statistics of monthly brightness per census tract

Tracts are rasterized once per grid (pixel-centre rule, even-odd crossing
test) and the footprints are reused for every month.
"""

import math
from collections import OrderedDict
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from udikit.core.months import MonthKey
from udikit.core.raster import GridGeometry, Raster
from udikit.core.tracts import TractPolygon
from udikit.utils.errors import DataError, FormatError, GridMismatchError
from udikit.utils.file_utils import read_table, write_table

ZONAL_COLUMNS = ["tract_id", "year", "month", "mean", "std", "min", "max", "valid_count", "total_count"]


@dataclass(frozen=True, eq=False)
class PixelFootprint:
    """Pixels of a grid whose centres fall inside a tract"""

    tract_id: str
    geometry: GridGeometry
    cols: np.ndarray
    rows: np.ndarray

    def __len__(self) -> int:
        return int(self.cols.size)

    def pixels(self) -> set[tuple[int, int]]:
        return set(zip(self.cols.tolist(), self.rows.tolist(), strict=True))


def ring_crossings(ring: np.ndarray, xs: np.ndarray, py: float) -> np.ndarray:
    """
    Number of ring edges crossed by the ray from each (x, py) towards +x

    An edge counts when it straddles py (one end <= py, the other > py) and
    its intersection lies strictly right of the point.
    """
    x0, y0 = ring[:, 0], ring[:, 1]
    x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
    straddle = (y0 <= py) != (y1 <= py)
    if not straddle.any():
        return np.zeros(xs.shape, dtype=np.int64)
    a, b, c, d = x0[straddle], y0[straddle], x1[straddle], y1[straddle]
    x_int = np.sort(a + (py - b) / (d - b) * (c - a))
    return x_int.size - np.searchsorted(x_int, xs, side="right")


def _ring_mask(ring: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    mask = np.zeros((ys.size, xs.size), dtype=bool)
    for r, py in enumerate(ys):
        mask[r] = ring_crossings(ring, xs, float(py)) % 2 == 1
    return mask


def rasterize(tract: TractPolygon, geometry: GridGeometry) -> PixelFootprint:
    """
    Footprint of a tract: centres inside the outer ring and outside every hole
    """
    for ring in tract.rings:
        if len(ring) < 3:
            msg = f"tract {tract.tract_id}: degenerate ring"
            raise DataError(msg)

    xs = geometry.column_centers()
    ys = geometry.row_centers()
    outer = tract.outer
    row_sel = np.flatnonzero((ys >= outer[:, 1].min()) & (ys <= outer[:, 1].max()))
    col_sel = np.flatnonzero((xs >= outer[:, 0].min()) & (xs <= outer[:, 0].max()))
    if row_sel.size == 0 or col_sel.size == 0:
        empty = np.zeros(0, dtype=np.int64)
        return PixelFootprint(tract.tract_id, geometry, empty, empty)

    sub_x, sub_y = xs[col_sel], ys[row_sel]
    inside = _ring_mask(outer, sub_x, sub_y)
    for hole in tract.holes:
        inside &= ~_ring_mask(hole, sub_x, sub_y)

    rr, cc = np.nonzero(inside)
    return PixelFootprint(tract.tract_id, geometry, col_sel[cc].astype(np.int64), row_sel[rr].astype(np.int64))


class FootprintCache:
    """LRU cache of tract footprints keyed by tract geometry and grid"""

    def __init__(self, max_size: int = 4096):
        self.max_size = max_size
        self._cache: OrderedDict[tuple[Any, ...], PixelFootprint] = OrderedDict()
        self._hits = 0
        self._misses = 0

    def get(self, tract: TractPolygon, geometry: GridGeometry) -> PixelFootprint:
        """Cached footprint, rasterizing on a miss"""
        key = (tract.tract_id, geometry, tract.ring_key())
        if key in self._cache:
            self._hits += 1
            self._cache.move_to_end(key)
            return self._cache[key]

        self._misses += 1
        footprint = rasterize(tract, geometry)
        self._cache[key] = footprint
        if len(self._cache) > self.max_size:
            self._cache.popitem(last=False)
        return footprint

    def footprints(self, tracts: Iterable[TractPolygon], geometry: GridGeometry) -> list[PixelFootprint]:
        return [self.get(t, geometry) for t in tracts]

    def clear(self) -> None:
        self._cache.clear()

    def get_stats(self) -> dict[str, Any]:
        total = self._hits + self._misses
        return {
            "size": len(self._cache),
            "max_size": self.max_size,
            "hits": self._hits,
            "misses": self._misses,
            "hit_rate": self._hits / total if total else 0.0,
        }


@dataclass(frozen=True)
class ZonalRecord:
    """Brightness statistics for one tract in one month; statistics absent when no pixel is valid"""

    tract_id: str
    month: MonthKey
    mean: float | None
    std: float | None
    min: float | None
    max: float | None
    valid_count: int
    total_count: int

    @property
    def has_data(self) -> bool:
        return self.valid_count > 0


def reduce_values(values: np.ndarray) -> tuple[float, float, float, float]:
    """
    (mean, population std, min, max) of a non-empty sample

    Sums are correctly rounded so the result is independent of pixel order.
    The mean is clamped into [min, max].
    """
    n = values.size
    lo = float(values.min())
    hi = float(values.max())
    mean = min(max(math.fsum(values.tolist()) / n, lo), hi)
    dev = values - mean
    std = math.sqrt(math.fsum((dev * dev).tolist()) / n)
    return mean, std, lo, hi


def zonal_stats(raster: Raster, footprints: Sequence[PixelFootprint], month: MonthKey) -> list[ZonalRecord]:
    """
    Statistics over the valid pixels of each footprint

    Raises:
        GridMismatchError: a footprint built on another grid
        DataError: a footprint index outside the raster
    """
    g = raster.geometry
    records = []
    for fp in footprints:
        if fp.geometry != g:
            raise GridMismatchError(f"footprint of tract {fp.tract_id}")
        if len(fp) and (
            fp.cols.min() < 0 or fp.rows.min() < 0 or fp.cols.max() >= g.width or fp.rows.max() >= g.height
        ):
            msg = f"footprint index out of bounds for tract {fp.tract_id}"
            raise DataError(msg)

        valid = raster.valid[fp.rows, fp.cols]
        values = raster.samples[fp.rows, fp.cols][valid]
        if values.size:
            mean, std, lo, hi = reduce_values(values)
            records.append(ZonalRecord(fp.tract_id, month, mean, std, lo, hi, int(values.size), len(fp)))
        else:
            records.append(ZonalRecord(fp.tract_id, month, None, None, None, None, 0, len(fp)))
    return records


class ZonalSeries:
    """Monthly records of one tract in strictly increasing month order; masked months absent"""

    def __init__(self, tract_id: str, records: Iterable[ZonalRecord]):
        self.tract_id = tract_id
        self.records: list[ZonalRecord] = []
        for record in records:
            if record.tract_id != tract_id:
                msg = f"record of tract {record.tract_id} in series of {tract_id}"
                raise DataError(msg)
            if not record.has_data:
                continue
            if self.records and record.month <= self.records[-1].month:
                msg = f"tract {tract_id}: months out of order at {record.month}"
                raise DataError(msg)
            self.records.append(record)
        self._by_month = {r.month: r for r in self.records}

    def __iter__(self) -> Iterator[ZonalRecord]:
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def get(self, month: MonthKey) -> ZonalRecord | None:
        return self._by_month.get(month)

    @property
    def months(self) -> list[MonthKey]:
        return [r.month for r in self.records]

    def means(self) -> np.ndarray:
        return np.array([r.mean for r in self.records], dtype=np.float64)


def build_series(records: Iterable[ZonalRecord]) -> dict[str, ZonalSeries]:
    """Group records by tract (sorted by month) into series, ordered by tract_id"""
    grouped: dict[str, list[ZonalRecord]] = {}
    for record in records:
        grouped.setdefault(record.tract_id, []).append(record)
    return {
        tid: ZonalSeries(tid, sorted(grouped[tid], key=lambda r: r.month))
        for tid in sorted(grouped)
    }


def write_zonal_csv(path: Path, records: Iterable[ZonalRecord]) -> Path:
    """Rows sorted by (tract_id, year, month); absent statistics left empty"""
    rows = [
        (r.tract_id, r.month.year, r.month.month, r.mean, r.std, r.min, r.max, r.valid_count, r.total_count)
        for r in sorted(records, key=lambda r: (r.tract_id, r.month))
    ]
    frame = pd.DataFrame(rows, columns=ZONAL_COLUMNS)
    for col in ("mean", "std", "min", "max"):
        frame[col] = frame[col].astype("float64")
    return write_table(frame, path)


def read_zonal_csv(path: Path) -> list[ZonalRecord]:
    frame = read_table(path, ZONAL_COLUMNS, dtype={"tract_id": "str"})
    records = []
    for lineno, row in enumerate(frame.itertuples(index=False), start=2):
        try:
            month = MonthKey(int(row.year), int(row.month))
        except ValueError as e:
            raise FormatError(str(e), path, f"line {lineno}") from e
        stats = [None if pd.isna(v) else float(v) for v in (row.mean, row.std, row.min, row.max)]
        valid_count, total_count = int(row.valid_count), int(row.total_count)
        if not 0 <= valid_count <= total_count:
            msg = f"valid_count {valid_count} not within 0..{total_count}"
            raise FormatError(msg, path, f"line {lineno}")
        if (valid_count > 0) == any(s is None for s in stats):
            msg = "statistics must be present exactly when valid_count > 0"
            raise FormatError(msg, path, f"line {lineno}")
        records.append(ZonalRecord(row.tract_id, month, *stats, valid_count, total_count))
    return records
