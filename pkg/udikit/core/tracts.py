"""
Census tract polygons with population and building attributes
"""

import json
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from udikit.utils.errors import DataError, FormatError
from udikit.utils.file_utils import read_table, write_text_file, write_table

CENSUS_COLUMNS = ["tract_id", "population", "building_count"]
REQUIRED_PROPERTIES = ("tract_id", "population", "building_count")


def _as_ring(vertices: Any) -> np.ndarray:
    ring = np.asarray(vertices, dtype=np.float64)
    if ring.ndim != 2 or ring.shape[1] != 2:
        msg = "ring vertices must be (x, y) pairs"
        raise ValueError(msg)
    # GeoJSON rings repeat the first vertex; rings here are implicitly closed
    if len(ring) > 1 and np.array_equal(ring[0], ring[-1]):
        ring = ring[:-1]
    if len(ring) < 3:
        msg = f"degenerate ring with {len(ring)} vertices"
        raise ValueError(msg)
    if not np.isfinite(ring).all():
        msg = "ring coordinates must be finite"
        raise ValueError(msg)
    return ring


@dataclass(frozen=True, eq=False)
class TractPolygon:
    """One outer ring plus optional holes, in planar meters"""

    tract_id: str
    rings: tuple[np.ndarray, ...]
    population: float
    building_count: float

    def __post_init__(self):
        if not self.tract_id:
            msg = "tract_id must be non-empty"
            raise ValueError(msg)
        if not self.rings:
            msg = f"tract {self.tract_id}: no rings"
            raise ValueError(msg)
        object.__setattr__(self, "rings", tuple(_as_ring(r) for r in self.rings))
        if not (np.isfinite(self.population) and self.population >= 0):
            msg = f"tract {self.tract_id}: population must be >= 0"
            raise ValueError(msg)
        if not (np.isfinite(self.building_count) and self.building_count >= 0):
            msg = f"tract {self.tract_id}: building_count must be >= 0"
            raise ValueError(msg)

    @classmethod
    def rectangle(cls, tract_id: str, x0: float, y0: float, x1: float, y1: float,
                  population: float = 0.0, building_count: float = 0.0) -> "TractPolygon":
        """Axis-aligned rectangle tract"""
        ring = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
        return cls(tract_id, (np.array(ring),), population, building_count)

    @property
    def outer(self) -> np.ndarray:
        return self.rings[0]

    @property
    def holes(self) -> tuple[np.ndarray, ...]:
        return self.rings[1:]

    def translated(self, dx: float, dy: float) -> "TractPolygon":
        offset = np.array([dx, dy])
        return replace(self, rings=tuple(r + offset for r in self.rings))

    def ring_key(self) -> bytes:
        """Stable byte key of the geometry, for caching"""
        return b"|".join(np.ascontiguousarray(r).tobytes() for r in self.rings)

    def to_feature(self) -> dict[str, Any]:
        coords = [[*map(list, r.tolist()), list(r[0].tolist())] for r in self.rings]
        return {
            "type": "Feature",
            "properties": {
                "tract_id": self.tract_id,
                "population": _json_number(self.population),
                "building_count": _json_number(self.building_count),
            },
            "geometry": {"type": "Polygon", "coordinates": coords},
        }


def _json_number(value: float) -> int | float:
    return int(value) if float(value).is_integer() else float(value)


def _feature_label(index: int, feature: Any) -> str:
    tid = None
    if isinstance(feature, dict):
        tid = (feature.get("properties") or {}).get("tract_id")
    return f"feature {index}" + (f" ({tid})" if tid is not None else "")


def parse_tracts(collection: Any, path: Path | None = None) -> list[TractPolygon]:
    """Parse a GeoJSON FeatureCollection of Polygon tracts"""
    if not isinstance(collection, dict) or collection.get("type") != "FeatureCollection":
        msg = "expected a GeoJSON FeatureCollection"
        raise FormatError(msg, path)

    tracts: list[TractPolygon] = []
    seen: set[str] = set()
    for index, feature in enumerate(collection.get("features") or []):
        label = _feature_label(index, feature)
        if not isinstance(feature, dict):
            msg = f"{label}: not a feature object"
            raise DataError(msg)
        props = feature.get("properties") or {}
        for key in REQUIRED_PROPERTIES:
            if key not in props or props[key] is None:
                msg = f"{label}: missing property {key!r}"
                raise DataError(msg)
        geometry = feature.get("geometry") or {}
        if geometry.get("type") != "Polygon":
            msg = f"{label}: geometry type {geometry.get('type')!r} is not Polygon"
            raise DataError(msg)

        tract_id = str(props["tract_id"])
        if tract_id in seen:
            msg = f"{label}: duplicate tract_id {tract_id!r}"
            raise DataError(msg)
        seen.add(tract_id)

        try:
            tract = TractPolygon(
                tract_id,
                tuple(geometry.get("coordinates") or ()),
                float(props["population"]),
                float(props["building_count"]),
            )
        except (TypeError, ValueError) as e:
            msg = f"{label}: {e}"
            raise DataError(msg) from e
        tracts.append(tract)
    return tracts


def read_tracts(path: Path | str) -> list[TractPolygon]:
    """Read tract polygons from a GeoJSON file"""
    path = Path(path)
    try:
        with path.open(encoding="utf-8") as f:
            collection = json.load(f)
    except FileNotFoundError as e:
        msg = "file not found"
        raise FormatError(msg, path) from e
    except json.JSONDecodeError as e:
        raise FormatError(e.msg, path, f"line {e.lineno}") from e
    return parse_tracts(collection, path)


def write_tracts(path: Path, tracts: Iterable[TractPolygon]) -> Path:
    collection = {"type": "FeatureCollection", "features": [t.to_feature() for t in tracts]}
    write_text_file(path, json.dumps(collection, indent=1) + "\n")
    return path


def write_census_csv(path: Path, tracts: Iterable[TractPolygon]) -> Path:
    """Export tract attributes as tract_id,population,building_count"""
    rows = sorted(
        ((t.tract_id, _json_number(t.population), _json_number(t.building_count)) for t in tracts),
        key=lambda row: row[0],
    )
    return write_table(pd.DataFrame(rows, columns=CENSUS_COLUMNS), path)


def read_census_csv(path: Path) -> dict[str, tuple[float, float]]:
    frame = read_table(path, CENSUS_COLUMNS, dtype={"tract_id": "str"})
    if frame["tract_id"].duplicated().any():
        dup = frame.loc[frame["tract_id"].duplicated(), "tract_id"].iloc[0]
        msg = f"duplicate tract_id {dup!r}"
        raise FormatError(msg, path)
    return {
        row.tract_id: (float(row.population), float(row.building_count))
        for row in frame.itertuples(index=False)
    }


def join_census(tracts: Sequence[TractPolygon], census: dict[str, tuple[float, float]]) -> list[TractPolygon]:
    """
    Replace tract attributes with census values

    Raises:
        DataError: a tract missing from the census table
    """
    joined = []
    for tract in tracts:
        if tract.tract_id not in census:
            msg = f"tract {tract.tract_id} missing from census table"
            raise DataError(msg)
        population, buildings = census[tract.tract_id]
        joined.append(replace(tract, population=population, building_count=buildings))
    return joined
