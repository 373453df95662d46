"""
Deterministic synthetic scenarios with known ground truth

A scenario is a rectangular tessellation of tracts over a fine grid, a
reference percent-impervious map, multiband images before and after the
storm, monthly radiance/observation composites on a coarse grid, and a
manifest of the true outage per tract and month.

Randomness comes from independent generators seeded with (seed, stream),
so changing the number of draws in one stream leaves the others intact.
"""

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Annotated, Any

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from udikit.core.classify import N_CLASSES
from udikit.core.layout import EPOCHS, DatasetLayout
from udikit.core.months import MonthKey, month_range
from udikit.core.raster import BAND_NAMES, GridGeometry, Raster
from udikit.core.raster_io import FORMATS, write_raster
from udikit.core.tracts import TractPolygon, write_census_csv, write_tracts
from udikit.utils.config import read_key_value_file
from udikit.utils.errors import DataError, FormatError
from udikit.utils.file_utils import ensure_directory, read_table, write_table

MANIFEST_COLUMNS = ["tract_id", "year", "month", "true_brightness", "outage_fraction", "persons_out", "buildings_lost"]
ISLAND_COLUMNS = [
    "year",
    "month",
    "persons_out",
    "buildings_lost",
    "population",
    "building_count",
    "persons_fraction",
    "buildings_fraction",
]

STREAMS = {"reference": 1, "spectra": 2, "brightness": 3, "clouds": 4}

_SEASONAL_SHAPE = tuple(round(math.sin(2 * math.pi * m / 12), 12) for m in range(1, 13))

Fraction = Annotated[float, Field(ge=0.0, le=1.0)]
NonNegative = Annotated[float, Field(ge=0.0)]

_LIST_FIELDS = (
    "population",
    "building_count",
    "base_brightness",
    "trend_slope",
    "seasonal_amplitude",
    "seasonal_shape",
    "outage",
    "bands",
    "spectral_base",
)


class ScenarioConfig(BaseModel):
    """Synthetic scenario parameters; per-tract lists hold one value or one per tract"""

    model_config = ConfigDict(frozen=True, extra="forbid", arbitrary_types_allowed=True)

    seed: int = 0

    # Fine grid
    width: int = Field(64, gt=0)
    height: int = Field(64, gt=0)
    pixel_size: float = Field(30.0, gt=0)
    x_origin: float = 200000.0
    y_origin: float = 2000000.0
    viirs_factor: int = Field(4, gt=0)
    raster_format: str = "asc"

    # Tracts
    tracts_x: int = Field(2, gt=0)
    tracts_y: int = Field(2, gt=0)
    tract_id_start: int = 9501
    population: list[NonNegative] = [4000.0]
    building_count: list[NonNegative] = [1200.0]

    # Spectra
    bands: list[str] = list(BAND_NAMES)
    spectral_base: list[float] = [0.04, 0.06, 0.08, 0.20, 0.16, 0.12]
    spectral_step: float = Field(0.02, gt=0)
    spectral_noise: NonNegative = 0.0
    images_per_epoch: int = Field(2, gt=0)

    # Brightness model
    start_month: MonthKey = MonthKey(2012, 4)
    end_month: MonthKey = MonthKey(2018, 5)
    base_brightness: list[float] = [20.0]
    trend_slope: list[float] = [0.05]
    seasonal_amplitude: list[NonNegative] = [2.0]
    seasonal_shape: list[float] = list(_SEASONAL_SHAPE)
    brightness_noise: NonNegative = 0.0
    cloud_probability: Fraction = 0.0
    max_observations: int = Field(20, gt=0)

    # Storm
    storm_onset: MonthKey = MonthKey(2017, 9)
    outage: list[Fraction] = [0.0]
    recovery_rate: NonNegative = 0.0

    @field_validator(*_LIST_FIELDS, mode="before")
    @classmethod
    def split_list(cls, value: Any) -> Any:
        if isinstance(value, str):
            return [v.strip() for v in value.split(",") if v.strip()]
        return value

    @field_validator("start_month", "end_month", "storm_onset", mode="before")
    @classmethod
    def parse_month(cls, value: Any) -> MonthKey:
        return MonthKey.parse(value)

    @field_validator("raster_format")
    @classmethod
    def check_format(cls, value: str) -> str:
        if value not in FORMATS:
            msg = f"raster_format must be one of {', '.join(FORMATS)}"
            raise ValueError(msg)
        return value

    @model_validator(mode="after")
    def check_consistency(self) -> "ScenarioConfig":
        f = self.viirs_factor
        if self.width % (f * self.tracts_x) or self.height % (f * self.tracts_y):
            msg = "grid size must be a multiple of viirs_factor x tract count on each axis"
            raise ValueError(msg)
        n = self.n_tracts
        for name in ("population", "building_count", "base_brightness", "trend_slope", "seasonal_amplitude", "outage"):
            if len(getattr(self, name)) not in (1, n):
                msg = f"{name} needs 1 or {n} values"
                raise ValueError(msg)
        if len(self.seasonal_shape) != 12:
            msg = "seasonal_shape needs 12 values"
            raise ValueError(msg)
        if len(self.spectral_base) != len(self.bands) or len(set(self.bands)) != len(self.bands):
            msg = "spectral_base needs one value per distinct band"
            raise ValueError(msg)
        if self.end_month < self.start_month:
            msg = "end_month precedes start_month"
            raise ValueError(msg)
        if not self.start_month < self.storm_onset <= self.end_month:
            msg = "storm_onset must fall after start_month and not after end_month"
            raise ValueError(msg)
        if self.min_model_brightness() <= 0:
            msg = "brightness model must stay positive"
            raise ValueError(msg)
        return self

    @property
    def n_tracts(self) -> int:
        return self.tracts_x * self.tracts_y

    @property
    def geometry(self) -> GridGeometry:
        return GridGeometry(self.width, self.height, self.x_origin, self.y_origin, self.pixel_size)

    @property
    def viirs_geometry(self) -> GridGeometry:
        f = self.viirs_factor
        return GridGeometry(self.width // f, self.height // f, self.x_origin, self.y_origin, self.pixel_size * f)

    @property
    def months(self) -> list[MonthKey]:
        return month_range(self.start_month, self.end_month)

    def per_tract(self, name: str) -> np.ndarray:
        values = np.asarray(getattr(self, name), dtype=np.float64)
        return np.broadcast_to(values, (self.n_tracts,)).copy() if values.size == 1 else values

    def model_brightness(self, month: MonthKey) -> np.ndarray:
        """Pre-outage brightness of every tract in a month"""
        t = month.steps_since(self.start_month)
        shape = self.seasonal_shape[month.month - 1]
        return self.per_tract("base_brightness") + self.per_tract("trend_slope") * t + self.per_tract("seasonal_amplitude") * shape

    def min_model_brightness(self) -> float:
        return float(min(self.model_brightness(m).min() for m in self.months))

    def outage_fraction(self, month: MonthKey) -> np.ndarray:
        """Outage of every tract: full at onset, shrinking linearly at recovery_rate per month"""
        if month < self.storm_onset:
            return np.zeros(self.n_tracts)
        k = month.steps_since(self.storm_onset)
        return self.per_tract("outage") * max(0.0, 1.0 - self.recovery_rate * k)


def load_scenario(path: Path, **overrides: Any) -> ScenarioConfig:
    """
    Scenario from a flat ``key = value`` file; keyword overrides win

    Raises:
        FormatError: unreadable file, unknown key or invalid value
    """
    path = Path(path)
    if not path.exists():
        msg = "file not found"
        raise FormatError(msg, path)
    raw: dict[str, Any] = dict(read_key_value_file(path))
    raw.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ScenarioConfig.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(p) for p in first["loc"]) or "scenario"
        raise FormatError(f"{where}: {first['msg']}", path) from e


def class_signatures(config: ScenarioConfig) -> np.ndarray:
    """(N_CLASSES, bands) mean reflectance; class c adds c x step x (band index + 1)"""
    base = np.asarray(config.spectral_base, dtype=np.float64)
    weights = np.arange(1, len(base) + 1, dtype=np.float64)
    classes = np.arange(1, N_CLASSES + 1, dtype=np.float64)
    return base[None, :] + config.spectral_step * classes[:, None] * weights[None, :]


def make_tracts(config: ScenarioConfig) -> list[TractPolygon]:
    """Row-major (north first) rectangles with consecutive numeric ids"""
    g = config.geometry
    tw = g.width // config.tracts_x * g.pixel_size
    th = g.height // config.tracts_y * g.pixel_size
    population = config.per_tract("population")
    buildings = config.per_tract("building_count")
    tracts = []
    for j in range(config.tracts_y):
        for i in range(config.tracts_x):
            k = j * config.tracts_x + i
            x0 = g.x_origin + i * tw
            y1 = g.y_origin - j * th
            tracts.append(
                TractPolygon.rectangle(
                    str(config.tract_id_start + k), x0, y1 - th, x0 + tw, y1, float(population[k]), float(buildings[k])
                )
            )
    return tracts


def tract_index_grid(config: ScenarioConfig) -> np.ndarray:
    """Tract number of every coarse pixel"""
    vg = config.viirs_geometry
    tvw = vg.width // config.tracts_x
    tvh = vg.height // config.tracts_y
    rows = np.arange(vg.height) // tvh
    cols = np.arange(vg.width) // tvw
    return rows[:, None] * config.tracts_x + cols[None, :]


def lit_weights(percent: np.ndarray, factor: int) -> np.ndarray:
    """Mean impervious fraction of the fine pixels under each coarse pixel, floored at 0.1"""
    h, w = percent.shape
    blocks = percent.reshape(h // factor, factor, w // factor, factor) / 100.0
    return np.maximum(0.1, blocks.mean(axis=(1, 3)))


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """Per tract-month truth and its per-month island aggregates"""

    manifest: pd.DataFrame
    island: pd.DataFrame

    def island_row(self, month: MonthKey) -> pd.Series:
        sel = self.island[(self.island["year"] == month.year) & (self.island["month"] == month.month)]
        if sel.empty:
            msg = f"no ground truth for {month}"
            raise DataError(msg)
        return sel.iloc[0]

    def persons_out(self, month: MonthKey) -> float:
        return float(self.island_row(month)["persons_out"])

    def persons_fraction(self, month: MonthKey) -> float:
        return float(self.island_row(month)["persons_fraction"])


def _rng(config: ScenarioConfig, stream: str) -> np.random.Generator:
    return np.random.default_rng([config.seed, STREAMS[stream]])


def _island_table(manifest: pd.DataFrame, tracts: list[TractPolygon]) -> pd.DataFrame:
    population = math.fsum(t.population for t in tracts)
    buildings = math.fsum(t.building_count for t in tracts)
    rows = []
    for (year, month), group in manifest.groupby(["year", "month"], sort=True):
        persons = math.fsum(group["persons_out"].tolist())
        lost = math.fsum(group["buildings_lost"].tolist())
        rows.append(
            (
                int(year),
                int(month),
                persons,
                lost,
                population,
                buildings,
                persons / population if population else 0.0,
                lost / buildings if buildings else 0.0,
            )
        )
    return pd.DataFrame(rows, columns=ISLAND_COLUMNS)


def generate(config: ScenarioConfig, out_dir: Path) -> GroundTruth:
    """
    Write a scenario under ``out_dir`` and return its ground truth

    Identical configs (seed included) produce byte-identical files.
    """
    out_dir = Path(out_dir)
    try:
        ensure_directory(out_dir)
    except OSError as e:
        msg = f"cannot create output directory {out_dir}: {e.strerror}"
        raise DataError(msg) from e
    layout = DatasetLayout(out_dir, raster_format=config.raster_format)
    fmt = config.raster_format
    g = config.geometry
    vg = config.viirs_geometry

    # Reference percent map and its classes
    percent = _rng(config, "reference").integers(0, 101, size=g.shape).astype(np.float64)
    write_raster(out_dir / f"reference_percent.{fmt}", Raster(g, percent))
    classes = np.minimum(np.floor(percent / 10.0) + 1, N_CLASSES).astype(np.int64)

    # Multiband images, one file per band
    signatures = class_signatures(config)
    spectra = _rng(config, "spectra")
    for epoch in EPOCHS:
        for index in range(config.images_per_epoch):
            image_dir = layout.image_dir(epoch, index)
            for bi, band in enumerate(config.bands):
                values = signatures[classes - 1, bi]
                if config.spectral_noise > 0:
                    values = values + spectra.normal(0.0, config.spectral_noise, size=g.shape)
                write_raster(image_dir / f"{band}.{fmt}", Raster(g, values))

    # Tracts and census attributes
    tracts = make_tracts(config)
    write_tracts(layout.tracts, tracts)
    write_census_csv(layout.census, tracts)

    # Monthly radiance and observation counts
    tract_of = tract_index_grid(config)
    weights = lit_weights(percent, config.viirs_factor)
    noise_scale = config.brightness_noise * config.per_tract("base_brightness")[tract_of]
    brightness_rng = _rng(config, "brightness")
    cloud_rng = _rng(config, "clouds")
    population = config.per_tract("population")
    buildings = config.per_tract("building_count")

    rows = []
    for month in config.months:
        model = config.model_brightness(month)
        outage = config.outage_fraction(month)
        truth = weights * (model * (1.0 - outage))[tract_of]
        radiance = truth
        if config.brightness_noise > 0:
            radiance = truth + brightness_rng.normal(0.0, 1.0, size=vg.shape) * noise_scale
        radiance = np.maximum(radiance, 0.0)

        clouded = cloud_rng.random(vg.shape) < config.cloud_probability
        counts = cloud_rng.integers(1, config.max_observations + 1, size=vg.shape).astype(np.float64)
        counts[clouded] = 0.0

        write_raster(out_dir / "viirs" / f"{month}_rad.{fmt}", Raster(vg, radiance))
        write_raster(out_dir / "viirs" / f"{month}_obs.{fmt}", Raster(vg, counts))

        for k, tract in enumerate(tracts):
            rows.append(
                (
                    tract.tract_id,
                    month.year,
                    month.month,
                    math.fsum(truth[tract_of == k].tolist()) / int(np.count_nonzero(tract_of == k)),
                    float(outage[k]),
                    float(outage[k] * population[k]),
                    float(outage[k] * buildings[k]),
                )
            )

    manifest = pd.DataFrame(rows, columns=MANIFEST_COLUMNS).sort_values(["tract_id", "year", "month"], kind="stable")
    manifest = manifest.reset_index(drop=True)
    island = _island_table(manifest, tracts)
    write_table(manifest, layout.manifest)
    write_table(island, layout.island_truth)

    logger.info(
        f"synthetic scenario: {g.width}x{g.height} grid, {len(tracts)} tracts, "
        f"{len(config.months)} months -> {out_dir}"
    )
    return GroundTruth(manifest, island)


def read_ground_truth(layout: DatasetLayout) -> GroundTruth:
    manifest = read_table(layout.manifest, MANIFEST_COLUMNS, dtype={"tract_id": "str"})
    island = read_table(layout.island_truth, ISLAND_COLUMNS)
    return GroundTruth(manifest, island)
