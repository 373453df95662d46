"""
Impact estimates and accuracy assessment

Tract shortfalls are weighted by census population and building counts to
estimate persons without power and buildings lost, with a band propagated
from each tract's MAD. A stratified random sample over the impervious
classes supports checking the index against visual interpretation.
"""

import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from loguru import logger

from udikit.core.classify import N_CLASSES, ImperviousMap
from udikit.core.forecast import ShortfallRecord
from udikit.core.months import MonthKey
from udikit.core.raster import Raster
from udikit.core.tracts import TractPolygon
from udikit.core.udi import UdiRaster
from udikit.utils.errors import DataError, FormatError
from udikit.utils.file_utils import read_table, write_table

IMPACT_COLUMNS = [
    "year",
    "month",
    "persons_without_power",
    "persons_uncertainty",
    "persons_fraction",
    "buildings_lost",
    "buildings_uncertainty",
    "buildings_fraction",
    "tracts_included",
    "tracts_excluded",
    "population_excluded",
]
SAMPLE_COLUMNS = ["col", "row", "x", "y", "stratum", "reference", "interpreted"]


# -------------------------------------------------------------- impact


@dataclass(frozen=True)
class ImpactComponent:
    """One weighted aggregate: persons by population or buildings by count"""

    value: float
    uncertainty: float
    fraction: float
    total: float
    tracts_included: int
    tracts_excluded: int
    weight_excluded: float


@dataclass(frozen=True)
class ImpactSummary:
    """Island-wide estimates for one month"""

    month: MonthKey
    persons_without_power: float
    persons_uncertainty: float
    persons_fraction: float
    buildings_lost: float
    buildings_uncertainty: float
    buildings_fraction: float
    tracts_included: int
    tracts_excluded: int
    population_excluded: float


def _as_lookup(tracts: Mapping[str, TractPolygon] | Iterable[TractPolygon]) -> dict[str, TractPolygon]:
    if isinstance(tracts, Mapping):
        return dict(tracts)
    return {t.tract_id: t for t in tracts}


def _single_month(records: Sequence[ShortfallRecord]) -> MonthKey | None:
    months = {r.month for r in records}
    if len(months) > 1:
        msg = f"records span several months: {', '.join(str(m) for m in sorted(months))}"
        raise DataError(msg)
    return next(iter(months), None)


def _aggregate(
    records: Sequence[ShortfallRecord],
    tracts: Mapping[str, TractPolygon] | Iterable[TractPolygon],
    weight_of: str,
) -> ImpactComponent:
    lookup = _as_lookup(tracts)
    _single_month(records)

    seen: set[str] = set()
    terms: list[float] = []
    band: list[float] = []
    excluded_weight: list[float] = []
    for record in records:
        tract = lookup.get(record.tract_id)
        if tract is None:
            msg = f"unknown tract_id {record.tract_id!r}"
            raise DataError(msg)
        if record.tract_id in seen:
            msg = f"duplicate record for tract {record.tract_id} in {record.month}"
            raise DataError(msg)
        seen.add(record.tract_id)

        weight = float(getattr(tract, weight_of))
        if not record.usable:
            excluded_weight.append(weight)
            continue
        terms.append(record.shortfall * weight)
        band.append(record.mad / record.forecast * weight)

    missing = [tid for tid in lookup if tid not in seen]
    excluded_weight.extend(float(getattr(lookup[tid], weight_of)) for tid in missing)

    total = math.fsum(float(getattr(t, weight_of)) for t in lookup.values())
    value = math.fsum(terms)
    return ImpactComponent(
        value=value,
        uncertainty=math.fsum(band),
        fraction=value / total if total > 0 else 0.0,
        total=total,
        tracts_included=len(terms),
        tracts_excluded=len(lookup) - len(terms),
        weight_excluded=math.fsum(excluded_weight),
    )


def persons_without_power(
    records: Sequence[ShortfallRecord],
    tracts: Mapping[str, TractPolygon] | Iterable[TractPolygon],
) -> ImpactComponent:
    """
    Σ shortfall x population over tracts with a usable shortfall

    Tracts that are masked, degenerate or absent from ``records`` are
    excluded and their population reported separately. Uncertainty is
    Σ (mad / forecast) x population; the fraction is over every tract.

    Raises:
        DataError: a record for an unknown tract, or records from several months
    """
    return _aggregate(records, tracts, "population")


def buildings_lost(
    records: Sequence[ShortfallRecord],
    tracts: Mapping[str, TractPolygon] | Iterable[TractPolygon],
) -> ImpactComponent:
    """Same aggregation as persons_without_power, weighted by building count"""
    return _aggregate(records, tracts, "building_count")


def summarize_month(
    month: MonthKey,
    records: Sequence[ShortfallRecord],
    tracts: Mapping[str, TractPolygon] | Iterable[TractPolygon],
) -> ImpactSummary:
    lookup = _as_lookup(tracts)
    records = [r for r in records if r.month == month]
    persons = persons_without_power(records, lookup)
    buildings = buildings_lost(records, lookup)
    if persons.tracts_excluded:
        logger.debug(f"{month}: {persons.tracts_excluded} tracts excluded ({persons.weight_excluded:g} persons)")
    return ImpactSummary(
        month=month,
        persons_without_power=persons.value,
        persons_uncertainty=persons.uncertainty,
        persons_fraction=persons.fraction,
        buildings_lost=buildings.value,
        buildings_uncertainty=buildings.uncertainty,
        buildings_fraction=buildings.fraction,
        tracts_included=persons.tracts_included,
        tracts_excluded=persons.tracts_excluded,
        population_excluded=persons.weight_excluded,
    )


def summarize(
    records: Iterable[ShortfallRecord],
    tracts: Mapping[str, TractPolygon] | Iterable[TractPolygon],
    months: Iterable[MonthKey] | None = None,
) -> list[ImpactSummary]:
    """One summary per month, in month order; months default to those present in ``records``"""
    records = list(records)
    lookup = _as_lookup(tracts)
    wanted = sorted(set(months) if months is not None else {r.month for r in records})
    return [summarize_month(m, records, lookup) for m in wanted]


def write_impact_csv(path: Path, summaries: Iterable[ImpactSummary]) -> Path:
    rows = [
        (
            s.month.year,
            s.month.month,
            s.persons_without_power,
            s.persons_uncertainty,
            s.persons_fraction,
            s.buildings_lost,
            s.buildings_uncertainty,
            s.buildings_fraction,
            s.tracts_included,
            s.tracts_excluded,
            s.population_excluded,
        )
        for s in sorted(summaries, key=lambda s: s.month)
    ]
    return write_table(pd.DataFrame(rows, columns=IMPACT_COLUMNS), path)


def read_impact_csv(path: Path) -> list[ImpactSummary]:
    frame = read_table(path, IMPACT_COLUMNS)
    summaries = []
    for lineno, row in enumerate(frame.itertuples(index=False), start=2):
        try:
            summaries.append(
                ImpactSummary(
                    MonthKey(int(row.year), int(row.month)),
                    float(row.persons_without_power),
                    float(row.persons_uncertainty),
                    float(row.persons_fraction),
                    float(row.buildings_lost),
                    float(row.buildings_uncertainty),
                    float(row.buildings_fraction),
                    int(row.tracts_included),
                    int(row.tracts_excluded),
                    float(row.population_excluded),
                )
            )
        except (TypeError, ValueError) as e:
            raise FormatError(str(e), path, f"line {lineno}") from e
    return summaries


# ------------------------------------------------------------ sampling


@dataclass(frozen=True)
class SamplePoint:
    col: int
    row: int
    x: float
    y: float
    stratum: int
    reference: int
    interpreted: int | None = None


@dataclass(frozen=True)
class AccuracySample:
    """Stratified sample points; interpreted labels filled in externally"""

    points: tuple[SamplePoint, ...]
    seed: int | None = None
    allocation: dict[int, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.points)

    def labeled(self, labels: Sequence[int]) -> "AccuracySample":
        """Copy with interpreted labels assigned in point order"""
        if len(labels) != len(self.points):
            msg = f"expected {len(self.points)} labels, got {len(labels)}"
            raise DataError(msg)
        points = tuple(
            SamplePoint(p.col, p.row, p.x, p.y, p.stratum, p.reference, int(label))
            for p, label in zip(self.points, labels, strict=True)
        )
        return AccuracySample(points, self.seed, dict(self.allocation))


def strata_of(layer: ImperviousMap | UdiRaster) -> Raster:
    """
    Impervious class stratum per valid pixel

    Composite maps round to the nearest class. UDI rasters are binned by
    hundreds, clipped to 1..10.
    """
    raster = layer.raster
    values = np.where(raster.valid, raster.samples, 0.0)
    if isinstance(layer, UdiRaster):
        classes = np.floor(values / 100.0) + 1.0
    else:
        classes = np.floor(values + 0.5)
    classes = np.clip(classes, 1, N_CLASSES)
    return Raster(raster.geometry, np.where(raster.valid, classes, np.nan), raster.valid)


def allocate(counts: Mapping[int, int], n: int) -> dict[int, int]:
    """
    Split n points over non-empty strata

    One point per non-empty stratum is reserved first. The remaining
    n - strata points are shared in proportion to stratum pixel counts:
    each stratum takes the floor of its quota, and the leftover points go
    by largest fractional remainder (ties to the lower stratum). No stratum
    exceeds its pixel count; points that do not fit move on down the same
    remainder order.
    """
    strata = sorted(s for s, c in counts.items() if c > 0)
    total = sum(counts[s] for s in strata)
    if n < len(strata):
        msg = f"sample size {n} is smaller than the {len(strata)} non-empty strata"
        raise DataError(msg)
    if n > total:
        msg = f"sample size {n} exceeds the {total} valid pixels"
        raise DataError(msg)

    rest = n - len(strata)
    quotas = {s: rest * counts[s] / total for s in strata}
    alloc = {s: min(1 + math.floor(quotas[s]), counts[s]) for s in strata}
    order = sorted(strata, key=lambda s: (-(quotas[s] - math.floor(quotas[s])), s))
    leftover = n - sum(alloc.values())
    while leftover > 0:
        for s in order:
            if leftover == 0:
                break
            if alloc[s] < counts[s]:
                alloc[s] += 1
                leftover -= 1
    return alloc


def stratified_sample(layer: ImperviousMap | UdiRaster, n: int, seed: int) -> AccuracySample:
    """
    Stratified random sample of n valid pixels

    Points are drawn without replacement within each stratum from a
    generator seeded with ``seed``; points are ordered by stratum, then row,
    then column.

    Raises:
        DataError: n below the number of non-empty strata or above the valid pixel count
    """
    strata = strata_of(layer)
    labels = np.where(strata.valid, strata.samples, 0).astype(np.int64).ravel()
    counts = {s: int(np.count_nonzero(labels == s)) for s in range(1, N_CLASSES + 1)}
    alloc = allocate(counts, n)

    rng = np.random.default_rng(seed)
    geometry = strata.geometry
    points: list[SamplePoint] = []
    for s in sorted(alloc):
        pool = np.flatnonzero(labels == s)
        chosen = np.sort(rng.choice(pool, size=alloc[s], replace=False))
        for flat in chosen.tolist():
            row, col = divmod(flat, geometry.width)
            x, y = geometry.pixel_center(col, row)
            points.append(SamplePoint(col, row, float(x), float(y), s, s))
    return AccuracySample(tuple(points), seed, alloc)


@dataclass(frozen=True, eq=False)
class AccuracyReport:
    """Overall accuracy, confusion matrix (rows reference, columns interpreted) and per-class rates"""

    overall: float
    confusion: np.ndarray
    producers: dict[int, float | None]
    users: dict[int, float | None]

    @property
    def total(self) -> int:
        return int(self.confusion.sum())


def accuracy(sample: AccuracySample) -> AccuracyReport:
    """
    Compare reference labels with interpreted labels

    Producer's accuracy of a class is its diagonal count over the points
    interpreted as that class; user's accuracy is over the points
    referenced as that class.

    Raises:
        DataError: an unlabeled point or a label outside 1..10
    """
    if not sample.points:
        msg = "sample has no points"
        raise DataError(msg)
    confusion = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    for i, p in enumerate(sample.points):
        if p.interpreted is None:
            msg = f"point {i} (col={p.col}, row={p.row}) has no interpreted label"
            raise DataError(msg)
        for label in (p.reference, p.interpreted):
            if not 1 <= label <= N_CLASSES:
                msg = f"point {i}: label {label} outside 1..{N_CLASSES}"
                raise DataError(msg)
        confusion[p.reference - 1, p.interpreted - 1] += 1

    diagonal = np.diag(confusion)
    interpreted_totals = confusion.sum(axis=0)
    reference_totals = confusion.sum(axis=1)
    producers = {
        c: (float(diagonal[c - 1] / interpreted_totals[c - 1]) if interpreted_totals[c - 1] else None)
        for c in range(1, N_CLASSES + 1)
    }
    users = {
        c: (float(diagonal[c - 1] / reference_totals[c - 1]) if reference_totals[c - 1] else None)
        for c in range(1, N_CLASSES + 1)
    }
    return AccuracyReport(float(diagonal.sum() / confusion.sum()), confusion, producers, users)


def write_sample(path: Path, sample: AccuracySample) -> Path:
    frame = pd.DataFrame(
        [(p.col, p.row, p.x, p.y, p.stratum, p.reference, p.interpreted) for p in sample.points],
        columns=SAMPLE_COLUMNS,
    )
    frame["interpreted"] = frame["interpreted"].astype("Int64")
    return write_table(frame, path)


def read_sample(path: Path) -> AccuracySample:
    """Sample CSV, possibly with interpreted labels filled in"""
    frame = read_table(path, SAMPLE_COLUMNS)
    points = []
    for lineno, row in enumerate(frame.itertuples(index=False), start=2):
        try:
            interpreted = None if pd.isna(row.interpreted) else int(row.interpreted)
            if interpreted is not None and interpreted != float(row.interpreted):
                msg = f"non-integer label {row.interpreted}"
                raise ValueError(msg)
            points.append(
                SamplePoint(int(row.col), int(row.row), float(row.x), float(row.y),
                            int(row.stratum), int(row.reference), interpreted)
            )
        except (TypeError, ValueError) as e:
            raise FormatError(str(e), path, f"line {lineno}") from e
    allocation: dict[int, int] = {}
    for p in points:
        allocation[p.stratum] = allocation.get(p.stratum, 0) + 1
    return AccuracySample(tuple(points), None, dict(sorted(allocation.items())))


def write_accuracy_csv(path: Path, report: AccuracyReport) -> Path:
    """
    One row per reference class with its confusion counts, producer's and
    user's accuracy; a leading 'overall' row carries the overall accuracy
    """
    columns = ["class", "producers", "users", *[f"interpreted_{c}" for c in range(1, N_CLASSES + 1)]]
    rows: list[tuple] = [("overall", report.overall, report.overall, *([None] * N_CLASSES))]
    for c in range(1, N_CLASSES + 1):
        rows.append((str(c), report.producers[c], report.users[c], *report.confusion[c - 1].tolist()))
    frame = pd.DataFrame(rows, columns=columns)
    for col in columns[3:]:
        frame[col] = frame[col].astype("Int64")
    for col in ("producers", "users"):
        frame[col] = frame[col].astype("float64")
    return write_table(frame, path)
