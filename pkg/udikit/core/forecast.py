"""
Seasonal decomposition forecast of tract brightness

Per tract: a 5-month centered moving average, per-calendar-month seasonal
components, a linear trend fitted to the deseasonalized series and a
mean-absolute-deviation band. The fitted line is projected past the
training window and compared with what was actually observed.
"""

import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from loguru import logger

from udikit.core.months import MONTH_NAMES, MonthKey
from udikit.core.zonal import ZonalSeries
from udikit.utils.errors import DataError, FormatError, InsufficientHistoryError
from udikit.utils.file_utils import read_table, write_table
from udikit.utils.logging_config import error_handler

CMA_WINDOW = 5
MIN_HISTORY = 24

SEASONAL_COLUMNS = [f"s{m}" for m in range(1, 13)]
MODEL_COLUMNS = ["tract_id", "slope", "intercept", "mad", *SEASONAL_COLUMNS]
SHORTFALL_COLUMNS = ["tract_id", "year", "month", "observed", "forecast", "shortfall_raw", "shortfall", "significant"]
LINE_COLUMNS = ["tract_id", "year", "month", "forecast", "trend", "in_sample"]


def centered_moving_average(months: Sequence[MonthKey], values: np.ndarray) -> np.ndarray:
    """
    5-month centered mean at each position; NaN unless all five calendar
    months around it are present
    """
    half = CMA_WINDOW // 2
    by_ordinal = {m.ordinal: float(v) for m, v in zip(months, values, strict=True)}
    out = np.full(len(months), np.nan)
    for i, month in enumerate(months):
        window = [by_ordinal.get(month.ordinal + k) for k in range(-half, half + 1)]
        if all(v is not None for v in window):
            out[i] = math.fsum(window) / CMA_WINDOW
    return out


@dataclass(frozen=True, eq=False)
class DecompSeries:
    """Training-window observations with their CMA and irregular components"""

    tract_id: str
    months: tuple[MonthKey, ...]
    observed: np.ndarray
    cma: np.ndarray  # NaN where undefined
    irregular: np.ndarray  # NaN where undefined
    training_start: MonthKey
    training_end: MonthKey

    @property
    def defined(self) -> np.ndarray:
        return ~np.isnan(self.cma)

    @property
    def calendar(self) -> np.ndarray:
        """Zero-based calendar month of each position"""
        return np.array([m.month - 1 for m in self.months], dtype=np.int64)

    @property
    def index(self) -> np.ndarray:
        """Month steps since the training start"""
        return np.array([m.steps_since(self.training_start) for m in self.months], dtype=np.float64)


def decompose(series: ZonalSeries, training: tuple[MonthKey, MonthKey]) -> DecompSeries:
    """
    CMA decomposition of the series restricted to the training window

    Raises:
        InsufficientHistoryError: fewer than 24 months present in the window
        DataError: months not strictly increasing
    """
    start, end = training
    months: list[MonthKey] = []
    values: list[float] = []
    for record in series:
        if months and record.month <= months[-1]:
            msg = f"tract {series.tract_id}: months out of order at {record.month}"
            raise DataError(msg)
        if start <= record.month <= end and record.mean is not None:
            months.append(record.month)
            values.append(float(record.mean))

    if len(months) < MIN_HISTORY:
        raise InsufficientHistoryError(
            f"insufficient history: tract {series.tract_id} has {len(months)} of {MIN_HISTORY} months"
        )

    observed = np.array(values)
    cma = centered_moving_average(months, observed)
    return DecompSeries(series.tract_id, tuple(months), observed, cma, observed - cma, start, end)


@dataclass(frozen=True)
class SeasonalModel:
    """Linear trend plus twelve zero-mean seasonal components (January first)"""

    tract_id: str
    slope: float
    intercept: float
    seasonal: tuple[float, ...]
    mad: float
    training_start: MonthKey
    training_end: MonthKey
    passes: int = 1

    def __post_init__(self):
        if len(self.seasonal) != 12:
            msg = "seasonal must have 12 components"
            raise ValueError(msg)
        if not self.mad >= 0:
            msg = f"mad must be >= 0, got {self.mad}"
            raise ValueError(msg)

    def index(self, month: MonthKey) -> int:
        return month.steps_since(self.training_start)

    def trend(self, month: MonthKey) -> float:
        return self.intercept + self.slope * self.index(month)

    def value(self, month: MonthKey) -> float:
        return self.trend(month) + self.seasonal[month.month - 1]


def _calendar_means(irregular: np.ndarray, calendar: np.ndarray, tract_id: str) -> np.ndarray:
    means = np.empty(12)
    for m in range(12):
        sel = irregular[calendar == m]
        sel = sel[~np.isnan(sel)]
        if sel.size == 0:
            msg = f"tract {tract_id}: no irregular support for {MONTH_NAMES[m]}"
            raise DataError(msg)
        means[m] = math.fsum(sel.tolist()) / sel.size
    return means - math.fsum(means.tolist()) / 12


def _ols(x: np.ndarray, z: np.ndarray) -> tuple[float, float]:
    n = x.size
    x_bar = math.fsum(x.tolist()) / n
    z_bar = math.fsum(z.tolist()) / n
    dx = x - x_bar
    sxx = math.fsum((dx * dx).tolist())
    slope = math.fsum((dx * (z - z_bar)).tolist()) / sxx if sxx > 0 else 0.0
    return slope, z_bar - slope * x_bar


def fit(decomp: DecompSeries, passes: int = 400, tolerance: float = 1e-12) -> SeasonalModel:
    """
    Fit seasonal components, trend and MAD

    The first pass takes per-calendar-month means of the CMA irregulars.
    Each further pass decomposes the deseasonalized series again and adds
    the new means to the components, stopping once the largest increment
    is within ``tolerance`` of the series scale. The trend is the ordinary
    least-squares line of the deseasonalized observations on month index.

    Raises:
        DataError: a calendar month without irregular support
    """
    if passes < 1:
        msg = f"Invalid passes: {passes}"
        raise ValueError(msg)

    calendar = decomp.calendar
    months = list(decomp.months)
    observed = decomp.observed
    scale = max(1.0, math.fsum(np.abs(observed).tolist()) / observed.size)

    seasonal = _calendar_means(decomp.irregular, calendar, decomp.tract_id)
    used = 1
    while used < passes:
        adjusted = observed - seasonal[calendar]
        increment = _calendar_means(adjusted - centered_moving_average(months, adjusted), calendar, decomp.tract_id)
        seasonal = seasonal + increment
        used += 1
        if np.abs(increment).max() <= tolerance * scale:
            break
    else:
        if passes > 1:
            logger.debug(f"tract {decomp.tract_id}: seasonal refinement stopped at {passes} passes")
    seasonal = seasonal - math.fsum(seasonal.tolist()) / 12

    x = decomp.index
    slope, intercept = _ols(x, observed - seasonal[calendar])
    residual = observed - (intercept + slope * x + seasonal[calendar])
    mad = math.fsum(np.abs(residual).tolist()) / residual.size

    return SeasonalModel(
        decomp.tract_id,
        float(slope),
        float(intercept),
        tuple(float(s) for s in seasonal),
        float(mad),
        decomp.training_start,
        decomp.training_end,
        used,
    )


def fit_all(
    series: Mapping[str, ZonalSeries],
    training: tuple[MonthKey, MonthKey],
    passes: int = 400,
    tolerance: float = 1e-12,
) -> tuple[dict[str, SeasonalModel], dict[str, str]]:
    """Fit every tract; tracts that cannot be fitted are returned with the reason"""
    models: dict[str, SeasonalModel] = {}
    skipped: dict[str, str] = {}
    for tract_id in sorted(series):
        try:
            models[tract_id] = fit(decompose(series[tract_id], training), passes, tolerance)
        except DataError as e:
            error_handler.log_warning(f"tract {tract_id} not fitted: {e}", context="forecast")
            skipped[tract_id] = str(e)
    return models, skipped


def project(model: SeasonalModel, months: Iterable[MonthKey]) -> dict[MonthKey, float]:
    """
    Seasonal forecast for months after the training window

    Raises:
        DataError: a month inside or before the training window
    """
    out: dict[MonthKey, float] = {}
    for month in months:
        if month <= model.training_end:
            msg = f"forecast month {month} precedes training end {model.training_end}"
            raise DataError(msg)
        out[month] = model.value(month)
    return out


def trend_only(model: SeasonalModel, months: Iterable[MonthKey]) -> dict[MonthKey, float]:
    return {m: model.trend(m) for m in months}


@dataclass(frozen=True)
class ForecastPoint:
    month: MonthKey
    forecast: float
    trend: float
    in_sample: bool


def fitted(model: SeasonalModel, months: Iterable[MonthKey]) -> list[ForecastPoint]:
    """Seasonal and trend-only lines over any months, in-sample ones flagged"""
    return [
        ForecastPoint(m, model.value(m), model.trend(m), m <= model.training_end)
        for m in sorted(months)
    ]


@dataclass(frozen=True)
class ShortfallRecord:
    """Observed against forecast brightness for one tract-month"""

    tract_id: str
    month: MonthKey
    observed: float | None
    forecast: float
    shortfall_raw: float | None
    shortfall: float | None
    significant: bool | None
    mad: float = 0.0

    @property
    def degenerate(self) -> bool:
        return not self.forecast > 0

    @property
    def usable(self) -> bool:
        """Counts toward impact aggregation"""
        return self.observed is not None and not self.degenerate


def shortfall(
    model: SeasonalModel,
    forecasts: Mapping[MonthKey, float],
    observed: ZonalSeries,
    multiplier: float = 1.0,
) -> list[ShortfallRecord]:
    """
    Relative brightness shortfall per forecast month

    shortfall_raw = (forecast - observed) / forecast; shortfall clamps it to
    [0, 1]. A month is significant when |forecast - observed| exceeds
    ``multiplier`` x MAD. Masked months carry no observed value; months with
    a forecast <= 0 are degenerate and carry no shortfall.
    """
    records = []
    for month in sorted(forecasts):
        f = float(forecasts[month])
        rec = observed.get(month)
        obs = None if rec is None or rec.mean is None else float(rec.mean)
        if obs is None or not f > 0:
            if not f > 0:
                logger.warning(f"tract {model.tract_id} {month}: degenerate forecast {f}")
            records.append(ShortfallRecord(model.tract_id, month, obs, f, None, None, None, model.mad))
            continue
        raw = (f - obs) / f
        records.append(
            ShortfallRecord(
                model.tract_id,
                month,
                obs,
                f,
                raw,
                min(max(raw, 0.0), 1.0),
                abs(f - obs) > multiplier * model.mad,
                model.mad,
            )
        )
    return records


def recovery_month(records: Sequence[ShortfallRecord], onset: MonthKey) -> MonthKey | None:
    """
    First month at or after ``onset`` from which no observed month is
    significant; None if the last observed month is still significant
    """
    observed = sorted((r for r in records if r.month >= onset and r.significant is not None), key=lambda r: r.month)
    if not observed:
        return None
    recovered = None
    for record in reversed(observed):
        if record.significant:
            break
        recovered = record.month
    return recovered


# ----------------------------------------------------------------- CSV


def write_models(path: Path, models: Iterable[SeasonalModel]) -> Path:
    rows = [
        (m.tract_id, m.slope, m.intercept, m.mad, *m.seasonal)
        for m in sorted(models, key=lambda m: m.tract_id)
    ]
    return write_table(pd.DataFrame(rows, columns=MODEL_COLUMNS), path)


def read_models(path: Path, training: tuple[MonthKey, MonthKey]) -> dict[str, SeasonalModel]:
    """Models CSV; the training window is not stored and must be supplied"""
    frame = read_table(path, MODEL_COLUMNS, dtype={"tract_id": "str"})
    models = {}
    for lineno, row in enumerate(frame.itertuples(index=False), start=2):
        values = list(row)
        try:
            numbers = [float(v) for v in values[1:]]
            if not all(math.isfinite(v) for v in numbers):
                msg = "non-finite model parameter"
                raise ValueError(msg)
            models[values[0]] = SeasonalModel(
                values[0], numbers[0], numbers[1], tuple(numbers[3:]), numbers[2], training[0], training[1]
            )
        except (TypeError, ValueError) as e:
            raise FormatError(str(e), path, f"line {lineno}") from e
    return models


def _flag(value: bool | None) -> str:
    return "" if value is None else str(value).lower()


def write_shortfall_csv(path: Path, records: Iterable[ShortfallRecord]) -> Path:
    rows = [
        (r.tract_id, r.month.year, r.month.month, r.observed, r.forecast, r.shortfall_raw, r.shortfall, _flag(r.significant))
        for r in sorted(records, key=lambda r: (r.tract_id, r.month))
    ]
    frame = pd.DataFrame(rows, columns=SHORTFALL_COLUMNS)
    for col in ("observed", "forecast", "shortfall_raw", "shortfall"):
        frame[col] = frame[col].astype("float64")
    return write_table(frame, path)


def read_shortfall_csv(path: Path, models: Mapping[str, SeasonalModel] | None = None) -> list[ShortfallRecord]:
    """Shortfall CSV; MAD is taken from ``models`` when given"""
    frame = read_table(path, SHORTFALL_COLUMNS, dtype={"tract_id": "str", "significant": "str"})
    records = []
    for lineno, row in enumerate(frame.itertuples(index=False), start=2):
        try:
            month = MonthKey(int(row.year), int(row.month))
        except ValueError as e:
            raise FormatError(str(e), path, f"line {lineno}") from e
        flag = "" if pd.isna(row.significant) else str(row.significant).strip().lower()
        if flag not in ("", "true", "false"):
            msg = f"significant must be true, false or empty, got {row.significant!r}"
            raise FormatError(msg, path, f"line {lineno}")
        model = (models or {}).get(row.tract_id)
        records.append(
            ShortfallRecord(
                row.tract_id,
                month,
                None if pd.isna(row.observed) else float(row.observed),
                float(row.forecast),
                None if pd.isna(row.shortfall_raw) else float(row.shortfall_raw),
                None if pd.isna(row.shortfall) else float(row.shortfall),
                None if flag == "" else flag == "true",
                model.mad if model is not None else 0.0,
            )
        )
    return records


def write_lines_csv(path: Path, models: Iterable[SeasonalModel], months: Sequence[MonthKey]) -> Path:
    """Seasonal and trend-only lines of every model over ``months``"""
    rows = [
        (m.tract_id, p.month.year, p.month.month, p.forecast, p.trend, _flag(p.in_sample))
        for m in sorted(models, key=lambda m: m.tract_id)
        for p in fitted(m, months)
    ]
    return write_table(pd.DataFrame(rows, columns=LINE_COLUMNS), path)
