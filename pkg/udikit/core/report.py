"""
SVG charts: per-tract brightness with its forecast, and the island impact curve
"""

import datetime as dt
from collections.abc import Sequence
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from udikit.core.forecast import SeasonalModel, fitted  # noqa: E402
from udikit.core.impact import ImpactSummary  # noqa: E402
from udikit.core.months import MonthKey  # noqa: E402
from udikit.core.zonal import ZonalSeries  # noqa: E402
from udikit.utils.errors import DataError  # noqa: E402
from udikit.utils.file_utils import ensure_directory  # noqa: E402

# Artist ids written into the SVG
OBSERVED_ID = "observed"
STD_BAND_ID = "std-band"
SEASONAL_ID = "seasonal-forecast"
TREND_ID = "trend"
PERSONS_ID = "persons-without-power"
UNCERTAINTY_ID = "uncertainty-band"

_SVG_RC = {
    "svg.hashsalt": "udikit",
    "svg.fonttype": "none",
    "figure.figsize": (10, 5),
}


def _date(month: MonthKey) -> dt.date:
    return dt.date(month.year, month.month, 1)


def _save(fig, path: Path) -> Path:
    ensure_directory(path.parent)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def tract_chart(path: Path, series: ZonalSeries, model: SeasonalModel, months: Sequence[MonthKey]) -> Path:
    """
    Observed mean (black points), ±1 std (gray band), seasonal forecast
    (orange) and trend-only line (teal) for one tract
    """
    if not len(series):
        msg = f"tract {series.tract_id} has no observed months"
        raise DataError(msg)

    points = fitted(model, months)
    obs_dates = [_date(r.month) for r in series]
    means = [r.mean for r in series]
    lower = [r.mean - r.std for r in series]
    upper = [r.mean + r.std for r in series]

    with plt.rc_context(_SVG_RC):
        fig, ax = plt.subplots()
        ax.fill_between(obs_dates, lower, upper, color="0.8", label="±1 std", gid=STD_BAND_ID)
        ax.plot(obs_dates, means, "o", color="black", markersize=3, label="observed mean", gid=OBSERVED_ID)
        line_dates = [_date(p.month) for p in points]
        ax.plot(line_dates, [p.forecast for p in points], color="orange", label="seasonal forecast", gid=SEASONAL_ID)
        ax.plot(line_dates, [p.trend for p in points], color="teal", label="linear trend", gid=TREND_ID)
        ax.axvline(_date(model.training_end), color="0.5", linestyle=":", linewidth=1)
        ax.set_title(f"Tract {series.tract_id}")
        ax.set_ylabel("mean brightness")
        ax.legend(loc="upper left")
        fig.autofmt_xdate()
        return _save(fig, path)


def impact_chart(path: Path, summaries: Sequence[ImpactSummary]) -> Path:
    """Island persons without power per month with its uncertainty band"""
    if not summaries:
        msg = "no impact summaries to chart"
        raise DataError(msg)

    ordered = sorted(summaries, key=lambda s: s.month)
    dates = [_date(s.month) for s in ordered]
    persons = [s.persons_without_power for s in ordered]
    band = [s.persons_uncertainty for s in ordered]

    with plt.rc_context(_SVG_RC):
        fig, ax = plt.subplots()
        ax.fill_between(
            dates,
            [max(0.0, p - u) for p, u in zip(persons, band, strict=True)],
            [p + u for p, u in zip(persons, band, strict=True)],
            color="0.8",
            label="uncertainty",
            gid=UNCERTAINTY_ID,
        )
        ax.plot(dates, persons, "o-", color="black", label="persons without power", gid=PERSONS_ID)
        ax.set_ylabel("persons")
        ax.set_title("Estimated persons without power")
        ax.legend(loc="upper right")
        fig.autofmt_xdate()
        return _save(fig, path)
