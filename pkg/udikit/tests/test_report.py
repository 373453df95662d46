"""
Test suite for SVG charts
"""

import pytest

from udikit.core.forecast import SeasonalModel
from udikit.core.impact import ImpactSummary
from udikit.core.months import MonthKey, month_range
from udikit.core.report import (
    OBSERVED_ID,
    PERSONS_ID,
    SEASONAL_ID,
    STD_BAND_ID,
    TREND_ID,
    UNCERTAINTY_ID,
    impact_chart,
    tract_chart,
)
from udikit.core.zonal import ZonalSeries
from udikit.utils.errors import DataError

from .conftest import TRAINING, make_series

MONTHS = month_range(MonthKey(2017, 1), MonthKey(2017, 12))


def _model():
    return SeasonalModel("7", 0.1, 20.0, (0.0,) * 12, 1.0, *TRAINING)


def _summary(month, persons):
    return ImpactSummary(month, persons, 50.0, persons / 1000.0, persons / 3, 10.0, persons / 3000.0, 4, 0, 0.0)


class TestTractChart:
    """Test the per-tract chart"""

    def test_artists_present(self, temp_dir):
        """Every series carries its id"""
        series = make_series("7", {m: 20.0 + i for i, m in enumerate(MONTHS[:8])})
        path = tract_chart(temp_dir / "reports" / "tract_7.svg", series, _model(), MONTHS)
        svg = path.read_text()
        for gid in (OBSERVED_ID, STD_BAND_ID, SEASONAL_ID, TREND_ID):
            assert f'id="{gid}"' in svg

    def test_deterministic(self, temp_dir):
        """Same data, same bytes"""
        series = make_series("7", {m: 20.0 for m in MONTHS})
        first = tract_chart(temp_dir / "a.svg", series, _model(), MONTHS).read_bytes()
        second = tract_chart(temp_dir / "b.svg", series, _model(), MONTHS).read_bytes()
        assert first == second

    def test_empty_series(self, temp_dir):
        """Nothing observed, nothing to draw"""
        with pytest.raises(DataError, match="tract 7 has no observed months"):
            tract_chart(temp_dir / "t.svg", ZonalSeries("7", []), _model(), MONTHS)


class TestImpactChart:
    """Test the island impact chart"""

    def test_artists_present(self, temp_dir):
        """Persons curve and its band"""
        summaries = [_summary(MonthKey(2017, 10), 300.0), _summary(MonthKey(2017, 9), 900.0)]
        svg = impact_chart(temp_dir / "impact.svg", summaries).read_text()
        assert f'id="{PERSONS_ID}"' in svg
        assert f'id="{UNCERTAINTY_ID}"' in svg

    def test_empty(self, temp_dir):
        """No summaries is an error"""
        with pytest.raises(DataError, match="no impact summaries"):
            impact_chart(temp_dir / "impact.svg", [])
