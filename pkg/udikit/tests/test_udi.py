"""
Test suite for UDI computation and baseline change
"""

import numpy as np
import pytest

from udikit.core.classify import ImperviousMap, MapKind
from udikit.core.months import MonthKey
from udikit.core.raster import CombineMode, GridGeometry, Raster
from udikit.core.udi import BASELINE_TAG, UdiRaster, brightness_on_grid, compute_udi, prestorm_baseline, udi_change
from udikit.utils.errors import DataError

SEPT = MonthKey(2017, 9)


class TestComputeUdi:
    """Test UDI = i x B"""

    def test_range_and_maximum(self):
        """Fully built and saturated pixels reach 1000"""
        grid = GridGeometry(10, 11, 0.0, 11.0, 1.0)
        imp = np.tile(np.arange(1, 11, dtype=np.float64), (11, 1))
        bright = np.tile(np.linspace(0.0, 100.0, 11)[:, None], (1, 10))
        udi = compute_udi(ImperviousMap(Raster(grid, imp)), Raster(grid, bright), SEPT)
        values = udi.raster.valid_values()
        assert values.min() == 0.0
        assert values.max() == 1000.0
        assert udi.raster.samples[10, 9] == 1000.0
        assert udi.month == SEPT

    def test_dark_pixel_is_valid_zero(self, small_grid):
        """B = 0 is a valid UDI of 0"""
        udi = compute_udi(ImperviousMap(Raster.full(small_grid, 7.0)), Raster.full(small_grid, 0.0), SEPT)
        assert udi.raster.valid.all()
        assert udi.raster.valid_values().max() == 0.0

    def test_invalid_factor(self, small_grid, small_raster):
        """Invalid brightness gives invalid UDI"""
        udi = compute_udi(ImperviousMap(Raster.full(small_grid, 2.0)), small_raster, SEPT)
        assert not udi.raster.valid[1, 2]
        assert udi.raster.samples[2, 3] == 22.0

    def test_negative_radiance_is_unlit(self, small_grid):
        """Sensor noise below zero does not produce negative UDI"""
        samples = np.full((3, 4), 4.0)
        samples[0, 0] = -0.3
        udi = compute_udi(ImperviousMap(Raster.full(small_grid, 5.0)), Raster(small_grid, samples), SEPT)
        assert udi.raster.samples[0, 0] == 0.0
        assert udi.raster.samples[0, 1] == 20.0

    def test_composite_without_month(self, small_grid):
        """Without a month the raster is tagged"""
        udi = compute_udi(ImperviousMap(Raster.full(small_grid, 2.5), MapKind.COMPOSITE), Raster.full(small_grid, 2.0))
        assert udi.month is None
        assert udi.label == "composite"

    def test_negative_udi_rejected(self, small_grid):
        """UdiRaster values are non-negative"""
        with pytest.raises(DataError, match=">= 0"):
            UdiRaster(Raster.full(small_grid, -1.0), SEPT)
        with pytest.raises(ValueError, match="month or a tag"):
            UdiRaster(Raster.full(small_grid, 1.0))


class TestBrightnessOnGrid:
    """Test sharpening to the impervious grid"""

    def test_each_coarse_pixel_covers_a_block(self):
        """A 2x2 coarse grid fills a 4x4 fine grid by blocks"""
        coarse = Raster(GridGeometry(2, 2, 0.0, 4.0, 2.0), np.array([[1.0, 2.0], [3.0, 4.0]]))
        fine = brightness_on_grid(coarse, GridGeometry(4, 4, 0.0, 4.0, 1.0))
        assert fine.samples[0, :2].tolist() == [1.0, 1.0]
        assert fine.samples[3, 3] == 4.0


class TestBaselineAndChange:
    """Test the pre-storm composite and change maps"""

    def _monthly(self, grid, value, month):
        return UdiRaster(Raster.full(grid, value), month)

    def test_baseline_is_mean(self, small_grid):
        """Baseline averages the supplied months"""
        udis = [self._monthly(small_grid, v, MonthKey(2017, m)) for v, m in ((10.0, 3), (20.0, 4), (30.0, 5))]
        baseline = prestorm_baseline(udis)
        assert baseline.tag == BASELINE_TAG
        assert baseline.month is None
        assert baseline.raster.samples[0, 0] == 20.0

    def test_baseline_window(self, small_grid):
        """Months outside the window are rejected"""
        udis = [self._monthly(small_grid, 1.0, MonthKey(2017, 9))]
        with pytest.raises(DataError, match="outside the baseline window"):
            prestorm_baseline(udis, (MonthKey(2017, 3), MonthKey(2017, 8)))

    def test_baseline_empty(self):
        """At least one month is needed"""
        with pytest.raises(DataError):
            prestorm_baseline([])

    def test_change_modes(self, small_grid):
        """Difference and percent change against the baseline"""
        baseline = UdiRaster(Raster.full(small_grid, 40.0), tag=BASELINE_TAG)
        monthly = self._monthly(small_grid, 10.0, SEPT)
        assert udi_change(monthly, baseline).samples[0, 0] == -30.0
        assert udi_change(monthly, baseline, CombineMode.PERCENT_CHANGE).samples[0, 0] == -75.0

    def test_change_rejects_multiply(self, small_grid):
        """Multiplication is not a change"""
        baseline = UdiRaster(Raster.full(small_grid, 1.0), tag=BASELINE_TAG)
        with pytest.raises(ValueError, match="subtract or percent_change"):
            udi_change(self._monthly(small_grid, 1.0, SEPT), baseline, "multiply")
