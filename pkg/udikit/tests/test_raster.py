"""
Test suite for grid geometry and raster algebra
"""

import numpy as np
import pytest

from udikit.core.raster import (
    CombineMode,
    GridGeometry,
    MultibandRaster,
    Raster,
    combine,
    mean_stack,
    resample_nearest,
)
from udikit.utils.errors import DataError, GridMismatchError, NoOverlapError


class TestGridGeometry:
    """Test GridGeometry"""

    def test_bounds_and_centres(self, small_grid):
        """Upper-left origin, rows counted southwards"""
        assert small_grid.shape == (3, 4)
        assert small_grid.size == 12
        assert small_grid.bounds == (1000.0, 1970.0, 1040.0, 2000.0)
        assert small_grid.pixel_center(0, 0) == (1005.0, 1995.0)
        assert small_grid.pixel_center(3, 2) == (1035.0, 1975.0)

    @pytest.mark.parametrize(("width", "height", "size"), [(0, 3, 1.0), (4, -1, 1.0), (4, 3, 0.0), (4, 3, float("nan"))])
    def test_invalid_geometry(self, width, height, size):
        """Empty grids and non-positive pixels are rejected"""
        with pytest.raises(ValueError, match="Invalid"):
            GridGeometry(width, height, 0.0, 0.0, size)

    def test_overlaps(self, small_grid):
        """Touching extents do not overlap"""
        assert small_grid.overlaps(small_grid.translated(5.0, 5.0))
        assert not small_grid.overlaps(small_grid.translated(40.0, 0.0))


class TestRaster:
    """Test Raster construction and masking"""

    def test_nan_samples_are_invalid(self, small_grid):
        """Without a mask, non-finite samples are invalid"""
        samples = np.ones((3, 4))
        samples[0, 0] = np.nan
        raster = Raster(small_grid, samples)
        assert raster.valid_count == 11
        assert not raster.valid[0, 0]

    def test_valid_flag_on_nan_rejected(self, small_grid):
        """A sample flagged valid must be finite"""
        samples = np.ones((3, 4))
        samples[0, 0] = np.inf
        with pytest.raises(ValueError, match="not finite"):
            Raster(small_grid, samples, np.ones((3, 4), dtype=bool))

    def test_shape_mismatch(self, small_grid):
        """Samples must match the grid"""
        with pytest.raises(ValueError, match="does not match"):
            Raster(small_grid, np.ones((4, 3)))

    def test_equality_ignores_invalid_payload(self, small_raster):
        """Payload under the mask does not matter"""
        other_samples = small_raster.samples.copy()
        other_samples[1, 2] = -123.0
        other = Raster(small_raster.geometry, other_samples, small_raster.valid)
        assert other == small_raster

    def test_multiband_valid_in_every_band(self, small_grid, small_raster):
        """A pixel is valid only if valid in every band"""
        image = MultibandRaster({"red": small_raster, "nir": Raster.full(small_grid, 1.0)})
        assert image.band_names == ("red", "nir")
        assert image.valid.sum() == 11

    def test_multiband_grid_mismatch(self, small_grid, small_raster):
        """Bands must share a grid"""
        with pytest.raises(GridMismatchError):
            MultibandRaster({"red": small_raster, "nir": Raster.full(small_grid.translated(10.0, 0.0), 1.0)})


class TestCombine:
    """Test element-wise combination"""

    def test_multiply_and_subtract(self, small_grid, small_raster):
        """Invalid in either input means invalid output"""
        other = Raster.full(small_grid, 2.0)
        product = combine(small_raster, other, CombineMode.MULTIPLY)
        difference = combine(small_raster, other, "subtract")
        assert product.valid_count == 11
        assert product.samples[2, 3] == 22.0
        assert difference.samples[0, 1] == -1.0
        assert not difference.valid[1, 2]

    def test_percent_change_zero_base(self, small_grid):
        """percent_change is invalid where the base is zero"""
        a = Raster.full(small_grid, 3.0)
        b_samples = np.full((3, 4), 2.0)
        b_samples[0, 0] = 0.0
        result = combine(a, Raster(small_grid, b_samples), CombineMode.PERCENT_CHANGE)
        assert not result.valid[0, 0]
        assert result.samples[1, 1] == 50.0

    def test_grid_mismatch(self, small_grid, small_raster):
        """Grids must be identical"""
        with pytest.raises(GridMismatchError, match="grids not aligned"):
            combine(small_raster, Raster.full(small_grid.translated(0.0, 10.0), 1.0), CombineMode.MULTIPLY)


class TestMeanStack:
    """Test per-pixel mean"""

    def test_mean_over_valid_inputs(self, small_grid):
        """Each pixel averages the inputs valid there"""
        a = Raster.full(small_grid, 1.0)
        b_valid = np.ones((3, 4), dtype=bool)
        b_valid[0, 0] = False
        b = Raster(small_grid, np.full((3, 4), 4.0), b_valid)
        result = mean_stack([a, b])
        assert result.samples[0, 0] == 1.0
        assert result.samples[2, 2] == 2.5
        assert result.valid.all()

    def test_all_invalid_pixel(self, small_grid):
        """Invalid only where every input is invalid"""
        result = mean_stack([Raster.empty(small_grid), Raster.empty(small_grid)])
        assert result.valid_count == 0

    def test_empty_input(self):
        """At least one raster is needed"""
        with pytest.raises(DataError):
            mean_stack([])


class TestResample:
    """Test nearest-centre resampling"""

    def test_coarse_to_fine(self):
        """Each fine pixel takes the coarse pixel containing its centre"""
        coarse = Raster(GridGeometry(2, 2, 0.0, 40.0, 20.0), np.array([[1.0, 2.0], [3.0, 4.0]]))
        fine = resample_nearest(coarse, GridGeometry(4, 4, 0.0, 40.0, 10.0))
        expected = np.array([[1, 1, 2, 2], [1, 1, 2, 2], [3, 3, 4, 4], [3, 3, 4, 4]], dtype=np.float64)
        assert np.array_equal(fine.samples, expected)
        assert fine.valid.all()

    def test_outside_source_is_invalid(self):
        """Target pixels beyond the source extent are invalid"""
        coarse = Raster.full(GridGeometry(1, 1, 0.0, 20.0, 20.0), 5.0)
        fine = resample_nearest(coarse, GridGeometry(4, 2, 0.0, 20.0, 10.0))
        assert fine.valid[:, :2].all()
        assert not fine.valid[:, 2:].any()

    def test_invalid_source_propagates(self):
        """An invalid source pixel yields invalid targets"""
        coarse = Raster(GridGeometry(2, 1, 0.0, 20.0, 20.0), np.array([[1.0, np.nan]]))
        fine = resample_nearest(coarse, GridGeometry(4, 2, 0.0, 20.0, 10.0))
        assert fine.valid_count == 4

    def test_no_overlap(self):
        """Disjoint extents are an error"""
        coarse = Raster.full(GridGeometry(2, 2, 0.0, 40.0, 20.0), 1.0)
        with pytest.raises(NoOverlapError, match="no spatial overlap"):
            resample_nearest(coarse, GridGeometry(2, 2, 1000.0, 40.0, 20.0))
