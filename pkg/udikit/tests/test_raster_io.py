"""
Test suite for raster readers and writers and VIIRS masking
"""

import numpy as np
import pytest

from udikit.core.months import MonthKey
from udikit.core.raster import GridGeometry, Raster
from udikit.core.raster_io import (
    RBIN_HEADER,
    decode_rbin,
    encode_rbin,
    mask_zero_observations,
    read_raster,
    read_viirs_pair,
    write_raster,
)
from udikit.utils.errors import DataError, FormatError, GridMismatchError


class TestRbin:
    """Test the binary container"""

    def test_header_size(self):
        """Fixed 44-byte header"""
        assert RBIN_HEADER.size == 44

    def test_round_trip(self, temp_dir, small_raster):
        """float32-representable samples and the mask survive"""
        path = write_raster(temp_dir / "r.rbin", small_raster)
        assert path.stat().st_size == 44 + 4 * 12
        assert read_raster(path) == small_raster

    def test_truncated_header(self):
        """Short data names the byte offset"""
        with pytest.raises(FormatError, match="byte 10"):
            decode_rbin(b"\x00" * 10)

    def test_bad_magic(self, small_raster):
        """Magic must be UDIR"""
        data = bytearray(encode_rbin(small_raster))
        data[:4] = b"XXXX"
        with pytest.raises(FormatError, match="bad magic"):
            decode_rbin(bytes(data))

    def test_trailing_bytes(self, small_raster):
        """Extra bytes after the samples are rejected"""
        with pytest.raises(FormatError, match="trailing bytes"):
            decode_rbin(encode_rbin(small_raster) + b"\x00")

    def test_truncated_samples(self, small_raster):
        """Missing samples are rejected"""
        with pytest.raises(FormatError, match="truncated sample block"):
            decode_rbin(encode_rbin(small_raster)[:-4])

    def test_valid_sample_equal_to_nodata(self, small_grid):
        """A valid sample may not collide with the sentinel"""
        raster = Raster.full(small_grid, -9999.0)
        with pytest.raises(DataError, match="nodata"):
            encode_rbin(raster)


class TestAsc:
    """Test ESRI ASCII grids"""

    def test_round_trip_is_exact(self, temp_dir):
        """Shortest round-trip floats keep float64 exactly"""
        grid = GridGeometry(3, 2, 500.5, 1000.25, 0.5)
        samples = np.array([[0.1, 1 / 3, np.nan], [2.0, -7.25e-5, 123456.789]])
        raster = Raster(grid, samples)
        path = write_raster(temp_dir / "r.asc", raster)
        again = read_raster(path)
        assert again == raster
        assert again.samples[0, 1] == 1 / 3

    def test_first_line_is_north(self, temp_dir, small_grid):
        """Data rows run from north to south"""
        samples = np.zeros((3, 4))
        samples[0] = 9.0
        write_raster(temp_dir / "r.asc", Raster(small_grid, samples))
        lines = (temp_dir / "r.asc").read_text().splitlines()
        assert lines[0].split() == ["ncols", "4"]
        assert lines[3].split() == ["yllcorner", "1970"]
        assert lines[6] == "9 9 9 9"

    def test_center_headers(self, temp_dir):
        """xllcenter/yllcenter are shifted by half a cell"""
        path = temp_dir / "c.asc"
        path.write_text("ncols 2\nnrows 1\nxllcenter 5\nyllcenter 5\ncellsize 10\nNODATA_value -1\n1 -1\n")
        raster = read_raster(path)
        assert raster.geometry == GridGeometry(2, 1, 0.0, 10.0, 10.0)
        assert raster.valid.tolist() == [[True, False]]

    def test_sample_count_mismatch(self, temp_dir):
        """Too few samples names the last line"""
        path = temp_dir / "bad.asc"
        path.write_text("ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n1 2\n3\n")
        with pytest.raises(FormatError, match="line 7"):
            read_raster(path)

    def test_non_numeric_sample(self, temp_dir):
        """Parse errors carry the line"""
        path = temp_dir / "bad.asc"
        path.write_text("ncols 1\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\n1..2\n")
        with pytest.raises(FormatError, match="line 6"):
            read_raster(path)

    def test_missing_header(self, temp_dir):
        """cellsize is required"""
        path = temp_dir / "bad.asc"
        path.write_text("ncols 1\nnrows 1\nxllcorner 0\nyllcorner 0\n1\n")
        with pytest.raises(FormatError, match="cellsize"):
            read_raster(path)


class TestFormatSelection:
    """Test suffix-based dispatch"""

    def test_unknown_suffix(self, temp_dir, small_raster):
        """Only rbin and asc are supported"""
        with pytest.raises(DataError, match="Unsupported raster format"):
            write_raster(temp_dir / "r.tif", small_raster)

    def test_missing_file(self, temp_dir):
        """Missing input is a format error naming the path"""
        with pytest.raises(FormatError, match="file not found"):
            read_raster(temp_dir / "nope.rbin")


class TestViirsMasking:
    """Test zero-observation masking"""

    def test_zero_observations_invalidate(self, small_grid):
        """Radiance where no observation was made is dropped"""
        radiance = Raster.full(small_grid, 5.0)
        counts = np.full((3, 4), 3.0)
        counts[0, 0] = 0.0
        masked = mask_zero_observations(radiance, Raster(small_grid, counts))
        assert not masked.valid[0, 0]
        assert masked.valid_count == 11

    def test_negative_count(self, small_grid):
        """Negative counts are data errors"""
        with pytest.raises(DataError, match="negative"):
            mask_zero_observations(Raster.full(small_grid, 1.0), Raster.full(small_grid, -1.0))

    def test_grid_mismatch(self, small_grid):
        """Radiance and counts share a grid"""
        with pytest.raises(GridMismatchError):
            mask_zero_observations(Raster.full(small_grid, 1.0), Raster.full(small_grid.translated(1.0, 0.0), 1.0))

    def test_masking_fuzz(self):
        """No valid radiance pixel survives a zero count"""
        rng = np.random.default_rng(2017)
        for _ in range(1000):
            w, h = rng.integers(1, 9, size=2)
            grid = GridGeometry(int(w), int(h), 0.0, 0.0, 1.0)
            radiance_valid = rng.random((h, w)) < 0.8
            radiance = Raster(grid, rng.random((h, w)) * 50.0, radiance_valid)
            counts = rng.integers(0, 4, size=(h, w)).astype(np.float64)
            counts_valid = rng.random((h, w)) < 0.9
            masked = mask_zero_observations(radiance, Raster(grid, counts, counts_valid))
            assert not (masked.valid & (counts == 0)).any()
            assert not (masked.valid & ~counts_valid).any()
            assert np.array_equal(masked.valid, radiance_valid & counts_valid & (counts > 0))

    def test_read_pair(self, temp_dir, small_grid):
        """Pair reader applies the mask"""
        counts = np.ones((3, 4))
        counts[2, 3] = 0.0
        rad = write_raster(temp_dir / "2017-09_rad.asc", Raster.full(small_grid, 2.5))
        obs = write_raster(temp_dir / "2017-09_obs.asc", Raster(small_grid, counts))
        composite = read_viirs_pair(rad, obs, MonthKey(2017, 9))
        assert composite.month == MonthKey(2017, 9)
        assert composite.radiance.valid_count == 11
