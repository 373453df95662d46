"""
Test suite for impervious-surface reclassification and k-NN mapping
"""

import numpy as np
import pytest

from udikit.core.classify import (
    N_CLASSES,
    ImperviousMap,
    KnnConfig,
    MapKind,
    SignatureTable,
    average_composite,
    extract_signatures,
    knn_classify,
    read_signatures,
    reclassify_percent,
    write_signatures,
)
from udikit.core.raster import GridGeometry, MultibandRaster, Raster
from udikit.utils.errors import DataError

BANDS = ("b1", "b2", "b3")


def _table(means, support=None, bands=BANDS):
    means = np.asarray(means, dtype=np.float64)
    if support is None:
        support = np.where(np.isnan(means).any(axis=1), 0, 1)
    return SignatureTable(bands, means, support)


def _oracle(image: MultibandRaster, table: SignatureTable) -> np.ndarray:
    """Exhaustive per-pixel scan; strict comparison keeps the lowest class on ties"""
    h, w = image.geometry.shape
    stack = image.stack()
    valid = image.valid
    out = np.full((h, w), np.nan)
    for r in range(h):
        for c in range(w):
            if not valid[r, c]:
                continue
            best, best_d = None, None
            for cls in table.present_classes.tolist():
                sig = table.signature(cls)
                d = 0.0
                for b in range(len(table.bands)):
                    diff = float(stack[b, r, c]) - float(sig[b])
                    d += diff * diff
                if best_d is None or d < best_d:
                    best, best_d = cls, d
            out[r, c] = best
    return out


class TestReclassify:
    """Test percent to class binning"""

    def test_endpoints(self):
        """0% is class 1 and 90-100% is class 10"""
        grid = GridGeometry(4, 1, 0.0, 1.0, 1.0)
        result = reclassify_percent(Raster(grid, np.array([[0.0, 90.0, 99.9, 100.0]])))
        assert result.raster.samples.tolist() == [[1.0, 10.0, 10.0, 10.0]]

    def test_bin_boundaries(self):
        """Every integer percent lands in min(floor(v/10) + 1, 10)"""
        values = np.arange(101, dtype=np.float64).reshape(1, 101)
        result = reclassify_percent(Raster(GridGeometry(101, 1, 0.0, 1.0, 1.0), values))
        expected = [min(v // 10 + 1, N_CLASSES) for v in range(101)]
        assert result.raster.samples[0].astype(int).tolist() == expected
        assert result.raster.samples[0, 9] == 1.0
        assert result.raster.samples[0, 10] == 2.0

    def test_out_of_range(self, small_grid):
        """Values outside 0-100 name the pixel"""
        samples = np.full((3, 4), 50.0)
        samples[2, 1] = 100.5
        with pytest.raises(DataError, match=r"col=1, row=2"):
            reclassify_percent(Raster(small_grid, samples))

    def test_invalid_stays_invalid(self, small_raster):
        """Masked reference pixels are not classified"""
        result = reclassify_percent(small_raster)
        assert not result.raster.valid[1, 2]
        assert result.kind is MapKind.PER_IMAGE


class TestImperviousMap:
    """Test ImperviousMap validation"""

    def test_range(self, small_grid):
        """Values lie in 1..10"""
        with pytest.raises(DataError, match=r"\[1, 10\]"):
            ImperviousMap(Raster.full(small_grid, 11.0))

    def test_per_image_integers(self, small_grid):
        """Per-image maps hold whole classes, composites may not"""
        with pytest.raises(DataError, match="integers"):
            ImperviousMap(Raster.full(small_grid, 2.5))
        assert ImperviousMap(Raster.full(small_grid, 2.5), MapKind.COMPOSITE).raster.samples[0, 0] == 2.5


class TestSignatures:
    """Test signature extraction and its CSV form"""

    def test_pooled_means(self):
        """Means pool every valid observation of a class"""
        grid = GridGeometry(2, 1, 0.0, 1.0, 1.0)
        reference = ImperviousMap(Raster(grid, np.array([[1.0, 3.0]])))
        img1 = MultibandRaster.from_array(grid, np.array([[[1.0, 10.0]], [[2.0, 20.0]]]), names=("a", "b"))
        img2 = MultibandRaster.from_array(grid, np.array([[[3.0, 30.0]], [[4.0, 40.0]]]), names=("a", "b"))
        table = extract_signatures(reference, [img1, img2], region="r1")
        assert table.present_classes.tolist() == [1, 3]
        assert table.mean(1, "a") == 2.0
        assert table.mean(3, "b") == 30.0
        assert table.support.tolist() == [2, 0, 2, 0, 0, 0, 0, 0, 0, 0]
        assert table.region == "r1"

    def test_image_order_does_not_matter(self):
        """Correctly rounded sums are order independent"""
        rng = np.random.default_rng(5)
        grid = GridGeometry(8, 8, 0.0, 8.0, 1.0)
        reference = ImperviousMap(Raster(grid, rng.integers(1, 11, size=(8, 8)).astype(np.float64)))
        images = [MultibandRaster.from_array(grid, rng.random((3, 8, 8)), names=BANDS) for _ in range(4)]
        forward = extract_signatures(reference, images)
        backward = extract_signatures(reference, images[::-1])
        assert np.array_equal(forward.means, backward.means, equal_nan=True)

    def test_disjoint(self, small_grid):
        """No usable pixel is an error"""
        reference = ImperviousMap(Raster.empty(small_grid))
        image = MultibandRaster.from_array(small_grid, np.ones((3, 3, 4)), names=BANDS)
        with pytest.raises(DataError, match="disjoint"):
            extract_signatures(reference, [image])

    def test_csv_round_trip(self, temp_dir):
        """Absent classes keep zero support"""
        means = np.full((N_CLASSES, 3), np.nan)
        means[0] = [0.1, 0.2, 0.3]
        means[4] = [1 / 3, 2 / 3, 1.0]
        table = _table(means)
        again = read_signatures(write_signatures(temp_dir / "sig.csv", table), region="east")
        assert again.bands == BANDS
        assert np.array_equal(again.means, table.means, equal_nan=True)
        assert again.present_classes.tolist() == [1, 5]
        assert again.region == "east"


class TestKnnClassify:
    """Test nearest-signature classification"""

    def test_matches_exhaustive_scan(self):
        """Vectorized result equals a per-pixel scan, ties included"""
        rng = np.random.default_rng(42)
        grid = GridGeometry(32, 32, 0.0, 32.0, 1.0)
        for trial in range(10):
            # Small integer values make exact distance ties common
            means = rng.integers(0, 6, size=(N_CLASSES, 3)).astype(np.float64)
            absent = rng.random(N_CLASSES) < 0.3
            absent[trial % N_CLASSES] = False
            means[absent] = np.nan
            table = _table(means)
            array = rng.integers(0, 6, size=(3, 32, 32)).astype(np.float64)
            valid = rng.random((32, 32)) < 0.9
            image = MultibandRaster.from_array(grid, array, valid, names=BANDS)
            result = knn_classify(image, table)
            expected = _oracle(image, table)
            assert np.array_equal(result.raster.valid, valid)
            assert np.array_equal(result.raster.samples[valid], expected[valid])

    def test_tie_goes_to_lower_class(self):
        """Equidistant signatures resolve to the lower class"""
        grid = GridGeometry(1, 1, 0.0, 1.0, 1.0)
        means = np.full((N_CLASSES, 1), np.nan)
        means[6] = [0.0]
        means[2] = [1.0]
        table = _table(means, bands=("x",))
        image = MultibandRaster.from_array(grid, np.array([[[0.5]]]), names=("x",))
        assert knn_classify(image, table).raster.samples[0, 0] == 3.0

    def test_invalid_band_invalidates_pixel(self, small_grid):
        """A pixel invalid in any band is not classified"""
        means = np.full((N_CLASSES, 2), np.nan)
        means[0] = [0.0, 0.0]
        table = _table(means, bands=("a", "b"))
        b = np.ones((3, 4))
        b[0, 0] = np.nan
        image = MultibandRaster({"a": Raster.full(small_grid, 1.0), "b": Raster(small_grid, b)})
        result = knn_classify(image, table)
        assert not result.raster.valid[0, 0]
        assert result.raster.valid_count == 11

    def test_band_order_mismatch(self, small_grid):
        """Image bands must match the table"""
        means = np.full((N_CLASSES, 2), np.nan)
        means[0] = [0.0, 0.0]
        table = _table(means, bands=("a", "b"))
        image = MultibandRaster({"b": Raster.full(small_grid, 1.0), "a": Raster.full(small_grid, 1.0)})
        with pytest.raises(DataError, match="band order"):
            knn_classify(image, table)

    def test_k_three_votes(self):
        """With k=3 the majority of the three nearest signatures wins"""
        grid = GridGeometry(1, 1, 0.0, 1.0, 1.0)
        means = np.full((N_CLASSES, 1), np.nan)
        means[0] = [0.0]
        means[1] = [10.0]
        means[2] = [11.0]
        table = _table(means, bands=("x",))
        image = MultibandRaster.from_array(grid, np.array([[[4.0]]]), names=("x",))
        assert knn_classify(image, table).raster.samples[0, 0] == 1.0
        # one vote each among the three nearest: tie to the lowest class
        assert knn_classify(image, table, KnnConfig(k=3)).raster.samples[0, 0] == 1.0

    def test_knn_config_validation(self):
        """Only Euclidean distance with equal weights"""
        with pytest.raises(ValueError, match="metric"):
            KnnConfig(metric="manhattan")
        with pytest.raises(ValueError, match="Invalid k"):
            KnnConfig(k=0)


class TestComposite:
    """Test per-epoch averaging"""

    def test_average(self, small_grid):
        """Per-pixel mean over maps valid there"""
        a = ImperviousMap(Raster.full(small_grid, 2.0))
        b_valid = np.ones((3, 4), dtype=bool)
        b_valid[0, 0] = False
        b = ImperviousMap(Raster(small_grid, np.full((3, 4), 5.0), b_valid))
        composite = average_composite([a, b])
        assert composite.kind is MapKind.COMPOSITE
        assert composite.raster.samples[0, 0] == 2.0
        assert composite.raster.samples[1, 1] == 3.5

    def test_rejects_composites(self, small_grid):
        """Only per-image maps are averaged"""
        with pytest.raises(DataError, match="per-image"):
            average_composite([ImperviousMap(Raster.full(small_grid, 2.0), MapKind.COMPOSITE)])
