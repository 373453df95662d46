"""
Impervious-surface mapping by signature transfer

A dated 0-100 percent reference map is binned into ten classes, per-class
spectral signatures are learned from imagery over it, and newer images are
classified by nearest signature. Per-image maps are averaged into pre- and
post-storm composites.
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from pathlib import Path

import numpy as np
import pandas as pd
from loguru import logger

from udikit.core.raster import MultibandRaster, Raster, mean_stack
from udikit.utils.errors import DataError, FormatError, GridMismatchError
from udikit.utils.file_utils import read_table, write_table

N_CLASSES = 10
CLASSES = np.arange(1, N_CLASSES + 1)
SIGNATURE_COLUMNS = ["class", "band", "mean", "support"]


class MapKind(StrEnum):
    PER_IMAGE = "per_image"
    COMPOSITE = "composite"


@dataclass(frozen=True)
class ImperviousMap:
    """Impervious index on the 1-10 scale (1 = 0-10%, 10 = 90-100%)"""

    raster: Raster
    kind: MapKind = MapKind.PER_IMAGE

    def __post_init__(self):
        values = self.raster.valid_values()
        if values.size and (values.min() < 1 or values.max() > N_CLASSES):
            msg = "impervious classes must lie in [1, 10]"
            raise DataError(msg)
        if self.kind is MapKind.PER_IMAGE and values.size and np.any(values != np.floor(values)):
            msg = "per-image impervious classes must be integers"
            raise DataError(msg)

    @property
    def geometry(self):
        return self.raster.geometry


@dataclass(frozen=True)
class KnnConfig:
    """k-NN settings; one neighbour, Euclidean distance, equal weights"""

    k: int = 1
    metric: str = "euclidean"
    weighting: str = "equal"

    def __post_init__(self):
        if self.k < 1:
            msg = f"Invalid k: {self.k}"
            raise ValueError(msg)
        if self.metric != "euclidean":
            msg = f"Unsupported metric: {self.metric}"
            raise ValueError(msg)
        if self.weighting != "equal":
            msg = f"Unsupported weighting: {self.weighting}"
            raise ValueError(msg)


@dataclass
class SignatureTable:
    """Per-class mean reflectance per band, with observation support"""

    bands: tuple[str, ...]
    means: np.ndarray  # (N_CLASSES, len(bands)); NaN where absent
    support: np.ndarray  # (N_CLASSES,)
    region: str | None = None
    _present: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.bands = tuple(self.bands)
        self.means = np.asarray(self.means, dtype=np.float64)
        self.support = np.asarray(self.support, dtype=np.int64)
        if self.means.shape != (N_CLASSES, len(self.bands)):
            msg = f"means must be {N_CLASSES}x{len(self.bands)}"
            raise ValueError(msg)
        self._present = self.support > 0
        if not np.isfinite(self.means[self._present]).all():
            msg = "present classes must have finite means"
            raise ValueError(msg)

    @property
    def present_classes(self) -> np.ndarray:
        """Class numbers (1-based, ascending) with support"""
        return CLASSES[self._present]

    def signature(self, cls: int) -> np.ndarray:
        return self.means[cls - 1]

    def mean(self, cls: int, band: str) -> float:
        return float(self.means[cls - 1, self.bands.index(band)])


def reclassify_percent(reference: Raster) -> ImperviousMap:
    """
    Bin a 0-100 percent map into classes min(floor(v/10) + 1, 10)

    Raises:
        DataError: a valid sample outside [0, 100]
    """
    values = np.where(reference.valid, reference.samples, 0.0)
    bad = reference.valid & ((values < 0) | (values > 100))
    if bad.any():
        row, col = (int(i) for i in np.argwhere(bad)[0])
        msg = f"percent value {reference.samples[row, col]} at pixel (col={col}, row={row}) outside [0, 100]"
        raise DataError(msg)

    classes = np.minimum(np.floor(values / 10.0) + 1.0, float(N_CLASSES))
    return ImperviousMap(Raster(reference.geometry, np.where(reference.valid, classes, np.nan), reference.valid))


def extract_signatures(
    reference: ImperviousMap,
    images: Sequence[MultibandRaster],
    region: str | None = None,
) -> SignatureTable:
    """
    Pooled per-class mean reflectance over all valid (pixel, image) observations

    Sums are correctly rounded, so the means do not depend on image order.
    """
    if not images:
        msg = "extract_signatures needs at least one image"
        raise DataError(msg)

    bands = images[0].band_names
    for image in images:
        if image.geometry != reference.geometry:
            raise GridMismatchError("reference vs image")
        if image.band_names != bands:
            msg = f"band order mismatch: {image.band_names} vs {bands}"
            raise DataError(msg)

    ref = reference.raster
    classes = np.where(ref.valid, ref.samples, 0).astype(np.int64)
    chunks: list[list[list[np.ndarray]]] = [[[] for _ in bands] for _ in CLASSES]
    support = np.zeros(N_CLASSES, dtype=np.int64)

    for image in images:
        stack = image.stack()
        usable = image.valid & ref.valid
        for ci, cls in enumerate(CLASSES):
            sel = usable & (classes == cls)
            n = int(sel.sum())
            if not n:
                continue
            support[ci] += n
            for bi in range(len(bands)):
                chunks[ci][bi].append(stack[bi][sel])

    if not support.any():
        msg = "reference and imagery disjoint"
        raise DataError(msg)

    means = np.full((N_CLASSES, len(bands)), np.nan)
    for ci in range(N_CLASSES):
        if support[ci]:
            for bi in range(len(bands)):
                values = np.concatenate(chunks[ci][bi])
                means[ci, bi] = math.fsum(values.tolist()) / support[ci]

    absent = [int(c) for c in CLASSES[support == 0]]
    if absent:
        logger.debug(f"signature classes without support: {absent}")
    return SignatureTable(bands, means, support, region)


def squared_distances(image: MultibandRaster, table: SignatureTable) -> np.ndarray:
    """
    (present classes, height, width) squared Euclidean distances

    Band terms are accumulated in band order.
    """
    stack = np.where(image.valid, image.stack(), 0.0)
    present = table.present_classes
    out = np.empty((len(present), *image.geometry.shape))
    for i, cls in enumerate(present):
        signature = table.signature(int(cls))
        acc = np.zeros(image.geometry.shape)
        for bi in range(len(table.bands)):
            diff = stack[bi] - signature[bi]
            acc += diff * diff
        out[i] = acc
    return out


def knn_classify(image: MultibandRaster, table: SignatureTable, cfg: KnnConfig | None = None) -> ImperviousMap:
    """
    Assign each valid pixel the nearest present class signature

    Exact distance ties resolve to the lower class. With k > 1 each of the k
    nearest signatures casts one vote and vote ties also go to the lower class.
    """
    cfg = cfg or KnnConfig()
    if image.band_names != table.bands:
        msg = f"band order mismatch: {image.band_names} vs {table.bands}"
        raise DataError(msg)
    present = table.present_classes
    if present.size == 0:
        msg = "signature table has no present class"
        raise DataError(msg)

    distances = squared_distances(image, table)
    if cfg.k == 1:
        winner = np.argmin(distances, axis=0)
    else:
        k = min(cfg.k, len(present))
        order = np.argsort(distances, axis=0, kind="stable")[:k]
        votes = np.zeros_like(distances, dtype=np.int64)
        for j in range(k):
            votes += order[j][None, :, :] == np.arange(len(present))[:, None, None]
        winner = np.argmax(votes, axis=0)

    valid = image.valid
    labels = np.where(valid, present[winner].astype(np.float64), np.nan)
    return ImperviousMap(Raster(image.geometry, labels, valid), MapKind.PER_IMAGE)


def average_composite(maps: Sequence[ImperviousMap]) -> ImperviousMap:
    """Per-pixel mean of per-image maps over the maps valid at each pixel"""
    for m in maps:
        if m.kind is not MapKind.PER_IMAGE:
            msg = "average_composite expects per-image maps"
            raise DataError(msg)
    return ImperviousMap(mean_stack([m.raster for m in maps]), MapKind.COMPOSITE)


def write_signatures(path: Path, table: SignatureTable) -> Path:
    """One row per (class, band): class,band,mean,support"""
    rows = []
    for ci, cls in enumerate(CLASSES):
        for bi, band in enumerate(table.bands):
            mean = table.means[ci, bi] if table.support[ci] else np.nan
            rows.append((int(cls), band, mean, int(table.support[ci])))
    return write_table(pd.DataFrame(rows, columns=SIGNATURE_COLUMNS), path)


def read_signatures(path: Path, region: str | None = None) -> SignatureTable:
    frame = read_table(path, SIGNATURE_COLUMNS, dtype={"band": "str"})
    bands = tuple(dict.fromkeys(frame["band"]))
    means = np.full((N_CLASSES, len(bands)), np.nan)
    support = np.zeros(N_CLASSES, dtype=np.int64)
    for row in frame.itertuples(index=False):
        cls = int(row[0])
        if not 1 <= cls <= N_CLASSES:
            msg = f"class {cls} outside 1..{N_CLASSES}"
            raise FormatError(msg, path)
        means[cls - 1, bands.index(row[1])] = row[2]
        support[cls - 1] = int(row[3])
    try:
        return SignatureTable(bands, means, support, region)
    except ValueError as e:
        raise FormatError(str(e), path) from e
