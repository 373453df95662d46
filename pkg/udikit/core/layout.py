"""
On-disk layout of scenario inputs and stage outputs
"""

import re
from pathlib import Path
from typing import Any

from udikit.core.months import MonthKey
from udikit.core.raster_io import FORMATS
from udikit.utils.errors import DataError, StageOrderError
from udikit.utils.file_utils import ensure_directory, sanitize_filename

EPOCHS = ("pre", "post")

_IMAGE_DIR_RE = re.compile(r"^(pre|post)_(\d+)$")
_VIIRS_RE = re.compile(r"^(\d{4})-(\d{2})_rad$")


class DatasetLayout:
    """
    File names under a data directory (inputs) and a work directory (outputs)

    Input layout::

        reference_percent.<fmt>
        images/<epoch>_<n>/<band>.<fmt>
        viirs/<YYYY-MM>_rad.<fmt>, viirs/<YYYY-MM>_obs.<fmt>
        tracts.geojson, census.csv
        truth/manifest.csv, truth/island.csv
    """

    def __init__(self, data_dir: Path, work_dir: Path | None = None, raster_format: str = "rbin"):
        if raster_format not in FORMATS:
            msg = f"Unsupported raster format: {raster_format}"
            raise ValueError(msg)
        self.data_dir = Path(data_dir)
        self.work_dir = Path(work_dir) if work_dir is not None else self.data_dir
        self.raster_format = raster_format

    # ------------------------------------------------------------ inputs

    def find_raster(self, stem: Path) -> Path:
        """Existing raster with the given stem in any supported format"""
        for fmt in FORMATS:
            path = stem.with_name(f"{stem.name}.{fmt}")
            if path.exists():
                return path
        return stem.with_name(f"{stem.name}.{self.raster_format}")

    @property
    def reference(self) -> Path:
        return self.find_raster(self.data_dir / "reference_percent")

    def image_dir(self, epoch: str, index: int) -> Path:
        return self.data_dir / "images" / f"{epoch}_{index}"

    def image_band(self, epoch: str, index: int, band: str) -> Path:
        return self.find_raster(self.image_dir(epoch, index) / band)

    def images(self, epoch: str) -> list[Path]:
        """Image directories of an epoch, in index order"""
        root = self.data_dir / "images"
        if not root.is_dir():
            return []
        found = []
        for path in root.iterdir():
            match = _IMAGE_DIR_RE.match(path.name)
            if path.is_dir() and match and match.group(1) == epoch:
                found.append((int(match.group(2)), path))
        return [p for _, p in sorted(found)]

    def viirs_radiance(self, month: MonthKey) -> Path:
        return self.find_raster(self.data_dir / "viirs" / f"{month}_rad")

    def viirs_observations(self, month: MonthKey) -> Path:
        return self.find_raster(self.data_dir / "viirs" / f"{month}_obs")

    def viirs_months(self) -> list[MonthKey]:
        root = self.data_dir / "viirs"
        if not root.is_dir():
            return []
        months = set()
        for path in root.iterdir():
            match = _VIIRS_RE.match(path.stem)
            if match and path.suffix.lstrip(".") in FORMATS:
                months.add(MonthKey(int(match.group(1)), int(match.group(2))))
        return sorted(months)

    @property
    def tracts(self) -> Path:
        return self.data_dir / "tracts.geojson"

    @property
    def census(self) -> Path:
        return self.data_dir / "census.csv"

    @property
    def manifest(self) -> Path:
        return self.data_dir / "truth" / "manifest.csv"

    @property
    def island_truth(self) -> Path:
        return self.data_dir / "truth" / "island.csv"

    # ----------------------------------------------------------- outputs

    def _output(self, relative: str) -> Path:
        return self.work_dir / f"{relative}.{self.raster_format}"

    @property
    def reference_classes(self) -> Path:
        return self._output("reference_classes")

    def signatures(self, region: str | None = None) -> Path:
        name = "signatures.csv" if region is None else f"signatures_{sanitize_filename(region)}.csv"
        return self.work_dir / name

    def classified(self, epoch: str, index: int) -> Path:
        return self._output(f"classified/{epoch}_{index}")

    def impervious(self, epoch: str) -> Path:
        if epoch not in EPOCHS:
            msg = f"unknown epoch {epoch!r}"
            raise DataError(msg)
        return self._output(f"impervious_{epoch}")

    def udi(self, month: MonthKey) -> Path:
        return self._output(f"udi/{month}")

    @property
    def udi_baseline(self) -> Path:
        return self._output("udi/baseline")

    def udi_months(self) -> list[MonthKey]:
        root = self.work_dir / "udi"
        if not root.is_dir():
            return []
        months = []
        for path in root.glob(f"*.{self.raster_format}"):
            try:
                months.append(MonthKey.parse(path.stem))
            except ValueError:
                continue
        return sorted(months)

    def change(self, month: MonthKey, mode: str) -> Path:
        return self._output(f"change/{month}_{mode}")

    @property
    def zonal(self) -> Path:
        return self.work_dir / "zonal.csv"

    @property
    def models(self) -> Path:
        return self.work_dir / "models.csv"

    @property
    def shortfall(self) -> Path:
        return self.work_dir / "shortfall.csv"

    @property
    def lines(self) -> Path:
        return self.work_dir / "lines.csv"

    @property
    def impact(self) -> Path:
        return self.work_dir / "impact.csv"

    @property
    def sample(self) -> Path:
        return self.work_dir / "sample.csv"

    @property
    def accuracy(self) -> Path:
        return self.work_dir / "accuracy.csv"

    @property
    def reports_dir(self) -> Path:
        return self.work_dir / "reports"

    def tract_report(self, tract_id: str) -> Path:
        return self.reports_dir / f"tract_{sanitize_filename(tract_id)}.svg"

    @property
    def impact_report(self) -> Path:
        return self.reports_dir / "impact.svg"

    # ------------------------------------------------------------ checks

    def require(self, stage: str, *paths: Path) -> None:
        """
        Raise StageOrderError naming the first missing input of a stage
        """
        for path in paths:
            if not path.exists():
                msg = f"{stage}: missing input {path} (run the producing stage first)"
                raise StageOrderError(msg)

    def ensure(self) -> None:
        ensure_directory(self.work_dir)

    def get_structure(self) -> dict[str, Any]:
        """Which inputs and outputs currently exist"""
        return {
            "data_dir": self.data_dir,
            "work_dir": self.work_dir,
            "reference": self.reference.exists(),
            "images": {epoch: len(self.images(epoch)) for epoch in EPOCHS},
            "viirs_months": len(self.viirs_months()),
            "tracts": self.tracts.exists(),
            "census": self.census.exists(),
            "impervious": {epoch: self.impervious(epoch).exists() for epoch in EPOCHS},
            "udi_months": len(self.udi_months()),
            "zonal": self.zonal.exists(),
            "models": self.models.exists(),
            "impact": self.impact.exists(),
        }
