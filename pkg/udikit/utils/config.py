"""
Configuration management module
"""

from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any

from udikit.core.months import MonthKey
from udikit.core.raster_io import FORMATS
from udikit.utils.errors import FormatError

PAIRINGS = ("post", "pre")

_MONTH_FIELDS = (
    "training_start",
    "training_end",
    "forecast_start",
    "forecast_end",
    "baseline_start",
    "baseline_end",
    "report_start",
)


def read_key_value_file(path: Path) -> dict[str, str]:
    """
    Read a flat ``key = value`` text file

    Blank lines and lines starting with '#' are skipped. Keys are lower-cased.

    Args:
        path: File to read

    Returns:
        Ordered mapping of keys to raw string values
    """
    values: dict[str, str] = {}
    with Path(path).open(encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                msg = f"expected 'key = value', got {line!r}"
                raise FormatError(msg, path, f"line {lineno}")
            key, value = line.split("=", 1)
            key = key.strip().lower().replace("-", "_")
            if not key:
                msg = "empty key"
                raise FormatError(msg, path, f"line {lineno}")
            if key in values:
                msg = f"duplicate key {key!r}"
                raise FormatError(msg, path, f"line {lineno}")
            values[key] = value.strip()
    return values


@dataclass
class Config:
    """Pipeline run configuration"""

    # Directories
    data_dir: Path = Path("./data")
    output_dir: Path = Path("./work")

    # Month windows
    training_start: MonthKey = MonthKey(2012, 4)
    training_end: MonthKey = MonthKey(2017, 8)
    forecast_start: MonthKey = MonthKey(2017, 9)
    forecast_end: MonthKey = MonthKey(2018, 5)
    baseline_start: MonthKey = MonthKey(2017, 3)
    baseline_end: MonthKey = MonthKey(2017, 8)
    report_start: MonthKey = MonthKey(2017, 4)

    # Classification
    knn_k: int = 1
    impervious_pairing: str = "post"  # "post" | "pre"

    # Seasonal fit
    seasonal_passes: int = 400
    seasonal_tolerance: float = 1e-12
    significance_multiplier: float = 1.0

    # Operation settings
    raster_format: str = "rbin"
    verbose: bool = False

    def __post_init__(self):
        """Validate and normalize settings"""

        self.data_dir = Path(self.data_dir)
        self.output_dir = Path(self.output_dir)

        for name in _MONTH_FIELDS:
            setattr(self, name, MonthKey.parse(getattr(self, name)))

        if self.training_end < self.training_start:
            msg = f"Invalid training window: {self.training_start}..{self.training_end}"
            raise ValueError(msg)

        if self.forecast_start <= self.training_end:
            msg = f"Forecast window must start after training ends ({self.training_end})"
            raise ValueError(msg)

        if self.forecast_end < self.forecast_start:
            msg = f"Invalid forecast window: {self.forecast_start}..{self.forecast_end}"
            raise ValueError(msg)

        if self.baseline_end < self.baseline_start:
            msg = f"Invalid baseline window: {self.baseline_start}..{self.baseline_end}"
            raise ValueError(msg)

        if self.impervious_pairing not in PAIRINGS:
            msg = f"Invalid impervious_pairing: {self.impervious_pairing}"
            raise ValueError(msg)

        if self.knn_k < 1:
            msg = f"Invalid knn_k: {self.knn_k}"
            raise ValueError(msg)

        if self.seasonal_passes < 1:
            msg = f"Invalid seasonal_passes: {self.seasonal_passes}"
            raise ValueError(msg)

        if self.raster_format not in FORMATS:
            msg = f"Invalid raster_format: {self.raster_format}"
            raise ValueError(msg)

        if self.significance_multiplier < 0:
            msg = f"Invalid significance_multiplier: {self.significance_multiplier}"
            raise ValueError(msg)

    @classmethod
    def from_file(cls, path: Path, **overrides: Any) -> "Config":
        """Load a flat key/value config file; keyword overrides win"""
        raw = read_key_value_file(path)
        known = {f.name: f for f in fields(cls)}
        kwargs: dict[str, Any] = {}
        for key, value in raw.items():
            if key not in known:
                msg = f"unknown config key {key!r}"
                raise FormatError(msg, path)
            kwargs[key] = _coerce(known[key].type, value)
        kwargs.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**kwargs)

    def training_window(self) -> tuple[MonthKey, MonthKey]:
        return self.training_start, self.training_end

    def forecast_window(self) -> tuple[MonthKey, MonthKey]:
        return self.forecast_start, self.forecast_end


def _coerce(annotation: Any, value: str) -> Any:
    if annotation in (bool, "bool"):
        lowered = value.lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        msg = f"Invalid boolean: {value!r}"
        raise ValueError(msg)
    if annotation in (int, "int"):
        return int(value)
    if annotation in (float, "float"):
        return float(value)
    if annotation in (MonthKey, "MonthKey"):
        return MonthKey.parse(value)
    if annotation in (Path, "Path"):
        return Path(value)
    return value
