"""
Common test fixtures and configurations for all tests
"""

import shutil
import tempfile
from pathlib import Path

import numpy as np
import pytest

from udikit.core.months import MonthKey, month_range
from udikit.core.raster import GridGeometry, Raster
from udikit.core.synth import ScenarioConfig, generate
from udikit.core.zonal import ZonalRecord, ZonalSeries
from udikit.utils.config import Config

TRAINING = (MonthKey(2012, 4), MonthKey(2017, 8))


@pytest.fixture
def temp_dir():
    """Create temporary directory for tests"""
    temp_path = Path(tempfile.mkdtemp())
    yield temp_path
    shutil.rmtree(temp_path, ignore_errors=True)


@pytest.fixture
def small_grid():
    """4 x 3 grid of 10 m pixels"""
    return GridGeometry(4, 3, 1000.0, 2000.0, 10.0)


@pytest.fixture
def small_raster(small_grid):
    """Small raster with one invalid pixel"""
    samples = np.arange(12, dtype=np.float64).reshape(3, 4)
    valid = np.ones((3, 4), dtype=bool)
    valid[1, 2] = False
    return Raster(small_grid, samples, valid)


def noiseless_scenario(**overrides) -> ScenarioConfig:
    """Three tracts, no noise, no clouds; exact ground truth"""
    params = {
        "seed": 11,
        "width": 48,
        "height": 48,
        "tracts_x": 3,
        "tracts_y": 1,
        "population": [3000.0, 5000.0, 2000.0],
        "building_count": [900.0, 1500.0, 600.0],
        "base_brightness": [20.0, 30.0, 15.0],
        "trend_slope": [0.05, 0.08, 0.02],
        "seasonal_amplitude": [2.0, 3.0, 1.0],
        "outage": [0.6, 0.3, 0.0],
        "images_per_epoch": 1,
    }
    params.update(overrides)
    return ScenarioConfig(**params)


@pytest.fixture
def scenario_factory(temp_dir):
    """Build a synthetic dataset; returns (scenario, truth, data_dir)"""

    def build(name: str = "data", **overrides):
        scenario = noiseless_scenario(**overrides)
        data_dir = temp_dir / name
        truth = generate(scenario, data_dir)
        return scenario, truth, data_dir

    return build


@pytest.fixture
def pipeline_config(temp_dir):
    """Config writing exact (asc) outputs into a temporary work dir"""

    def make(data_dir: Path, work: str = "work", **overrides) -> Config:
        settings = {"raster_format": "asc", **overrides}
        return Config(data_dir=data_dir, output_dir=temp_dir / work, **settings)

    return make


def make_series(tract_id: str, values: dict[MonthKey, float]) -> ZonalSeries:
    """Zonal series with the given monthly means"""
    records = [ZonalRecord(tract_id, m, v, 0.0, v, v, 1, 1) for m, v in sorted(values.items())]
    return ZonalSeries(tract_id, records)


def training_months() -> list[MonthKey]:
    return month_range(*TRAINING)
