"""Bundled synthetic scenarios"""

from importlib.resources import files
from pathlib import Path


def scenario_path(name: str = "demo") -> Path:
    """Path of a bundled ``<name>.cfg`` scenario"""
    return Path(str(files(__package__) / f"{name}.cfg"))
