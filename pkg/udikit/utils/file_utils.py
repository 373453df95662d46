"""
File I/O utility module
"""

import hashlib
import re
from collections.abc import Mapping
from pathlib import Path

import pandas as pd

from .errors import FormatError


def ensure_directory(path: Path) -> None:
    """Create directory if it doesn't exist"""
    path.mkdir(parents=True, exist_ok=True)


def get_file_hash(file_path: Path) -> str:
    """SHA-256 hex digest of a file"""
    hash_sha256 = hashlib.sha256()
    with file_path.open("rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            hash_sha256.update(chunk)
    return hash_sha256.hexdigest()


def hash_tree(root: Path, pattern: str = "**/*") -> dict[str, str]:
    """Digest of every file under root, keyed by relative posix path"""
    return {
        path.relative_to(root).as_posix(): get_file_hash(path)
        for path in sorted(root.glob(pattern))
        if path.is_file()
    }


def sanitize_filename(filename: str) -> str:
    """Remove unsafe characters from filename"""
    sanitized = re.sub(r"[^\w\.-]", "_", filename)
    sanitized = re.sub(r"_+", "_", sanitized)
    sanitized = sanitized.strip("_ ")
    return sanitized or "unnamed"


def write_text_file(file_path: Path, content: str, encoding: str = "utf-8") -> None:
    """Write text file with '\\n' line endings"""
    ensure_directory(file_path.parent)
    with file_path.open("w", encoding=encoding, newline="\n") as f:
        f.write(content)


def write_table(frame: pd.DataFrame, file_path: Path) -> Path:
    """
    Write a CSV table deterministically

    Missing values are written as empty fields, floats in shortest
    round-trip form.
    """
    ensure_directory(file_path.parent)
    frame.to_csv(file_path, index=False, na_rep="", lineterminator="\n")
    return file_path


def read_table(file_path: Path, columns: list[str], dtype: Mapping[str, str] | None = None) -> pd.DataFrame:
    """
    Read a CSV table written by write_table

    Args:
        file_path: CSV file
        columns: Expected header, in order
        dtype: Optional column dtypes (text ids should be 'str')

    Returns:
        DataFrame with exactly the expected columns
    """
    if not file_path.exists():
        msg = "file not found"
        raise FormatError(msg, file_path)
    try:
        frame = pd.read_csv(
            file_path,
            dtype=dict(dtype or {}),
            keep_default_na=False,
            na_values=[""],
            float_precision="round_trip",
        )
    except (pd.errors.EmptyDataError, pd.errors.ParserError, ValueError) as e:
        raise FormatError(str(e), file_path) from e
    if list(frame.columns) != columns:
        msg = f"expected header {','.join(columns)}, got {','.join(map(str, frame.columns))}"
        raise FormatError(msg, file_path, "line 1")
    return frame
