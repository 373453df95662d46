"""
Raster readers and writers

Two formats are supported:

* ``rbin`` - little-endian binary container: magic ``UDIR``, version u32,
  width u32, height u32, x_origin f64, y_origin f64, pixel_size f64,
  nodata f32, then width·height f32 samples row-major.
* ``asc`` - ESRI ASCII grid with the usual header (ncols, nrows,
  xllcorner/xllcenter, yllcorner/yllcenter, cellsize, NODATA_value).

Both convert their nodata sentinel to the raster validity mask on read.
"""

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from loguru import logger

from udikit.core.months import MonthKey
from udikit.core.raster import GridGeometry, Raster
from udikit.utils.errors import DataError, FormatError, GridMismatchError
from udikit.utils.file_utils import ensure_directory

RBIN_MAGIC = b"UDIR"
RBIN_VERSION = 1
RBIN_HEADER = struct.Struct("<4sIIIdddf")
DEFAULT_NODATA = -9999.0

FORMATS = ("rbin", "asc")

_ASC_KEYS = ("ncols", "nrows", "xllcorner", "xllcenter", "yllcorner", "yllcenter", "cellsize", "dx", "dy", "nodata_value")


def _format_for(path: Path, fmt: str | None) -> str:
    if fmt is None:
        fmt = path.suffix.lower().lstrip(".")
    if fmt not in FORMATS:
        msg = f"Unsupported raster format {fmt!r} (expected one of {', '.join(FORMATS)})"
        raise DataError(msg)
    return fmt


def read_raster(path: Path | str, fmt: str | None = None) -> Raster:
    """Read a raster; the format is taken from the suffix unless given"""
    path = Path(path)
    fmt = _format_for(path, fmt)
    if not path.exists():
        msg = "file not found"
        raise FormatError(msg, path)
    if fmt == "rbin":
        return read_rbin(path)
    return read_asc(path)


def write_raster(path: Path | str, raster: Raster, fmt: str | None = None, nodata: float = DEFAULT_NODATA) -> Path:
    """Write a raster; the format is taken from the suffix unless given"""
    path = Path(path)
    fmt = _format_for(path, fmt)
    ensure_directory(path.parent)
    if fmt == "rbin":
        write_rbin(path, raster, nodata)
    else:
        write_asc(path, raster, nodata)
    return path


def _check_nodata(raster: Raster, nodata: float) -> None:
    if math.isfinite(nodata) and np.any(raster.samples[raster.valid] == nodata):
        msg = f"A valid sample equals the nodata sentinel {nodata}"
        raise DataError(msg)


# ---------------------------------------------------------------- rbin


def encode_rbin(raster: Raster, nodata: float = DEFAULT_NODATA) -> bytes:
    """Serialize a raster to rbin bytes"""
    g = raster.geometry
    nodata32 = np.float32(nodata)
    _check_nodata(raster, float(nodata32))

    samples = np.full(g.shape, nodata32, dtype="<f4")
    with np.errstate(over="ignore"):
        values = raster.samples[raster.valid].astype("<f4")
    if not np.isfinite(values).all():
        msg = "A valid sample overflows float32"
        raise DataError(msg)
    samples[raster.valid] = values
    header = RBIN_HEADER.pack(RBIN_MAGIC, RBIN_VERSION, g.width, g.height, g.x_origin, g.y_origin, g.pixel_size, nodata32)
    return header + samples.tobytes(order="C")


def decode_rbin(data: bytes, path: Path | None = None) -> Raster:
    """Parse rbin bytes"""
    if len(data) < RBIN_HEADER.size:
        msg = f"truncated header ({len(data)} of {RBIN_HEADER.size} bytes)"
        raise FormatError(msg, path, f"byte {len(data)}")

    magic, version, width, height, x0, y0, pixel_size, nodata = RBIN_HEADER.unpack_from(data, 0)
    if magic != RBIN_MAGIC:
        msg = f"bad magic {magic!r}"
        raise FormatError(msg, path, "byte 0")
    if version != RBIN_VERSION:
        msg = f"unsupported version {version}"
        raise FormatError(msg, path, "byte 4")
    if width == 0 or height == 0:
        msg = f"invalid dimensions {width}x{height}"
        raise FormatError(msg, path, "byte 8")
    try:
        geometry = GridGeometry(width, height, x0, y0, pixel_size)
    except ValueError as e:
        raise FormatError(str(e), path, "byte 16") from e

    expected = RBIN_HEADER.size + 4 * width * height
    if len(data) != expected:
        what = "truncated sample block" if len(data) < expected else "trailing bytes after samples"
        msg = f"{what}: expected {expected} bytes, found {len(data)}"
        raise FormatError(msg, path, f"byte {min(len(data), expected)}")

    raw = np.frombuffer(data, dtype="<f4", count=width * height, offset=RBIN_HEADER.size)
    samples = raw.astype(np.float64).reshape(height, width)
    valid = np.isfinite(samples)
    if not math.isnan(nodata):
        valid &= raw.reshape(height, width) != nodata
    return Raster(geometry, np.where(valid, samples, np.nan), valid)


def read_rbin(path: Path) -> Raster:
    return decode_rbin(Path(path).read_bytes(), Path(path))


def write_rbin(path: Path, raster: Raster, nodata: float = DEFAULT_NODATA) -> None:
    Path(path).write_bytes(encode_rbin(raster, nodata))


# ----------------------------------------------------------------- asc


def _format_number(value: float) -> str:
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def write_asc(path: Path, raster: Raster, nodata: float = DEFAULT_NODATA) -> None:
    """Write an ESRI ASCII grid; first data line is the northern row"""
    g = raster.geometry
    _check_nodata(raster, nodata)
    yll = g.y_origin - g.height * g.pixel_size
    lines = [
        f"ncols         {g.width}",
        f"nrows         {g.height}",
        f"xllcorner     {_format_number(float(g.x_origin))}",
        f"yllcorner     {_format_number(float(yll))}",
        f"cellsize      {_format_number(float(g.pixel_size))}",
        f"NODATA_value  {_format_number(float(nodata))}",
    ]
    nodata_text = _format_number(float(nodata))
    for r in range(g.height):
        row_valid = raster.valid[r]
        row = raster.samples[r]
        lines.append(" ".join(_format_number(float(v)) if ok else nodata_text for v, ok in zip(row, row_valid, strict=True)))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_asc(path: Path) -> Raster:
    """Read an ESRI ASCII grid"""
    header: dict[str, float] = {}
    tokens: list[tuple[str, int]] = []
    with Path(path).open(encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            parts = raw.split()
            if not parts:
                continue
            key = parts[0].lower()
            if not tokens and key in _ASC_KEYS:
                if len(parts) != 2:
                    msg = f"malformed header line {raw.strip()!r}"
                    raise FormatError(msg, path, f"line {lineno}")
                try:
                    header[key] = float(parts[1])
                except ValueError as e:
                    msg = f"non-numeric header value {parts[1]!r}"
                    raise FormatError(msg, path, f"line {lineno}") from e
                continue
            if not tokens and key[:1].isalpha() and key not in ("nan", "inf", "-inf"):
                msg = f"unknown header key {parts[0]!r}"
                raise FormatError(msg, path, f"line {lineno}")
            tokens.extend((p, lineno) for p in parts)

    geometry = _asc_geometry(header, path)
    expected = geometry.size
    if len(tokens) != expected:
        where = f"line {tokens[-1][1]}" if tokens else "end of file"
        msg = f"sample count mismatch: expected {expected}, found {len(tokens)}"
        raise FormatError(msg, path, where)

    values = np.empty(expected, dtype=np.float64)
    for i, (token, lineno) in enumerate(tokens):
        try:
            values[i] = float(token)
        except ValueError as e:
            msg = f"non-numeric sample {token!r}"
            raise FormatError(msg, path, f"line {lineno}") from e

    samples = values.reshape(geometry.shape)
    valid = np.isfinite(samples)
    if "nodata_value" in header:
        valid &= samples != header["nodata_value"]
    return Raster(geometry, np.where(valid, samples, np.nan), valid)


def _asc_geometry(header: dict[str, float], path: Path) -> GridGeometry:
    for key in ("ncols", "nrows"):
        if key not in header:
            msg = f"missing header key {key!r}"
            raise FormatError(msg, path, "header")

    if "cellsize" in header:
        cellsize = header["cellsize"]
    elif "dx" in header and "dy" in header:
        if header["dx"] != header["dy"]:
            msg = f"non-square pixels (dx={header['dx']}, dy={header['dy']})"
            raise FormatError(msg, path, "header")
        cellsize = header["dx"]
    else:
        msg = "missing header key 'cellsize'"
        raise FormatError(msg, path, "header")

    if "xllcorner" in header:
        xll = header["xllcorner"]
    elif "xllcenter" in header:
        xll = header["xllcenter"] - cellsize / 2
    else:
        msg = "missing header key 'xllcorner'"
        raise FormatError(msg, path, "header")

    if "yllcorner" in header:
        yll = header["yllcorner"]
    elif "yllcenter" in header:
        yll = header["yllcenter"] - cellsize / 2
    else:
        msg = "missing header key 'yllcorner'"
        raise FormatError(msg, path, "header")

    ncols, nrows = header["ncols"], header["nrows"]
    if not (ncols.is_integer() and nrows.is_integer()):
        msg = "ncols/nrows must be integers"
        raise FormatError(msg, path, "header")
    try:
        return GridGeometry(int(ncols), int(nrows), xll, yll + nrows * cellsize, cellsize)
    except ValueError as e:
        raise FormatError(str(e), path, "header") from e


# --------------------------------------------------------------- VIIRS


@dataclass(frozen=True)
class ViirsComposite:
    """Monthly radiance composite and its per-pixel observation counts"""

    month: MonthKey
    radiance: Raster
    observations: Raster


def mask_zero_observations(radiance: Raster, observations: Raster) -> Raster:
    """
    Invalidate radiance wherever the observation count is zero or missing

    Raises:
        GridMismatchError: grids differ
        DataError: a negative or non-integer observation count
    """
    if radiance.geometry != observations.geometry:
        raise GridMismatchError("radiance vs observations")
    counts = observations.samples[observations.valid]
    if np.any(counts < 0):
        msg = "negative observation count"
        raise DataError(msg)
    if np.any(counts != np.floor(counts)):
        msg = "non-integer observation count"
        raise DataError(msg)
    observed = observations.valid & (np.where(observations.valid, observations.samples, 0.0) > 0)
    return radiance.with_mask(observed)


def read_viirs_pair(radiance_path: Path, observations_path: Path, month: MonthKey) -> ViirsComposite:
    """Read a monthly radiance/observation pair; zero-observation pixels become invalid"""
    radiance = read_raster(radiance_path)
    observations = read_raster(observations_path)
    masked = mask_zero_observations(radiance, observations)
    dropped = radiance.valid_count - masked.valid_count
    if dropped:
        logger.debug(f"{month}: masked {dropped} zero-observation pixels")
    return ViirsComposite(month, masked, observations)
