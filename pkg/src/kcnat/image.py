"""Grayscale image I/O and normalization.

Images are plain 2-D ``float64`` numpy arrays (rows x columns). Two on-disk
formats are supported: binary PGM (``P5``, 8- or 16-bit) and a headerless
little-endian float32 plane whose dimensions the caller supplies.
"""

import os
import re

import numpy as np

from ._validation import check_image
from .exceptions import (DegenerateImageError, MalformedHeaderError,
                         NonFiniteError, SizeMismatchError,
                         TruncatedPayloadError, UnsupportedFormatError)

__all__ = ["load_pgm", "save_pgm", "load_raw_f32", "save_raw_f32",
           "to_grayscale_normalized", "load_image"]

_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _read_header(data):
    """Parse ``P5 width height maxval`` and return (w, h, maxval, offset)."""
    fields = []
    pos = 0
    for _ in range(4):
        m = _TOKEN.match(data, pos)
        if m is None:
            raise MalformedHeaderError("PGM header ended prematurely")
        fields.append(m.group(1))
        pos = m.end()
    magic = fields[0]
    if magic != b"P5":
        raise UnsupportedFormatError(
            f"unsupported magic {magic[:8]!r}; only binary PGM (P5) is read")
    try:
        width, height, maxval = (int(f) for f in fields[1:])
    except ValueError as exc:
        raise MalformedHeaderError(f"non-integer PGM header field: {exc}") from None
    if width <= 0 or height <= 0:
        raise MalformedHeaderError(f"invalid PGM dimensions {width}x{height}")
    if not 0 < maxval <= 65535:
        raise MalformedHeaderError(f"maxval {maxval} outside 1..65535")
    # exactly one whitespace byte separates the header from the raster
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        if pos >= len(data):
            raise TruncatedPayloadError("PGM file has no raster data")
        raise MalformedHeaderError("missing whitespace after PGM maxval")
    return width, height, maxval, pos + 1


def load_pgm(path):
    """Read a binary PGM file into a float image in [0, 1].

    8-bit rasters are divided by 255 and 16-bit (big-endian) rasters by 65535.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    width, height, maxval, offset = _read_header(data)
    if maxval < 256:
        dtype, scale = np.uint8, 255.0
    else:
        dtype, scale = np.dtype(">u2"), 65535.0
    nbytes = width * height * np.dtype(dtype).itemsize
    payload = data[offset:offset + nbytes]
    if len(payload) < nbytes:
        raise TruncatedPayloadError(
            f"expected {nbytes} raster bytes, found {len(payload)}")
    raster = np.frombuffer(payload, dtype=dtype).reshape(height, width)
    return raster.astype(np.float64) / scale


def save_pgm(path, img, bit_depth=8):
    """Write an image as binary PGM, clipping to [0, 1] and rounding."""
    img = check_image(img, min_size=1)
    if bit_depth == 8:
        maxval, dtype = 255, np.uint8
    elif bit_depth == 16:
        maxval, dtype = 65535, np.dtype(">u2")
    else:
        raise ValueError(f"bit_depth must be 8 or 16, got {bit_depth}")
    raster = np.rint(np.clip(img, 0.0, 1.0) * maxval).astype(dtype)
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n{maxval}\n".encode("ascii"))
        fh.write(raster.tobytes())


def load_raw_f32(path, height, width):
    """Read a headerless little-endian float32 plane of the given size."""
    expected = 4 * height * width
    size = os.path.getsize(path)
    if size != expected:
        raise SizeMismatchError(
            f"{path}: {size} bytes, expected {expected} for {height}x{width} float32")
    arr = np.fromfile(path, dtype="<f4").reshape(height, width).astype(np.float64)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{path}: contains non-finite values")
    return arr


def save_raw_f32(path, img):
    arr = np.asarray(img, dtype=np.float64)
    arr.astype("<f4").tofile(path)


def load_image(path, shape=None):
    """Dispatch on extension: ``.pgm`` is PGM, anything else raw float32.

    Raw files need ``shape=(height, width)``.
    """
    if str(path).lower().endswith(".pgm"):
        return load_pgm(path)
    if shape is None:
        raise SizeMismatchError(f"{path}: raw float32 input requires an explicit shape")
    return load_raw_f32(path, *shape)


def to_grayscale_normalized(img):
    """Standardize to zero mean and unit (population) variance."""
    img = check_image(img)
    centered = img - img.mean()
    var = np.mean(centered ** 2)
    if var <= 1e-24 * max(1.0, np.mean(img ** 2)):
        raise DegenerateImageError("cannot normalize a constant image")
    out = centered / np.sqrt(var)
    # second pass removes residual rounding in mean/std
    out -= out.mean()
    return out / np.sqrt(np.mean(out ** 2))
