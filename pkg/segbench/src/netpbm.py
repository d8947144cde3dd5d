"""Binary PPM (P6) and PGM (P5) images with 8-bit samples, read and written through Pillow."""

import io
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import FormatError, MissingFileError, OutputError

_WHITESPACE = b" \t\n\r\v\f"
_MODES = {b"P5": "L", b"P6": "RGB"}


def _next_token(data, pos, path):
    # 空白とコメントを読み飛ばす
    while pos < len(data):
        if data[pos] in _WHITESPACE:
            pos += 1
        elif data[pos] == ord("#"):
            while pos < len(data) and data[pos] not in b"\r\n":
                pos += 1
        else:
            break
    start = pos
    while pos < len(data) and data[pos] not in _WHITESPACE and data[pos] != ord("#"):
        pos += 1
    if start == pos:
        raise FormatError("unexpected end of header", start, path)
    return data[start:pos], start, pos


def _header_int(data, pos, path, name):
    token, start, pos = _next_token(data, pos, path)
    if not token.isdigit():
        raise FormatError(f"expected {name}, found {token[:16]!r}", start, path)
    value = int(token)
    if value < 1:
        raise FormatError(f"{name} must be positive, got {value}", start, path)
    return value, start, pos


def check_header(data, path=None):
    """
    Validate a P5/P6 header and the raster length so broken files fail with the byte offset of
    the problem instead of a decoder message. Returns the Pillow mode, width, height and the
    offset where the raster starts.
    """
    magic = bytes(data[:2])
    if magic not in _MODES:
        raise FormatError(f"unsupported magic number {magic!r}, expected P5 or P6", 0, path)
    width, _, pos = _header_int(data, 2, path, "width")
    height, _, pos = _header_int(data, pos, path, "height")
    maxval, start, pos = _header_int(data, pos, path, "maxval")
    if maxval != 255:
        raise FormatError(f"maxval {maxval} is not supported, expected 255", start, path)
    if pos >= len(data) or data[pos] not in _WHITESPACE:
        raise FormatError("missing whitespace after maxval", pos, path)
    raster_start = pos + 1
    expected = width * height * (3 if magic == b"P6" else 1)
    available = len(data) - raster_start
    if available < expected:
        raise FormatError(f"raster truncated: {available} of {expected} bytes present", len(data), path)
    return _MODES[magic], width, height, raster_start


def decode(data, path=None):
    """uint8 pixels of shape [H, W] for PGM or [H, W, 3] for PPM."""
    mode, width, height, raster_start = check_header(data, path)
    try:
        with Image.open(io.BytesIO(data), formats=["PPM"]) as img:
            img.load()
            decoded = img.mode, img.size
            pixels = np.array(img, dtype=np.uint8)
    except (OSError, ValueError) as e:
        raise FormatError(f"cannot decode raster: {e}", raster_start, path) from e
    if decoded != (mode, (width, height)):
        raise FormatError(f"decoded {decoded}, header says {mode} {width}x{height}", raster_start, path)
    return pixels


def read(path):
    path = Path(path)
    try:
        data = path.read_bytes()
    except FileNotFoundError:
        raise MissingFileError(f"image file not found: {path}") from None
    return decode(data, path)


def write(path, pixels):
    """Save a [H, W] array as PGM or a [H, W, 3] array as PPM."""
    pixels = np.asarray(pixels)
    if pixels.dtype != np.uint8:
        raise FormatError(f"pixels must be uint8, got {pixels.dtype}")
    if not (pixels.ndim == 2 or (pixels.ndim == 3 and pixels.shape[2] == 3)):
        raise FormatError(f"cannot encode array of shape {pixels.shape} as PGM/PPM")
    image = Image.fromarray(np.ascontiguousarray(pixels))
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        image.save(path, format="PPM")
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e.strerror or e}") from e
