"""
Binary PGM (P5) reading and writing.

8-bit and 16-bit rasters are supported; 16-bit samples are big-endian as the
Netpbm format requires. Comments in the header are skipped.
"""

import logging
from pathlib import Path
from typing import Tuple

import numpy as np

from .exceptions import FormatError, StorageError

logger = logging.getLogger(__name__)


def _read_token(data: bytes, pos: int) -> Tuple[bytes, int]:
    """Next whitespace-delimited header token, skipping '#' comments."""
    length = len(data)
    while pos < length:
        ch = data[pos:pos + 1]
        if ch == b'#':
            while pos < length and data[pos:pos + 1] not in (b'\n', b'\r'):
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < length and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b'#':
        pos += 1
    if start == pos:
        raise FormatError("PGM header ended early", offset=pos)
    return data[start:pos], pos


def decode_pgm(data: bytes) -> Tuple[np.ndarray, int]:
    """
    Decode a P5 raster.

    Args:
        data: Full file contents

    Returns:
        Tuple of (codes as uint16 array of shape (height, width), maxval)
    """
    magic, pos = _read_token(data, 0)
    if magic != b'P5':
        raise FormatError(f"not a binary PGM file (magic {magic[:2]!r})", offset=0)

    fields = []
    for name in ('width', 'height', 'maxval'):
        token, pos = _read_token(data, pos)
        try:
            fields.append(int(token))
        except ValueError:
            raise FormatError(f"invalid PGM {name} {token!r}", offset=pos - len(token))
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise FormatError(f"invalid PGM dimensions {width}x{height}", offset=pos)
    if not 0 < maxval < 65536:
        raise FormatError(f"invalid PGM maxval {maxval}", offset=pos)

    # Exactly one whitespace byte separates the header from the raster.
    pos += 1
    dtype = np.dtype('u1') if maxval < 256 else np.dtype('>u2')
    expected = width * height * dtype.itemsize
    if len(data) - pos < expected:
        raise FormatError(
            f"PGM raster truncated: expected {expected} bytes, found {len(data) - pos}",
            offset=len(data),
        )
    codes = np.frombuffer(data, dtype=dtype, count=width * height, offset=pos)
    return codes.reshape(height, width).astype(np.uint16), maxval


def read_pgm(path) -> Tuple[np.ndarray, int]:
    """Read a P5 file from disk; see decode_pgm."""
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise StorageError(f"cannot read image ({e.strerror})", path=path)
    return decode_pgm(data)


def write_pgm(codes: np.ndarray, path, maxval: int = None) -> Path:
    """
    Write an integer grid as a P5 file.

    Args:
        codes: 2-D array of non-negative integer codes
        path: Destination file
        maxval: Header maxval; defaults to 255 for uint8 input and 65535 otherwise

    Returns:
        Path written
    """
    codes = np.asarray(codes)
    if codes.ndim != 2:
        raise FormatError(f"PGM rasters are 2-D, got shape {codes.shape}")
    if maxval is None:
        maxval = 255 if codes.dtype == np.uint8 else 65535
    dtype = np.dtype('u1') if maxval < 256 else np.dtype('>u2')

    height, width = codes.shape
    header = f"P5\n{width} {height}\n{maxval}\n".encode('ascii')
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'wb') as f:
            f.write(header)
            f.write(np.ascontiguousarray(codes, dtype=dtype).tobytes())
    except OSError as e:
        raise StorageError(f"cannot write image ({e.strerror})", path=path)

    logger.debug(f"Wrote {width}x{height} PGM (maxval {maxval}) to {path}")
    return path
