"""
Frame stack files.

Layout (all little-endian):

    offset 0   4 bytes   magic "GIFS"
    offset 4   uint16    version (1)
    offset 6   uint32    rows
    offset 10  uint32    cols
    offset 14  uint32    count
    offset 18  count frames of rows*cols float32, row-major
    ...        count float64 bucket values

Reads validate the header and the exact file length before any payload is
touched, so a damaged file never yields a partial run.
"""

import logging
import os
import struct
from pathlib import Path

import numpy as np

from .exceptions import FormatError, StorageError
from .speckle import MeasurementRun

logger = logging.getLogger(__name__)

MAGIC = b'GIFS'
VERSION = 1
HEADER = struct.Struct('<4sHIII')
HEADER_SIZE = HEADER.size  # 18

_U32_MAX = 2 ** 32 - 1


def stack_size(rows: int, cols: int, count: int) -> int:
    """Exact byte length of a stack file."""
    return HEADER_SIZE + count * (rows * cols * 4 + 8)


def write_stack(run: MeasurementRun, path) -> Path:
    """
    Stream a measurement run to disk.

    The file is written under a temporary name and renamed into place once
    complete.

    Args:
        run: Run to persist (generated lazily or loaded)
        path: Destination file

    Returns:
        Path written
    """
    rows, cols = run.shape
    for name, value in (('rows', rows), ('cols', cols), ('count', run.count)):
        if not 0 < value <= _U32_MAX:
            raise FormatError(f"stack {name} {value} does not fit the file header")

    path = Path(path)
    partial = path.with_name(path.name + '.part')
    buckets = np.empty(run.count, dtype='<f8')
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(partial, 'wb') as f:
            f.write(HEADER.pack(MAGIC, VERSION, rows, cols, run.count))
            for index, (frame, bucket) in enumerate(run.pairs()):
                f.write(np.ascontiguousarray(frame.intensity, dtype='<f4').tobytes())
                buckets[index] = bucket.value
            f.write(buckets.tobytes())
        os.replace(partial, path)
    except OSError as e:
        partial.unlink(missing_ok=True)
        raise StorageError(f"cannot write frame stack ({e.strerror})", path=path)
    except BaseException:
        partial.unlink(missing_ok=True)
        raise

    logger.info(f"Wrote {run.count} frames ({rows}x{cols}) to {path}")
    return path


def read_stack(path) -> MeasurementRun:
    """
    Open a stack file as a measurement run.

    Frames are memory-mapped; buckets are read into memory.

    Args:
        path: Stack file

    Returns:
        MeasurementRun whose pairs reproduce the stored frames and buckets bit for bit
    """
    path = Path(path)
    try:
        actual = path.stat().st_size
        with open(path, 'rb') as f:
            header = f.read(HEADER_SIZE)
    except OSError as e:
        raise StorageError(f"cannot read frame stack ({e.strerror})", path=path)

    if len(header) < HEADER_SIZE:
        raise FormatError(f"frame stack header truncated in {path}", offset=len(header))
    magic, version, rows, cols, count = HEADER.unpack(header)
    if magic != MAGIC:
        raise FormatError(f"bad frame stack magic {magic!r} in {path}", offset=0)
    if version != VERSION:
        raise FormatError(f"unsupported frame stack version {version} in {path}", offset=4)
    if rows == 0 or cols == 0 or count == 0:
        raise FormatError(f"empty frame stack dimensions {rows}x{cols}x{count} in {path}", offset=6)

    expected = stack_size(rows, cols, count)
    if actual < expected:
        raise FormatError(
            f"frame stack {path} truncated: expected {expected} bytes, found {actual}", offset=actual
        )
    if actual > expected:
        raise FormatError(
            f"frame stack {path} has {actual - expected} trailing bytes", offset=expected
        )

    frame_bytes = count * rows * cols * 4
    frames = np.memmap(path, dtype='<f4', mode='r', offset=HEADER_SIZE, shape=(count, rows, cols))
    buckets = np.fromfile(path, dtype='<f8', count=count, offset=HEADER_SIZE + frame_bytes)

    logger.info(f"Opened frame stack {path}: {count} frames of {rows}x{cols}")
    return MeasurementRun(
        count=count,
        params_fingerprint=f"stack:{path.name}",
        frames=frames,
        buckets=buckets,
        shape=(rows, cols),
    )
