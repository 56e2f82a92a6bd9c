"""
Transmission masks for the test arm: the double slit, a built-in grayscale
test object, and masks loaded from PGM or PNG files.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Tuple

import numpy as np
from PIL import Image, UnidentifiedImageError

from .exceptions import FormatError, GeometryError, ParameterError, StorageError
from .pgm import decode_pgm, write_pgm

logger = logging.getLogger(__name__)

PNG_SIGNATURE = b'\x89PNG\r\n\x1a\n'

ORIENTATIONS = ('vertical', 'horizontal')


@dataclass(frozen=True)
class ObjectMask:
    """Transmittance grid with values in [0, 1]."""
    transmission: np.ndarray
    label: str = 'object'

    def __post_init__(self):
        grid = np.array(self.transmission, dtype=np.float64)
        if grid.ndim != 2 or grid.size == 0:
            raise ParameterError(f"object transmission must be a non-empty 2-D grid, got shape {grid.shape}")
        if np.any(~np.isfinite(grid)) or grid.min() < 0 or grid.max() > 1:
            raise ParameterError(f"object '{self.label}' has transmission outside [0, 1]")
        grid.setflags(write=False)
        object.__setattr__(self, 'transmission', grid)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.transmission.shape


@dataclass(frozen=True)
class DoubleSlitSpec:
    """Two identical bars, centered in the grid, ``separation_px`` apart center to center."""
    rows: int
    cols: int
    slit_width_px: int
    separation_px: int
    slit_height_px: int
    orientation: str = 'vertical'

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.rows, self.cols)

    @classmethod
    def from_millimetres(cls, rows: int, cols: int, slit_width_mm: float, separation_mm: float,
                         pitch_mm: float, slit_height_px: int = None,
                         orientation: str = 'vertical') -> 'DoubleSlitSpec':
        """
        Convert physical slit dimensions to pixels at a given pitch.

        Args:
            rows: Grid rows
            cols: Grid columns
            slit_width_mm: Slit width a
            separation_mm: Center-to-center separation d
            pitch_mm: Size of one pixel
            slit_height_px: Bar length in pixels; defaults to half the grid extent
            orientation: 'vertical' bars side by side, or 'horizontal' bars stacked

        Returns:
            DoubleSlitSpec with rounded pixel dimensions
        """
        if pitch_mm <= 0:
            raise ParameterError(f"pitch_mm must be > 0, got {pitch_mm}")
        width = int(round(slit_width_mm / pitch_mm))
        separation = int(round(separation_mm / pitch_mm))
        if slit_height_px is None:
            slit_height_px = (rows if orientation == 'vertical' else cols) // 2
        return cls(rows, cols, width, separation, slit_height_px, orientation)


def make_double_slit(spec: DoubleSlitSpec) -> ObjectMask:
    """
    Binary double-slit mask.

    The pair is centered across the bars and each bar is centered along its
    length; transmission is 1 inside the slits and 0 elsewhere.
    """
    if spec.orientation not in ORIENTATIONS:
        raise ParameterError(f"orientation must be one of {ORIENTATIONS}, got {spec.orientation!r}")
    for name in ('slit_width_px', 'separation_px', 'slit_height_px'):
        if getattr(spec, name) < 1:
            raise GeometryError(f"{name} must be a positive integer, got {getattr(spec, name)}")
    if spec.separation_px < spec.slit_width_px:
        raise GeometryError(
            f"slits overlap: separation {spec.separation_px} px < width {spec.slit_width_px} px"
        )

    # Work in (along, across) coordinates, transpose for horizontal slits.
    if spec.orientation == 'vertical':
        along, across = spec.rows, spec.cols
    else:
        along, across = spec.cols, spec.rows

    span = spec.separation_px + spec.slit_width_px
    if span > across or spec.slit_height_px > along:
        raise GeometryError(
            f"double slit (span {span} px, height {spec.slit_height_px} px) "
            f"does not fit in a {spec.rows}x{spec.cols} grid"
        )

    first = (across - span) // 2
    second = first + spec.separation_px
    top = (along - spec.slit_height_px) // 2

    grid = np.zeros((along, across), dtype=np.float64)
    grid[top:top + spec.slit_height_px, first:first + spec.slit_width_px] = 1.0
    grid[top:top + spec.slit_height_px, second:second + spec.slit_width_px] = 1.0
    if spec.orientation == 'horizontal':
        grid = grid.T.copy()

    label = f"double-slit a={spec.slit_width_px}px d={spec.separation_px}px"
    logger.debug(f"Built {label} on {spec.rows}x{spec.cols}")
    return ObjectMask(transmission=grid, label=label)


def make_feathers(rows: int, cols: int) -> ObjectMask:
    """
    Grayscale bird with outstretched wings.

    Body, head and tail are smooth gray regions; each wing is a fan of narrow
    feathers separated by thin gaps, which needs fine speckle to resolve.
    """
    if rows < 16 or cols < 16:
        raise GeometryError(f"feathers object needs at least 16x16 pixels, got {rows}x{cols}")
    y, x = np.mgrid[0:rows, 0:cols]
    y = 2.0 * (y + 0.5) / rows - 1.0
    x = 2.0 * (x + 0.5) / cols - 1.0

    grid = np.zeros((rows, cols), dtype=np.float64)

    body = ((y - 0.1) / 0.42) ** 2 + (x / 0.13) ** 2 <= 1.0
    grid[body] = 0.75
    head = (y + 0.42) ** 2 + x ** 2 <= 0.11 ** 2
    grid[head] = 0.9
    tail = (y > 0.45) & (y < 0.85) & (np.abs(x) < 0.06 + 0.25 * (y - 0.45))
    grid[tail] = np.maximum(grid[tail], 0.55)

    for side in (-1.0, 1.0):
        dx = side * x - 0.1
        dy = -(y + 0.05)
        radius = np.hypot(dx, dy)
        angle = np.arctan2(dy, dx)
        fan = (radius > 0.05) & (radius < 0.9) & (angle > -0.5) & (angle < 1.1)
        # 14 feathers across the fan; gaps are where the cosine dips.
        stripes = np.cos(14.0 * 2.0 * np.pi * (angle + 0.5) / 1.6)
        feather = np.clip(0.6 + 0.4 * stripes, 0.0, 1.0) * (1.0 - 0.35 * radius)
        feather[stripes < -0.6] = 0.0
        grid[fan] = np.maximum(grid[fan], feather[fan])

    return ObjectMask(transmission=np.clip(grid, 0.0, 1.0), label='feathers')


def _from_codes(codes: np.ndarray, maxval: int, label: str) -> ObjectMask:
    return ObjectMask(transmission=codes.astype(np.float64) / float(maxval), label=label)


def _load_png(path: Path) -> Tuple[np.ndarray, int]:
    try:
        with Image.open(path) as img:
            mode = img.mode
            if mode in ('I;16', 'I;16B', 'I;16L', 'I'):
                return np.array(img, dtype=np.uint32).astype(np.uint16), 65535
            if mode != 'L':
                logger.warning(f"Converting {mode} image {path} to 8-bit grayscale")
                img = img.convert('L')
            return np.array(img, dtype=np.uint16), 255
    except (UnidentifiedImageError, SyntaxError, ValueError) as e:
        raise FormatError(f"unreadable PNG {path}: {e}")


def load_object(path) -> ObjectMask:
    """
    Load a grayscale transmission mask.

    Args:
        path: 8- or 16-bit binary PGM (P5) or PNG file

    Returns:
        ObjectMask with codes divided by the maximum code value of the format
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise StorageError(f"cannot read object ({e.strerror})", path=path)

    if data[:2] == b'P5':
        codes, maxval = decode_pgm(data)
    elif data[:8] == PNG_SIGNATURE:
        codes, maxval = _load_png(path)
    else:
        raise FormatError(f"unsupported object file {path}: expected PGM (P5) or PNG", offset=0)

    mask = _from_codes(codes, maxval, label=path.stem)
    logger.info(f"Loaded object {path} ({mask.shape[0]}x{mask.shape[1]}, maxval {maxval})")
    return mask


def save_object(mask: ObjectMask, path) -> Path:
    """Write a mask as a 16-bit PGM (transmission scaled to 0..65535)."""
    codes = np.floor(mask.transmission * 65535.0 + 0.5).astype(np.uint16)
    return write_pgm(codes, path, maxval=65535)
