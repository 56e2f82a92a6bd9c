"""
Reference-frame binarization for ghost imaging.

Four strategies are supported:

* none            -- frames are used as recorded (TGI)
* mean            -- one threshold per frame at its mean intensity (MBGI)
* otsu            -- one threshold per frame from Otsu's method (OBGI)
* point_by_point  -- a per-pixel threshold map propagated from block-corner
                     Otsu values and blended with the frame's global Otsu
                     threshold by a harmonic factor alpha (PPBGI)

Point-by-point thresholds are built per block of k1 x k2 pixels. The top-left
threshold of a block is the Otsu threshold of the block itself; the first row
and first column interpolate linearly toward the right and lower neighbour
blocks' corners; every remaining pixel is a normalized, geometrically decaying
weighted mean of the thresholds already assigned above and to the left of it.
"""

import logging
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Optional, Tuple, Union

import numpy as np

from .exceptions import DimensionError, ParameterError
from .speckle import ReferenceFrame

logger = logging.getLogger(__name__)

DEFAULT_LEVELS = 256

METHOD_TAGS = ('none', 'mean', 'otsu', 'point_by_point')

# Command-line names and their method tags.
METHOD_ALIASES = {
    'tgi': 'none',
    'none': 'none',
    'mbgi': 'mean',
    'mean': 'mean',
    'obgi': 'otsu',
    'otsu': 'otsu',
    'ppbgi': 'point_by_point',
    'point_by_point': 'point_by_point',
}

_LABELS = {'none': 'tgi', 'mean': 'mbgi', 'otsu': 'obgi', 'point_by_point': 'ppbgi'}


def _intensity(frame) -> np.ndarray:
    if isinstance(frame, ReferenceFrame):
        return frame.intensity
    return np.asarray(frame, dtype=np.float64)


@dataclass(frozen=True)
class QuantizedFrame:
    """Frame mapped linearly from [lo, hi] onto integer codes 0..levels-1."""
    codes: np.ndarray
    lo: float
    hi: float
    levels: int
    histogram: np.ndarray

    def intensity_of(self, code: int) -> float:
        """Intensity represented by a code."""
        if self.hi == self.lo:
            return float(self.lo)
        return float(self.lo + code * (self.hi - self.lo) / (self.levels - 1))


@dataclass(frozen=True)
class BlockSpec:
    """Block size (k1 rows by k2 columns) of the point-by-point partition."""
    k1: int
    k2: int

    def __post_init__(self):
        for name in ('k1', 'k2'):
            value = getattr(self, name)
            if int(value) != value or value < 2:
                raise ParameterError(f"block {name} must be an integer >= 2, got {value}")

    @classmethod
    def parse(cls, text: str) -> 'BlockSpec':
        """Parse 'k1xk2' (or a single 'k' for square blocks)."""
        parts = str(text).lower().replace('*', 'x').split('x')
        try:
            sizes = [int(p) for p in parts]
        except ValueError:
            raise ParameterError(f"block must look like 16x16, got {text!r}")
        if len(sizes) == 1:
            sizes = sizes * 2
        if len(sizes) != 2:
            raise ParameterError(f"block must look like 16x16, got {text!r}")
        return cls(*sizes)

    def check_fits(self, shape: Tuple[int, int]) -> None:
        if shape[0] < self.k1 or shape[1] < self.k2:
            raise DimensionError(
                f"frame {shape[0]}x{shape[1]} is smaller than one {self.k1}x{self.k2} block"
            )

    def __str__(self):
        return f"{self.k1}x{self.k2}"


@dataclass(frozen=True)
class ThresholdMap:
    """Per-pixel local thresholds, the global threshold and their blend."""
    local: np.ndarray
    global_t: float
    alpha: Optional[float] = None
    effective: Optional[np.ndarray] = None

    @property
    def shape(self) -> Tuple[int, int]:
        return self.local.shape


@dataclass(frozen=True)
class BinaryFrame:
    """Binarized reference frame with bits in {0, 1}."""
    bits: np.ndarray
    frame_index: int = 0

    @property
    def shape(self) -> Tuple[int, int]:
        return self.bits.shape

    @property
    def intensity(self) -> np.ndarray:
        return self.bits


@dataclass(frozen=True)
class BinarizationMethod:
    """A binarization strategy and its parameters."""
    tag: str
    block: Optional[BlockSpec] = None
    alpha: Optional[float] = None
    levels: int = DEFAULT_LEVELS

    def __post_init__(self):
        if self.tag not in METHOD_TAGS:
            raise ParameterError(f"unknown binarization method {self.tag!r}")
        has_params = self.block is not None and self.alpha is not None
        if self.tag == 'point_by_point' and not has_params:
            raise ParameterError("point_by_point binarization needs a block size and alpha")
        if self.tag != 'point_by_point' and (self.block is not None or self.alpha is not None):
            raise ParameterError(f"{self.tag} binarization takes no block size or alpha")
        if self.alpha is not None and not 0.0 <= self.alpha <= 1.0:
            raise ParameterError(f"alpha must be in [0, 1], got {self.alpha}")
        if int(self.levels) != self.levels or self.levels < 2:
            raise ParameterError(f"levels must be an integer >= 2, got {self.levels}")

    @classmethod
    def parse(cls, text: str, block: BlockSpec, alpha: float,
              levels: int = DEFAULT_LEVELS) -> 'BinarizationMethod':
        """
        Build a method from its command-line name.

        Args:
            text: 'tgi', 'mbgi', 'obgi', 'ppbgi' (or none/mean/otsu/point_by_point);
                  'ppbgi:0.4' overrides alpha for that entry
            block: Block size used by point-by-point entries
            alpha: Default harmonic factor for point-by-point entries
            levels: Histogram levels for the Otsu-based methods

        Returns:
            BinarizationMethod
        """
        name, _, override = str(text).strip().lower().partition(':')
        tag = METHOD_ALIASES.get(name)
        if tag is None:
            raise ParameterError(
                f"unknown method {text!r}; expected one of {', '.join(sorted(METHOD_ALIASES))}"
            )
        if tag != 'point_by_point':
            if override:
                raise ParameterError(f"only point-by-point methods take an alpha, got {text!r}")
            return cls(tag, levels=levels)
        if override:
            try:
                alpha = float(override)
            except ValueError:
                raise ParameterError(f"invalid alpha in method {text!r}")
        return cls(tag, block=block, alpha=alpha, levels=levels)

    @property
    def label(self) -> str:
        """Short name used in file names and CSV rows."""
        if self.tag == 'point_by_point':
            return f"ppbgi_a{self.alpha:g}"
        return _LABELS[self.tag]


# ---------------------------------------------------------------------------
# Quantization and global thresholds
# ---------------------------------------------------------------------------

def _quantize_rows(values: np.ndarray, levels: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Quantize each row of a (B, N) array with its own min-max range.

    Returns:
        Tuple of (codes (B, N) int64, lo (B,), hi (B,))
    """
    lo = values.min(axis=1)
    hi = values.max(axis=1)
    span = hi - lo
    flat = span == 0
    safe_span = np.where(flat, 1.0, span)
    scaled = (values - lo[:, None]) / safe_span[:, None] * (levels - 1) + 0.5
    codes = np.clip(np.floor(scaled), 0, levels - 1).astype(np.int64)
    codes[flat] = 0
    return codes, lo, hi


def _histograms(codes: np.ndarray, levels: int) -> np.ndarray:
    rows = codes.shape[0]
    offsets = np.arange(rows, dtype=np.int64)[:, None] * levels
    counts = np.bincount((codes + offsets).ravel(), minlength=rows * levels)
    return counts.reshape(rows, levels)


def quantize(frame: Union[ReferenceFrame, np.ndarray], levels: int = DEFAULT_LEVELS) -> QuantizedFrame:
    """
    Map a frame's intensities onto ``levels`` integer codes.

    Codes are floor((v - lo) / (hi - lo) * (levels - 1) + 0.5) with lo and hi
    the frame minimum and maximum; a constant frame maps entirely to code 0.
    """
    if int(levels) != levels or levels < 2:
        raise ParameterError(f"levels must be an integer >= 2, got {levels}")
    values = _intensity(frame)
    codes, lo, hi = _quantize_rows(values.reshape(1, -1), levels)
    histogram = _histograms(codes, levels)[0]
    return QuantizedFrame(
        codes=codes.reshape(values.shape),
        lo=float(lo[0]),
        hi=float(hi[0]),
        levels=int(levels),
        histogram=histogram,
    )


def _otsu_levels(histograms: np.ndarray) -> np.ndarray:
    """
    Otsu split level for each histogram row.

    Class 0 holds codes <= k. The between-class variance (scaled by N^2) is
    (s0*n1 - s1*n0)^2 / (n0*n1), evaluated from exact integer partial sums;
    the smallest maximizing k wins. A histogram with a single occupied bin
    returns that bin.
    """
    histograms = np.asarray(histograms, dtype=np.int64)
    levels = histograms.shape[1]
    index = np.arange(levels, dtype=np.int64)

    n0 = np.cumsum(histograms, axis=1)[:, :-1]
    s0 = np.cumsum(histograms * index, axis=1)[:, :-1]
    total_n = histograms.sum(axis=1, keepdims=True)
    total_s = (histograms * index).sum(axis=1, keepdims=True)
    n1 = total_n - n0
    s1 = total_s - s0

    spread = (s0 * n1 - s1 * n0).astype(np.float64)
    weight = (n0 * n1).astype(np.float64)
    between = np.zeros_like(spread)
    np.divide(spread * spread, weight, out=between, where=weight > 0)
    best = np.argmax(between, axis=1)

    occupied = np.count_nonzero(histograms, axis=1)
    single = occupied == 1
    if np.any(single):
        best[single] = np.argmax(histograms[single] > 0, axis=1)
    return best


def otsu_level(histogram: np.ndarray) -> int:
    """Otsu split level k* of one histogram."""
    histogram = np.asarray(histogram)
    if histogram.ndim != 1 or histogram.size < 2 or histogram.sum() == 0:
        raise ParameterError("Otsu thresholding needs a non-empty histogram of at least 2 levels")
    return int(_otsu_levels(histogram[None, :])[0])


def otsu_threshold(q: QuantizedFrame) -> float:
    """Intensity threshold lo + k*·(hi - lo)/(L - 1) of a quantized frame."""
    return q.intensity_of(otsu_level(q.histogram))


def global_otsu_threshold(frame, levels: int = DEFAULT_LEVELS) -> float:
    """Otsu threshold of a whole frame."""
    return otsu_threshold(quantize(frame, levels))


def mean_threshold(frame) -> float:
    """Arithmetic mean intensity of a frame."""
    values = _intensity(frame)
    if values.size == 0:
        raise DimensionError("cannot threshold an empty frame")
    return float(values.mean())


# ---------------------------------------------------------------------------
# Point-by-point threshold map
# ---------------------------------------------------------------------------

def fill_block_edges(corner: float, right: float, below: float, k1: int, k2: int) -> np.ndarray:
    """
    Block of thresholds with only the first row and first column assigned.

    The first row runs linearly from the block's own corner toward the right
    neighbour's corner, the first column toward the lower neighbour's corner;
    weights are normalized by k2 (k1) so j = 1 (i = 1) reproduces the corner.
    Unassigned entries are NaN.
    """
    block = np.full((k1, k2), np.nan)
    j = np.arange(1, k2 + 1, dtype=np.float64)
    block[0, :] = ((j - 1) * right + (k2 - j + 1) * corner) / k2
    i = np.arange(1, k1 + 1, dtype=np.float64)
    block[:, 0] = ((i - 1) * below + (k1 - i + 1) * corner) / k1
    block[0, 0] = corner
    return block


@lru_cache(maxsize=64)
def _interior_weights(r: int, c: int) -> np.ndarray:
    """
    Normalized weights over the r x c sub-block for target (r, c), 1-based.

    Point (i, j) gets q^((r - i) + (c - j)) with q = 1 - 1/(r + c - 1); the
    target itself is excluded and the weights sum to 1.
    """
    q = 1.0 - 1.0 / (r + c - 1)
    ii, jj = np.mgrid[1:r + 1, 1:c + 1]
    weights = q ** ((r - ii) + (c - jj))
    weights[r - 1, c - 1] = 0.0
    weights /= weights.sum()
    weights.setflags(write=False)
    return weights


def fill_block_interior(block: np.ndarray) -> np.ndarray:
    """
    Assign every interior threshold of a block, row by row.

    Args:
        block: k1 x k2 array whose first row and first column are set

    Returns:
        The same array, completed in place
    """
    k1, k2 = block.shape
    for r in range(2, k1 + 1):
        for c in range(2, k2 + 1):
            # unassigned target; its weight is zero
            block[r - 1, c - 1] = 0.0
            block[r - 1, c - 1] = np.sum(_interior_weights(r, c) * block[:r, :c])
    return block


@lru_cache(maxsize=16)
def _block_templates(k1: int, k2: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Influence of the right and lower neighbour corners on every block pixel.

    The propagation is linear and reproduces constants, so a block with own
    corner C and neighbour corners R, D is C + (R - C)·A + (D - C)·B.
    """
    toward_right = fill_block_interior(fill_block_edges(0.0, 1.0, 0.0, k1, k2))
    toward_below = fill_block_interior(fill_block_edges(0.0, 0.0, 1.0, k1, k2))
    toward_right.setflags(write=False)
    toward_below.setflags(write=False)
    return toward_right, toward_below


def threshold_map_from_corners(corners: np.ndarray, block: BlockSpec) -> np.ndarray:
    """
    Expand a grid of block-corner thresholds into a per-pixel map.

    Blocks in the last block row (column) have no lower (right) neighbour and
    use their own corner in its place.

    Args:
        corners: (block rows, block cols) corner thresholds
        block: Block size

    Returns:
        Array of shape (block rows * k1, block cols * k2)
    """
    corners = np.asarray(corners, dtype=np.float64)
    n_rows, n_cols = corners.shape
    right = corners.copy()
    right[:, :-1] = corners[:, 1:]
    below = corners.copy()
    below[:-1, :] = corners[1:, :]

    toward_right, toward_below = _block_templates(block.k1, block.k2)
    tiles = (corners[:, :, None, None]
             + (right - corners)[:, :, None, None] * toward_right
             + (below - corners)[:, :, None, None] * toward_below)
    return tiles.transpose(0, 2, 1, 3).reshape(n_rows * block.k1, n_cols * block.k2)


def block_corner_thresholds(frame, block: BlockSpec, levels: int = DEFAULT_LEVELS) -> np.ndarray:
    """
    Otsu threshold of every block, each block quantized over its own range.

    Frames whose size is not a multiple of the block are edge-replicated up to
    the next multiple first.
    """
    values = _intensity(frame)
    block.check_fits(values.shape)
    n_rows = -(-values.shape[0] // block.k1)
    n_cols = -(-values.shape[1] // block.k2)
    pad = ((0, n_rows * block.k1 - values.shape[0]), (0, n_cols * block.k2 - values.shape[1]))
    if pad[0][1] or pad[1][1]:
        values = np.pad(values, pad, mode='edge')

    blocks = (values.reshape(n_rows, block.k1, n_cols, block.k2)
              .transpose(0, 2, 1, 3)
              .reshape(n_rows * n_cols, block.k1 * block.k2))
    codes, lo, hi = _quantize_rows(blocks, levels)
    best = _otsu_levels(_histograms(codes, levels))
    thresholds = lo + best * (hi - lo) / (levels - 1)
    return thresholds.reshape(n_rows, n_cols)


def ppb_threshold_map(frame, block: BlockSpec, levels: int = DEFAULT_LEVELS) -> ThresholdMap:
    """
    Point-by-point local threshold map and global Otsu threshold of a frame.

    Args:
        frame: ReferenceFrame or 2-D array of intensities
        block: Block size (k1, k2)
        levels: Histogram levels used by every Otsu evaluation

    Returns:
        ThresholdMap with ``local`` and ``global_t`` set; alpha unset
    """
    values = _intensity(frame)
    corners = block_corner_thresholds(values, block, levels)
    local = threshold_map_from_corners(corners, block)[:values.shape[0], :values.shape[1]]
    global_t = global_otsu_threshold(values, levels)
    logger.debug(f"Threshold map {block}: corners in [{corners.min():.4g}, {corners.max():.4g}], "
                 f"global {global_t:.4g}")
    return ThresholdMap(local=local, global_t=global_t)


def harmonize(threshold_map: ThresholdMap, alpha: float) -> ThresholdMap:
    """Blend local and global thresholds: (1 - alpha)·T + alpha·t."""
    if not 0.0 <= alpha <= 1.0:
        raise ParameterError(f"alpha must be in [0, 1], got {alpha}")
    effective = (1.0 - alpha) * threshold_map.local + alpha * threshold_map.global_t
    return replace(threshold_map, alpha=float(alpha), effective=effective)


def binarize(frame, effective) -> BinaryFrame:
    """
    Segment a frame against a threshold grid (or a single threshold).

    A pixel is 1 only when its intensity strictly exceeds its threshold.
    """
    values = _intensity(frame)
    effective = np.asarray(effective, dtype=np.float64)
    if effective.ndim != 0 and effective.shape != values.shape:
        raise DimensionError(
            f"threshold shape {effective.shape} does not match frame shape {values.shape}"
        )
    bits = (values > effective).astype(np.uint8)
    return BinaryFrame(bits=bits, frame_index=getattr(frame, 'frame_index', 0))


def binarize_with_method(frame: ReferenceFrame, method: BinarizationMethod):
    """
    Apply a binarization strategy.

    Returns:
        The frame itself for 'none', otherwise a BinaryFrame
    """
    if method.tag == 'none':
        return frame
    if method.tag == 'mean':
        return binarize(frame, mean_threshold(frame))
    if method.tag == 'otsu':
        return binarize(frame, global_otsu_threshold(frame, method.levels))
    threshold_map = harmonize(ppb_threshold_map(frame, method.block, method.levels), method.alpha)
    return binarize(frame, threshold_map.effective)
