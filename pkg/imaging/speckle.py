"""
Pseudo-thermal speckle synthesis and bucket detection.

Frames are low-pass filtered circular complex Gaussian fields turned into
intensity by squared magnitude. Every frame is keyed by (seed, frame_index)
through a counter-based Philox generator, so any frame can be produced on its
own, in any order, on any thread, with bit-identical results.
"""

import hashlib
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Optional, Tuple

import numpy as np
from scipy.ndimage import gaussian_filter

from .exceptions import DimensionError, ParameterError

logger = logging.getLogger(__name__)

# Gaussian kernel is cut off at this many standard deviations.
KERNEL_TRUNCATE = 4.0

# Philox key words: the field and the detector noise draw from separate streams.
_FIELD_STREAM = 0
_NOISE_STREAM = 1

_UINT64_MAX = 2 ** 64 - 1


@dataclass(frozen=True)
class SpeckleParams:
    """Grid size, grain size and brightness of the simulated source."""
    rows: int
    cols: int
    grain_sigma: float
    mean_intensity: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if int(self.rows) != self.rows or self.rows < 1:
            raise ParameterError(f"rows must be a positive integer, got {self.rows}")
        if int(self.cols) != self.cols or self.cols < 1:
            raise ParameterError(f"cols must be a positive integer, got {self.cols}")
        if not np.isfinite(self.grain_sigma) or self.grain_sigma < 0:
            raise ParameterError(f"grain_sigma must be >= 0, got {self.grain_sigma}")
        if not np.isfinite(self.mean_intensity) or self.mean_intensity <= 0:
            raise ParameterError(f"mean_intensity must be > 0, got {self.mean_intensity}")
        if int(self.seed) != self.seed or not 0 <= self.seed <= _UINT64_MAX:
            raise ParameterError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.rows, self.cols)


@dataclass(frozen=True)
class ReferenceFrame:
    """One CCD-plane speckle realization."""
    intensity: np.ndarray
    frame_index: int = 0

    @property
    def shape(self) -> Tuple[int, int]:
        return self.intensity.shape


@dataclass(frozen=True)
class BucketSample:
    """Bucket detector reading paired with the frame of the same index."""
    value: float
    frame_index: int = 0


@dataclass
class MeasurementRun:
    """
    K paired (frame, bucket) measurements.

    Frames are either held as sequences (``frames``/``buckets``, e.g. a
    memory-mapped stack file) or generated on demand from ``params`` and
    ``object_mask`` when ``pairs()`` is iterated.
    """
    count: int
    params_fingerprint: str
    params: Optional[SpeckleParams] = None
    object_mask: Optional[object] = None
    noise_std: float = 0.0
    frames: Optional[list] = None
    buckets: Optional[list] = None
    shape: Tuple[int, int] = field(default=(0, 0))

    def pair(self, index: int) -> Tuple[ReferenceFrame, BucketSample]:
        """The (frame, bucket) pair with frame_index ``index``."""
        if not 0 <= index < self.count:
            raise IndexError(f"frame {index} outside run of {self.count}")
        if self.frames is None:
            return measure_pair(self.params, self.object_mask, index, self.noise_std)
        frame, bucket = self.frames[index], self.buckets[index]
        if not isinstance(frame, ReferenceFrame):
            frame = ReferenceFrame(intensity=np.asarray(frame), frame_index=index)
        if not isinstance(bucket, BucketSample):
            bucket = BucketSample(value=float(bucket), frame_index=index)
        return frame, bucket

    def pairs(self, start: int = 0, stop: Optional[int] = None) -> Iterator[Tuple[ReferenceFrame, BucketSample]]:
        """Yield (frame, bucket) pairs in frame_index order."""
        stop = self.count if stop is None else min(stop, self.count)
        for index in range(start, stop):
            yield self.pair(index)

    def __iter__(self):
        return self.pairs()

    def __len__(self) -> int:
        return self.count


def _generator(seed: int, frame_index: int, stream: int) -> np.random.Generator:
    """Counter-based generator for one (seed, frame, stream) triple."""
    if frame_index < 0:
        raise ParameterError(f"frame_index must be >= 0, got {frame_index}")
    key = np.array([seed, (frame_index << 1) | stream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@lru_cache(maxsize=32)
def kernel_energy(grain_sigma: float) -> float:
    """
    Sum of squared weights of the separable 2-D Gaussian kernel.

    Low-pass filtering unit-variance white noise leaves this much variance, so
    dividing by it keeps the expected frame mean at ``mean_intensity``.
    """
    if grain_sigma == 0:
        return 1.0
    radius = int(KERNEL_TRUNCATE * grain_sigma + 0.5)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    phi = np.exp(-0.5 * (x / grain_sigma) ** 2)
    phi /= phi.sum()
    return float(np.sum(phi ** 2) ** 2)


def generate_frame(params: SpeckleParams, frame_index: int) -> ReferenceFrame:
    """
    Synthesize one speckle intensity frame.

    Args:
        params: Grid and source parameters
        frame_index: Position of the frame in the measurement sequence

    Returns:
        ReferenceFrame of shape (rows, cols) with non-negative intensities
    """
    rng = _generator(params.seed, frame_index, _FIELD_STREAM)
    # Circular complex Gaussian: each quadrature has variance 1/2.
    noise = rng.standard_normal((2, params.rows, params.cols)) * np.sqrt(0.5)
    re, im = noise[0], noise[1]

    if params.grain_sigma > 0:
        re = gaussian_filter(re, params.grain_sigma, mode='reflect', truncate=KERNEL_TRUNCATE)
        im = gaussian_filter(im, params.grain_sigma, mode='reflect', truncate=KERNEL_TRUNCATE)

    scale = params.mean_intensity / kernel_energy(params.grain_sigma)
    intensity = (re * re + im * im) * scale
    return ReferenceFrame(intensity=intensity, frame_index=frame_index)


def bucket_measure(frame: ReferenceFrame, object_mask) -> BucketSample:
    """
    Total intensity transmitted through the object.

    Test and reference arms carry identical patterns, so the bucket value is
    the transmission-weighted sum of the reference frame.
    """
    transmission = object_mask.transmission
    if frame.shape != transmission.shape:
        raise DimensionError(
            f"frame shape {frame.shape} does not match object shape {transmission.shape}"
        )
    value = float(np.sum(transmission * frame.intensity))
    return BucketSample(value=max(value, 0.0), frame_index=frame.frame_index)


def measure_pair(
    params: SpeckleParams,
    object_mask,
    frame_index: int,
    noise_std: float = 0.0,
) -> Tuple[ReferenceFrame, BucketSample]:
    """Generate frame ``frame_index`` and its bucket reading, with optional detector noise."""
    frame = generate_frame(params, frame_index)
    bucket = bucket_measure(frame, object_mask)
    if noise_std > 0:
        rng = _generator(params.seed, frame_index, _NOISE_STREAM)
        noisy = bucket.value + noise_std * rng.standard_normal()
        bucket = BucketSample(value=max(float(noisy), 0.0), frame_index=frame_index)
    return frame, bucket


def run_fingerprint(params: SpeckleParams, object_mask, count: int, noise_std: float = 0.0) -> str:
    """Digest of the parameters and the object that determine a run."""
    digest = hashlib.sha256()
    digest.update(repr((params.rows, params.cols, float(params.grain_sigma),
                        float(params.mean_intensity), int(params.seed),
                        int(count), float(noise_std))).encode())
    digest.update(getattr(object_mask, 'label', '').encode())
    digest.update(np.ascontiguousarray(object_mask.transmission, dtype='<f8').tobytes())
    return digest.hexdigest()


def generate_run(params: SpeckleParams, object_mask, count: int, noise_std: float = 0.0) -> MeasurementRun:
    """
    Lazily generated measurement run of ``count`` frames.

    Args:
        params: Source parameters (shape must match the object)
        object_mask: ObjectMask placed in the test arm
        count: Number of measurements K
        noise_std: Standard deviation of additive bucket noise (0 disables it)

    Returns:
        MeasurementRun whose pairs are produced on iteration
    """
    if int(count) != count or count < 1:
        raise ParameterError(f"count must be a positive integer, got {count}")
    if noise_std < 0:
        raise ParameterError(f"noise_std must be >= 0, got {noise_std}")
    if object_mask.transmission.shape != params.shape:
        raise DimensionError(
            f"object shape {object_mask.transmission.shape} does not match grid {params.shape}"
        )

    logger.debug(f"Measurement run: {count} frames of {params.rows}x{params.cols}, "
                 f"grain_sigma={params.grain_sigma}, seed={params.seed}")
    return MeasurementRun(
        count=int(count),
        params_fingerprint=run_fingerprint(params, object_mask, count, noise_std),
        params=params,
        object_mask=object_mask,
        noise_std=noise_std,
        shape=params.shape,
    )
