"""
Intensity-fluctuation correlation with mergeable streaming accumulators.

The ghost image is G(u) = <B·I(u)> - <B><I(u)>, with B the bucket signal and
I the (raw or binarized) reference frame. Accumulators keep only sufficient
statistics, so frames can be streamed, sharded across workers and merged.
"""

import logging
from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Optional, Tuple

import numpy as np

from .exceptions import DimensionError, InsufficientDataError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Reconstruction:
    """Correlation image G from ``count`` measurements."""
    image: np.ndarray
    count: int
    method: str = 'none'

    @property
    def shape(self) -> Tuple[int, int]:
        return self.image.shape


@dataclass
class CorrelationAccumulator:
    """
    Running sums for the fluctuation correlation.

    With ``compensated=True`` every sum carries a Kahan compensation term;
    merging adds both sums and compensations.
    """
    shape: Tuple[int, int]
    count: int = 0
    sum_bucket: float = 0.0
    sum_bucket_sq: float = 0.0
    sum_ref: np.ndarray = None
    sum_bucket_ref: np.ndarray = None
    compensated: bool = False
    _carry: Optional[dict] = field(default=None, repr=False)

    def __post_init__(self):
        self.shape = tuple(int(s) for s in self.shape)
        if len(self.shape) != 2 or min(self.shape) < 1:
            raise DimensionError(f"accumulator shape must be 2-D and non-empty, got {self.shape}")
        if self.sum_ref is None:
            self.sum_ref = np.zeros(self.shape)
        if self.sum_bucket_ref is None:
            self.sum_bucket_ref = np.zeros(self.shape)
        if self.compensated and self._carry is None:
            self._carry = {
                'sum_bucket': 0.0,
                'sum_bucket_sq': 0.0,
                'sum_ref': np.zeros(self.shape),
                'sum_bucket_ref': np.zeros(self.shape),
            }

    @classmethod
    def new(cls, shape, compensated: bool = False) -> 'CorrelationAccumulator':
        """Empty accumulator for frames of ``shape``."""
        return cls(shape=shape, compensated=compensated)

    def _add(self, name: str, value):
        if not self.compensated:
            setattr(self, name, getattr(self, name) + value)
            return
        total = getattr(self, name)
        adjusted = value - self._carry[name]
        updated = total + adjusted
        self._carry[name] = (updated - total) - adjusted
        setattr(self, name, updated)

    def update(self, bucket, ref) -> 'CorrelationAccumulator':
        """
        Add one measurement.

        Args:
            bucket: BucketSample or bucket value
            ref: ReferenceFrame, BinaryFrame or 2-D array

        Returns:
            self
        """
        value = float(getattr(bucket, 'value', bucket))
        grid = np.asarray(getattr(ref, 'intensity', ref), dtype=np.float64)
        if grid.shape != self.shape:
            raise DimensionError(f"reference shape {grid.shape} does not match accumulator {self.shape}")

        self.count += 1
        self._add('sum_bucket', value)
        self._add('sum_bucket_sq', value * value)
        self._add('sum_ref', grid)
        self._add('sum_bucket_ref', value * grid)
        return self

    def merge(self, other: 'CorrelationAccumulator') -> 'CorrelationAccumulator':
        """Componentwise sum of two accumulators (neither input is modified)."""
        if self.shape != other.shape:
            raise DimensionError(f"cannot merge accumulators of shape {self.shape} and {other.shape}")
        compensated = self.compensated or other.compensated
        merged = CorrelationAccumulator(
            shape=self.shape,
            count=self.count + other.count,
            sum_bucket=self.sum_bucket + other.sum_bucket,
            sum_bucket_sq=self.sum_bucket_sq + other.sum_bucket_sq,
            sum_ref=self.sum_ref + other.sum_ref,
            sum_bucket_ref=self.sum_bucket_ref + other.sum_bucket_ref,
            compensated=compensated,
        )
        if compensated:
            for name in merged._carry:
                merged._carry[name] = self._carry_of(name) + other._carry_of(name)
        return merged

    def _carry_of(self, name: str):
        if not self.compensated:
            return 0.0
        return self._carry[name]

    def _total(self, name: str):
        return getattr(self, name) - self._carry_of(name)

    def bucket_variance(self) -> float:
        """Population variance of the bucket signal."""
        if self.count < 2:
            raise InsufficientDataError(f"need at least 2 measurements, have {self.count}")
        mean = self._total('sum_bucket') / self.count
        return max(self._total('sum_bucket_sq') / self.count - mean * mean, 0.0)

    def finalize(self, method: str = 'none') -> Reconstruction:
        """
        Ghost image from the accumulated sums.

        Returns:
            Reconstruction with G = sum(B·I)/K - (sum(B)/K)·(sum(I)/K)
        """
        if self.count < 2:
            raise InsufficientDataError(
                f"a reconstruction needs at least 2 measurements, have {self.count}"
            )
        k = float(self.count)
        image = (self._total('sum_bucket_ref') / k
                 - (self._total('sum_bucket') / k) * (self._total('sum_ref') / k))
        return Reconstruction(image=image, count=self.count, method=method)


def merge_all(accumulators: Iterable[CorrelationAccumulator]) -> CorrelationAccumulator:
    """Merge partial results left to right (anything with a ``merge`` method)."""
    return reduce(lambda a, b: a.merge(b), accumulators)


def normalize_display(rec) -> np.ndarray:
    """
    Min-max stretch of a reconstruction to 8-bit codes.

    Codes are floor((g - min) / (max - min) · 255 + 0.5); a constant image maps to 0.
    """
    image = np.asarray(getattr(rec, 'image', rec), dtype=np.float64)
    lo = image.min()
    hi = image.max()
    if hi == lo:
        return np.zeros(image.shape, dtype=np.uint8)
    codes = np.floor((image - lo) / (hi - lo) * 255.0 + 0.5)
    return np.clip(codes, 0, 255).astype(np.uint8)
