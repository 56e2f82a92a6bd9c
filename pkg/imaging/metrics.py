"""
Image quality and speckle statistics.

corr() is the Pearson correlation between a reconstruction and the object.
grain_fwhm() measures speckle grain size as the full width at half maximum
of the frame's normalized autocorrelation.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from django.conf import settings
from scipy import fft

from .exceptions import DimensionError, UndefinedMetricError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MetricsReport:
    """Scores of one method on one seeded run."""
    method: str
    seed: int
    count: int
    corr: Optional[float] = None
    fill_fraction: Optional[float] = None
    grain_fwhm_px: Optional[float] = None
    wall_ms: Optional[float] = None

    def as_row(self) -> dict:
        """CSV row; absent values are written as empty fields."""
        def fmt(value, spec):
            return '' if value is None else format(value, spec)

        return {
            'method': self.method,
            'seed': str(self.seed),
            'count': str(self.count),
            'corr': fmt(self.corr, '.6f'),
            'fill_fraction': fmt(self.fill_fraction, '.6f'),
            'grain_fwhm_px': fmt(self.grain_fwhm_px, '.4f'),
            'wall_ms': fmt(self.wall_ms, '.1f'),
        }


def _grid(value) -> np.ndarray:
    for attr in ('image', 'transmission', 'intensity'):
        if hasattr(value, attr):
            value = getattr(value, attr)
            break
    return np.asarray(value, dtype=np.float64)


def corr(g, o) -> float:
    """
    Correlation coefficient Cov(G, O) / sqrt(Var(G)·Var(O)) over all pixels.

    Args:
        g: Reconstruction, or grid of reals
        o: ObjectMask, or grid of reals of the same shape

    Returns:
        Value in [-1, 1]
    """
    g = _grid(g)
    o = _grid(o)
    if g.shape != o.shape:
        raise DimensionError(f"cannot correlate grids of shape {g.shape} and {o.shape}")
    dg = g - g.mean()
    do = o - o.mean()
    var_g = np.mean(dg * dg)
    var_o = np.mean(do * do)
    if var_g == 0 or var_o == 0:
        raise UndefinedMetricError("correlation coefficient is undefined for a constant grid")
    value = np.mean(dg * do) / np.sqrt(var_g * var_o)
    return float(np.clip(value, -1.0, 1.0))


def fill_fraction(b) -> float:
    """Fraction of pixels set in a binary frame."""
    bits = _grid(getattr(b, 'bits', b))
    if bits.size == 0:
        raise DimensionError("fill fraction of an empty frame")
    return float(np.count_nonzero(bits)) / bits.size


def autocorrelation(frame) -> np.ndarray:
    """
    Mean-subtracted periodic autocorrelation normalized to 1 at zero lag.

    Computed through the correlation theorem; index [0, 0] is zero lag.
    """
    values = _grid(frame)
    centred = values - values.mean()
    spectrum = fft.fft2(centred)
    acf = fft.ifft2(spectrum * np.conj(spectrum)).real
    peak = acf[0, 0]
    if peak <= 0:
        raise UndefinedMetricError("autocorrelation is undefined for a constant frame")
    return acf / peak


def grain_fwhm(frame) -> float:
    """
    Speckle grain size in pixels.

    The profile averages the autocorrelation along both lag axes in both
    directions; the half-maximum crossing is linearly interpolated.
    """
    acf = autocorrelation(frame)
    rows, cols = acf.shape
    reach = max(min(rows, cols) // 2, 1)
    lags = np.arange(reach + 1)
    profile = (acf[0, lags] + acf[0, -lags % cols] + acf[lags % rows, 0] + acf[-lags % rows, 0]) / 4.0

    half = settings.GRAIN_HALF_MAXIMUM
    below = np.nonzero(profile <= half)[0]
    if below.size == 0:
        logger.warning(f"Autocorrelation stays above half maximum within {reach} px lag")
        return float(2 * reach)

    d = int(below[0])
    upper, lower = profile[d - 1], profile[d]
    crossing = (d - 1) + (upper - half) / (upper - lower)
    return float(2.0 * crossing)
