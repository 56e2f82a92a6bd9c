"""
Property-based tests for thresholding and binarization.
Tests properties that should hold for every histogram and frame.
"""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from imaging.binarization import (
    BinarizationMethod,
    BlockSpec,
    binarize,
    binarize_with_method,
    block_corner_thresholds,
    harmonize,
    otsu_level,
    ppb_threshold_map,
)


def brute_force_otsu(histogram):
    """Smallest k maximizing w0·w1·(mu0 - mu1)^2, in exact arithmetic."""
    total = sum(histogram)
    occupied = [k for k, count in enumerate(histogram) if count]
    if len(occupied) == 1:
        return occupied[0]
    best_k, best = 0, Fraction(-1)
    for k in range(len(histogram) - 1):
        n0 = sum(histogram[:k + 1])
        n1 = total - n0
        if n0 == 0 or n1 == 0:
            score = Fraction(0)
        else:
            mu0 = Fraction(sum(i * c for i, c in enumerate(histogram[:k + 1])), n0)
            mu1 = Fraction(sum(i * c for i, c in enumerate(histogram[k + 1:], start=k + 1)), n1)
            score = Fraction(n0 * n1, total * total) * (mu0 - mu1) ** 2
        if score > best:
            best_k, best = k, score
    return best_k


histograms = st.lists(st.integers(min_value=0, max_value=20), min_size=2, max_size=16).filter(lambda h: sum(h) > 0)

frames = arrays(
    np.float64,
    (12, 12),
    elements=st.floats(min_value=0.0, max_value=100.0, allow_nan=False, allow_infinity=False),
)


@pytest.mark.property
class TestOtsuProperties:
    """Otsu level selection against an exhaustive oracle."""

    @given(histogram=histograms)
    @settings(max_examples=200)
    def test_matches_exhaustive_search(self, histogram):
        """
        **Property: Otsu level**

        For any non-empty histogram the chosen level equals the smallest
        maximizer of the between-class variance.
        """
        assert otsu_level(np.array(histogram)) == brute_force_otsu(histogram)

    @given(histogram=histograms)
    @settings(max_examples=50)
    def test_level_in_range(self, histogram):
        level = otsu_level(np.array(histogram))
        assert 0 <= level < len(histogram)


@pytest.mark.property
class TestThresholdMapProperties:
    """Point-by-point map invariants."""

    @given(frame=frames)
    @settings(max_examples=50)
    def test_local_thresholds_within_corner_range(self, frame):
        """
        **Property: Threshold map convexity**

        Every local threshold lies within the range of the block-corner Otsu values.
        """
        block = BlockSpec(4, 4)
        corners = block_corner_thresholds(frame, block)
        local = ppb_threshold_map(frame, block).local
        assert local.min() >= corners.min() - 1e-12
        assert local.max() <= corners.max() + 1e-12

    @given(frame=frames, alpha=st.floats(min_value=0.0, max_value=1.0))
    @settings(max_examples=50)
    def test_effective_between_local_and_global(self, frame, alpha):
        threshold_map = harmonize(ppb_threshold_map(frame, BlockSpec(4, 4)), alpha)
        low = np.minimum(threshold_map.local, threshold_map.global_t)
        high = np.maximum(threshold_map.local, threshold_map.global_t)
        assert np.all(threshold_map.effective >= low - 1e-9)
        assert np.all(threshold_map.effective <= high + 1e-9)

    @given(frame=frames, alphas=st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=2, max_size=2))
    @settings(max_examples=50)
    def test_harmonize_monotone_in_alpha(self, frame, alphas):
        """
        **Property: Harmonic monotonicity**

        Raising alpha moves every effective threshold toward the global one:
        up where the global threshold is higher, down where it is lower.
        """
        low_alpha, high_alpha = sorted(alphas)
        threshold_map = ppb_threshold_map(frame, BlockSpec(4, 4))
        before = harmonize(threshold_map, low_alpha).effective
        after = harmonize(threshold_map, high_alpha).effective
        rising = threshold_map.global_t >= threshold_map.local
        assert np.all(after[rising] >= before[rising] - 1e-9)
        assert np.all(after[~rising] <= before[~rising] + 1e-9)

    @given(frame=frames)
    @settings(max_examples=50)
    def test_alpha_one_matches_global_otsu(self, frame):
        """
        **Property: Harmonic limit**

        With alpha = 1 point-by-point binarization equals global Otsu bit for bit.
        """
        ppb = binarize_with_method(frame, BinarizationMethod('point_by_point', BlockSpec(4, 4), alpha=1.0))
        otsu = binarize_with_method(frame, BinarizationMethod('otsu'))
        assert np.array_equal(ppb.bits, otsu.bits)


@pytest.mark.property
class TestBinarizeProperties:

    @given(
        frame=arrays(np.int64, (6, 6), elements=st.integers(min_value=0, max_value=1000)),
        power=st.integers(min_value=-4, max_value=4),
        offset=st.integers(min_value=-1000, max_value=1000),
    )
    @settings(max_examples=50)
    def test_global_methods_invariant_to_affine_intensity(self, frame, power, offset):
        """Mean and Otsu bits do not change when intensities are scaled and shifted."""
        frame = frame.astype(np.float64)
        assume(frame.max() > frame.min())
        transformed = frame * (2.0 ** power) + offset
        for tag in ('mean', 'otsu'):
            method = BinarizationMethod(tag)
            before = binarize_with_method(frame, method).bits
            after = binarize_with_method(transformed, method).bits
            assert np.array_equal(before, after), tag

    @given(frame=frames, threshold=st.floats(min_value=0.0, max_value=100.0))
    @settings(max_examples=50)
    def test_bits_are_binary_and_strict(self, frame, threshold):
        bits = binarize(frame, threshold).bits
        assert set(np.unique(bits)) <= {0, 1}
        assert np.array_equal(bits == 1, frame > threshold)

    @given(
        frame=arrays(np.int64, (6, 6), elements=st.integers(min_value=0, max_value=1000)),
        thresholds=arrays(np.int64, (6, 6), elements=st.integers(min_value=0, max_value=1000)),
        power=st.integers(min_value=-4, max_value=4),
        offset=st.integers(min_value=-1000, max_value=1000),
    )
    @settings(max_examples=50)
    def test_bits_invariant_when_thresholds_transform_alongside(self, frame, thresholds, power, offset):
        """
        **Property: Affine commutation**

        Scaling and shifting a frame and its threshold grid by the same
        positive affine map leaves every bit unchanged.
        """
        scale = 2.0 ** power
        before = binarize(frame.astype(np.float64), thresholds.astype(np.float64)).bits
        after = binarize(frame * scale + offset, thresholds * scale + offset).bits
        assert np.array_equal(before, after)
