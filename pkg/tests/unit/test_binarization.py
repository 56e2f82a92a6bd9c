"""
Unit tests for quantization, global thresholds and the point-by-point map.
"""

import numpy as np
import pytest
from django.test import SimpleTestCase

from imaging.binarization import (
    BinarizationMethod,
    BinaryFrame,
    BlockSpec,
    ThresholdMap,
    binarize,
    binarize_with_method,
    block_corner_thresholds,
    fill_block_edges,
    fill_block_interior,
    global_otsu_threshold,
    harmonize,
    mean_threshold,
    otsu_level,
    otsu_threshold,
    ppb_threshold_map,
    quantize,
    threshold_map_from_corners,
)
from imaging.exceptions import DimensionError, ParameterError
from imaging.speckle import SpeckleParams, generate_frame


def literal_threshold_map(frame, k1, k2, levels=256):
    """Point-by-point map evaluated one pixel at a time, block by block."""
    rows, cols = frame.shape
    n_rows, n_cols = rows // k1, cols // k2
    corners = [[otsu_threshold(quantize(frame[l * k1:(l + 1) * k1, h * k2:(h + 1) * k2], levels))
                for h in range(n_cols)] for l in range(n_rows)]
    local = np.empty((rows, cols))
    for l in range(n_rows):
        for h in range(n_cols):
            corner = corners[l][h]
            right = corners[l][h + 1] if h + 1 < n_cols else corner
            below = corners[l + 1][h] if l + 1 < n_rows else corner
            t = {(1, 1): corner}
            for j in range(2, k2 + 1):
                t[(1, j)] = ((j - 1) * right + (k2 - j + 1) * corner) / k2
            for i in range(2, k1 + 1):
                t[(i, 1)] = ((i - 1) * below + (k1 - i + 1) * corner) / k1
            for r in range(2, k1 + 1):
                for c in range(2, k2 + 1):
                    q = 1.0 - 1.0 / (r + c - 1)
                    weighted = total = 0.0
                    for i in range(1, r + 1):
                        for j in range(1, c + 1):
                            if (i, j) == (r, c):
                                continue
                            w = q ** ((r - i) + (c - j))
                            weighted += w * t[(i, j)]
                            total += w
                    t[(r, c)] = weighted / total
            for (i, j), value in t.items():
                local[l * k1 + i - 1, h * k2 + j - 1] = value
    return local


@pytest.mark.unit
class TestQuantize(SimpleTestCase):
    """Linear quantization to integer codes."""

    def test_codes(self):
        test_cases = [
            (np.array([[0.0, 1.0]]), 2, [[0, 1]]),
            (np.array([[0.0, 0.5, 1.0]]), 256, [[0, 128, 255]]),
            (np.array([[2.0, 4.0, 6.0]]), 3, [[0, 1, 2]]),
        ]
        for values, levels, expected in test_cases:
            with self.subTest(values=values.tolist(), levels=levels):
                q = quantize(values, levels)
                np.testing.assert_array_equal(q.codes, expected)
                self.assertEqual(int(q.histogram.sum()), values.size)

    def test_constant_frame(self):
        q = quantize(np.full((3, 4), 2.5), 16)
        np.testing.assert_array_equal(q.codes, np.zeros((3, 4)))
        self.assertEqual(q.histogram[0], 12)
        self.assertEqual(int(q.histogram[1:].sum()), 0)
        self.assertEqual(q.intensity_of(0), 2.5)

    def test_invalid_levels(self):
        with self.assertRaises(ParameterError):
            quantize(np.ones((2, 2)), 1)


@pytest.mark.unit
class TestGlobalThresholds(SimpleTestCase):
    """Mean and Otsu thresholds."""

    def test_mean_threshold(self):
        test_cases = [
            (np.full((2, 2), 7.0), 7.0),
            (np.array([[0.0, 2.0]]), 1.0),
            (np.array([[1.0, 2.0], [3.0, 10.0]]), 4.0),
        ]
        for values, expected in test_cases:
            with self.subTest(values=values.tolist()):
                self.assertEqual(mean_threshold(values), expected)

    def test_otsu_tie_picks_smallest_level(self):
        """Codes {0,0,8,8} over 9 levels tie for every k in 0..7; 0 wins."""
        histogram = np.bincount([0, 0, 8, 8], minlength=9)
        self.assertEqual(otsu_level(histogram), 0)

    def test_otsu_separates_clusters(self):
        histogram = np.bincount([0, 0, 0, 1, 9, 9, 9, 10], minlength=11)
        self.assertEqual(otsu_level(histogram), 1)

    def test_otsu_single_bin(self):
        histogram = np.zeros(8, dtype=np.int64)
        histogram[5] = 10
        self.assertEqual(otsu_level(histogram), 5)

    def test_otsu_threshold_of_constant_frame(self):
        self.assertEqual(global_otsu_threshold(np.full((4, 4), 3.25)), 3.25)

    def test_otsu_threshold_is_code_intensity(self):
        values = np.array([[0.0, 0.0, 1.0, 1.0]])
        q = quantize(values, 256)
        self.assertEqual(otsu_level(q.histogram), 0)
        self.assertEqual(otsu_threshold(q), 0.0)

    def test_empty_histogram(self):
        with self.assertRaises(ParameterError):
            otsu_level(np.zeros(4))


@pytest.mark.unit
class TestThresholdMap(SimpleTestCase):
    """Point-by-point threshold propagation."""

    def test_interior_weight_example(self):
        """Corner 0 with neighbours 1 and 1 gives 3/4 at (2, 2)."""
        block = np.array([[0.0, 1.0], [1.0, np.nan]])
        fill_block_interior(block)
        self.assertAlmostEqual(block[1, 1], 0.75, places=12)

    def test_block_edges(self):
        block = fill_block_edges(corner=2.0, right=6.0, below=10.0, k1=3, k2=4)
        np.testing.assert_allclose(block[0, :], [2.0, 3.0, 4.0, 5.0])
        np.testing.assert_allclose(block[:, 0], [2.0, 14.0 / 3.0, 22.0 / 3.0])
        self.assertTrue(np.all(np.isnan(block[1:, 1:])))

    def test_map_from_clockwise_corners(self):
        """Corners 0, 1, 1, 0 clockwise on a 4x4 frame of 2x2 blocks."""
        corners = np.array([[0.0, 1.0], [0.0, 1.0]])
        local = threshold_map_from_corners(corners, BlockSpec(2, 2))
        expected = np.array([
            [0.0, 0.5, 1.0, 1.0],
            [0.0, 3.0 / 16.0, 1.0, 1.0],
            [0.0, 0.5, 1.0, 1.0],
            [0.0, 3.0 / 16.0, 1.0, 1.0],
        ])
        np.testing.assert_allclose(local, expected, rtol=0, atol=1e-12)

    def test_matches_pixelwise_evaluation_on_speckle(self):
        test_cases = [
            (SpeckleParams(rows=32, cols=40, grain_sigma=1.5, seed=1), 0, BlockSpec(8, 8)),
            (SpeckleParams(rows=32, cols=32, grain_sigma=1.0, seed=4), 7, BlockSpec(16, 8)),
            (SpeckleParams(rows=24, cols=24, grain_sigma=2.0, seed=2), 3, BlockSpec(6, 4)),
        ]
        for params, index, block in test_cases:
            with self.subTest(params=params, block=str(block)):
                frame = generate_frame(params, index).intensity
                expected = literal_threshold_map(frame, block.k1, block.k2)
                local = ppb_threshold_map(frame, block).local
                np.testing.assert_allclose(local, expected, rtol=1e-12, atol=1e-12)

    def test_equal_corners_give_constant_map(self):
        local = threshold_map_from_corners(np.full((3, 2), 1.75), BlockSpec(4, 5))
        self.assertEqual(local.shape, (12, 10))
        np.testing.assert_allclose(local, 1.75, rtol=0, atol=1e-12)

    def test_local_values_within_corner_range(self):
        frame = generate_frame(SpeckleParams(rows=64, cols=64, grain_sigma=1.5, seed=2), 0)
        block = BlockSpec(16, 16)
        corners = block_corner_thresholds(frame, block)
        threshold_map = ppb_threshold_map(frame, block)
        self.assertEqual(threshold_map.shape, (64, 64))
        self.assertGreaterEqual(threshold_map.local.min(), corners.min() - 1e-12)
        self.assertLessEqual(threshold_map.local.max(), corners.max() + 1e-12)
        self.assertEqual(threshold_map.global_t, global_otsu_threshold(frame))

    def test_non_divisible_frame(self):
        frame = generate_frame(SpeckleParams(rows=10, cols=13, grain_sigma=1.0, seed=3), 0)
        block = BlockSpec(4, 4)
        self.assertEqual(block_corner_thresholds(frame, block).shape, (3, 4))
        self.assertEqual(ppb_threshold_map(frame, block).shape, (10, 13))

    def test_frame_smaller_than_block(self):
        with self.assertRaises(DimensionError):
            ppb_threshold_map(np.ones((8, 8)), BlockSpec(16, 16))


@pytest.mark.unit
class TestHarmonizeAndBinarize(SimpleTestCase):

    def test_harmonize(self):
        local = np.full((2, 2), 4.0)
        test_cases = [(0.0, 4.0), (0.5, 6.0), (1.0, 8.0)]
        for alpha, expected in test_cases:
            with self.subTest(alpha=alpha):
                blended = harmonize(ThresholdMap(local=local, global_t=8.0), alpha)
                np.testing.assert_array_equal(blended.effective, np.full((2, 2), expected))
                self.assertEqual(blended.alpha, alpha)

    def test_harmonize_rejects_alpha(self):
        for alpha in (-0.1, 1.01):
            with self.subTest(alpha=alpha):
                with self.assertRaises(ParameterError):
                    harmonize(ThresholdMap(local=np.zeros((1, 1)), global_t=0.0), alpha)

    def test_binarize(self):
        frame = np.array([[1.0, 5.0], [3.0, 7.0]])
        np.testing.assert_array_equal(binarize(frame, 4.0).bits, [[0, 1], [0, 1]])
        np.testing.assert_array_equal(binarize(frame, frame).bits, np.zeros((2, 2)))
        np.testing.assert_array_equal(binarize(frame, frame - 1e-9).bits, np.ones((2, 2)))
        with self.assertRaises(DimensionError):
            binarize(frame, np.zeros((3, 3)))

    def test_methods(self):
        frame = np.array([[1.0, 2.0], [3.0, 10.0]])
        self.assertIs(binarize_with_method(frame, BinarizationMethod('none')), frame)
        bits = binarize_with_method(frame, BinarizationMethod('mean')).bits
        np.testing.assert_array_equal(bits, [[0, 0], [0, 1]])

    def test_point_by_point_alpha_one_matches_otsu(self):
        frame = generate_frame(SpeckleParams(rows=48, cols=48, grain_sigma=1.5, seed=8), 4)
        ppb = binarize_with_method(frame, BinarizationMethod('point_by_point', BlockSpec(16, 16), alpha=1.0))
        otsu = binarize_with_method(frame, BinarizationMethod('otsu'))
        self.assertIsInstance(ppb, BinaryFrame)
        np.testing.assert_array_equal(ppb.bits, otsu.bits)
        self.assertEqual(ppb.frame_index, 4)


@pytest.mark.unit
class TestMethodParsing(SimpleTestCase):

    def test_block_spec(self):
        self.assertEqual(BlockSpec.parse('16x8'), BlockSpec(16, 8))
        self.assertEqual(BlockSpec.parse('4'), BlockSpec(4, 4))
        self.assertEqual(str(BlockSpec(8, 16)), '8x16')
        for text in ('ax2', '1x4', '2x2x2'):
            with self.subTest(text=text):
                with self.assertRaises(ParameterError):
                    BlockSpec.parse(text)

    def test_method_labels(self):
        block = BlockSpec(16, 16)
        test_cases = [
            ('tgi', 'none', 'tgi'),
            ('mbgi', 'mean', 'mbgi'),
            ('otsu', 'otsu', 'obgi'),
            ('ppbgi', 'point_by_point', 'ppbgi_a0.15'),
            ('ppbgi:0.4', 'point_by_point', 'ppbgi_a0.4'),
        ]
        for text, tag, label in test_cases:
            with self.subTest(text=text):
                method = BinarizationMethod.parse(text, block, 0.15)
                self.assertEqual(method.tag, tag)
                self.assertEqual(method.label, label)

    def test_invalid_methods(self):
        block = BlockSpec(16, 16)
        for text in ('foo', 'obgi:0.4', 'ppbgi:x', 'ppbgi:2'):
            with self.subTest(text=text):
                with self.assertRaises(ParameterError):
                    BinarizationMethod.parse(text, block, 0.15)
        with self.assertRaises(ParameterError):
            BinarizationMethod('point_by_point')
        with self.assertRaises(ParameterError):
            BinarizationMethod('mean', block=block)
