"""
Shared pytest fixtures for ghostgrid tests
"""

import numpy as np
import pytest

from imaging.objects import DoubleSlitSpec, ObjectMask, make_double_slit
from imaging.speckle import SpeckleParams


@pytest.fixture
def small_params():
    """Provide 32x32 speckle parameters with a fine grain"""
    return SpeckleParams(rows=32, cols=32, grain_sigma=1.0, seed=7)


@pytest.fixture
def small_slit():
    """Provide a double slit that fits the 32x32 grid"""
    return make_double_slit(DoubleSlitSpec(32, 32, slit_width_px=2, separation_px=6, slit_height_px=16))


@pytest.fixture
def open_aperture():
    """Provide an all-transmitting 32x32 object"""
    return ObjectMask(transmission=np.ones((32, 32)), label='open')


@pytest.fixture
def out_dir(tmp_path):
    """Provide an empty output directory"""
    path = tmp_path / 'out'
    path.mkdir()
    return path
