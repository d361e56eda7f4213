import numpy as np
import pytest

from panoscan.geometry import intrinsics_from_fov
from panoscan.trajectory import TrajectoryConfig


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


@pytest.fixture
def k256():
    return intrinsics_from_fov(90.0, 256)


@pytest.fixture
def k1024():
    return intrinsics_from_fov(90.0, 1024)


@pytest.fixture
def small_cfg():
    """Default trajectory shape at a test-friendly viewport size."""
    return TrajectoryConfig(beta_h_deg=90.0, beta_v_deg=90.0, overlap_r=0.5, size_l=128)
