import math

import pytest

from railbeam.channel import PhysicalConfig
from railbeam.radiation import build_codebook


@pytest.fixture(scope="session")
def phys():
    return PhysicalConfig.from_carrier(2.4e9, tx_power_w=0.03, noise_power_w=1e-8)


@pytest.fixture(scope="session")
def paper_codebook():
    """Reference 117-mode codebook at the 0.25 degree quadrature step."""
    return build_codebook(
        theta_max_rad=math.pi / 3, dtheta_rad=math.pi / 12, dphi_rad=math.pi / 12,
        g_max_dbi=8.0, theta3db_rad=math.pi / 6, phi3db_rad=math.pi / 6,
        g_s_db=30.0, g_v_db=30.0,
    )


@pytest.fixture(scope="session")
def tiny_codebook():
    """15-mode codebook at a coarse quadrature step, for fast solver tests."""
    return build_codebook(
        theta_max_rad=math.pi / 6, dtheta_rad=math.pi / 6, dphi_rad=math.pi / 4,
        g_max_dbi=8.0, theta3db_rad=math.pi / 6, phi3db_rad=math.pi / 6,
        g_s_db=30.0, g_v_db=30.0, quadrature_step_rad=math.radians(1.0),
    )
