"""Configuration and fixtures for the Pytest based test suite"""

import pytest

from fiberbell.modes import FIRST_ORDER_BASIS, BeamGeometry, QuadratureSpec
from fiberbell.state import (
    DensityOperator,
    FiberChannel,
    TwoPhotonState,
    transport_arm_a,
    uniform_spdc_state,
)

GEOM = BeamGeometry(0.8e-3)
FAST_QUADRATURE = QuadratureSpec(6.0, 80)


@pytest.fixture
def fast_quadrature() -> QuadratureSpec:
    """A coarser grid which still passes the quadrature self-check"""
    return FAST_QUADRATURE


@pytest.fixture
def uniform_state() -> TwoPhotonState:
    return uniform_spdc_state(FIRST_ORDER_BASIS)


@pytest.fixture
def ideal_rho(uniform_state) -> DensityOperator:
    channel = FiberChannel.ideal(FIRST_ORDER_BASIS)
    return transport_arm_a(uniform_state.density(), channel)
