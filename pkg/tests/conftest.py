import math

import numpy as np
import pytest

from nhsta.pulses import AeParams, GaussianPairParams
from nhsta.three_level import ThreeLevelParams
from nhsta.two_level import TwoLevelParams

MHZ = 2 * math.pi * 1e6
GHZ = 2 * math.pi * 1e9


def central_fd(f, t, h):
    return (f(t + h) - f(t - h)) / (2 * h)


@pytest.fixture
def ae():
    return AeParams(omega0=5 * MHZ, delta=300 * MHZ, t0=1e-10, tf=2e-10)


@pytest.fixture
def two_rwa(ae):
    return TwoLevelParams(gamma=0.5 * MHZ, omegaL=0.0, ae=ae, counter_rotating=False)


@pytest.fixture
def two_cr(ae):
    return TwoLevelParams(gamma=0.5 * MHZ, omegaL=10 * GHZ, ae=ae, counter_rotating=True)


@pytest.fixture
def stirap_pulses():
    tf = 30e-9
    return GaussianPairParams(omega0=200 * MHZ, tau=tf / 10, T=tf / 6, tf=tf)


@pytest.fixture
def three_cr(stirap_pulses):
    return ThreeLevelParams(100 * MHZ, 200 * MHZ, 200 * MHZ, 1e8, 8e7, stirap_pulses, counter_rotating=True)


@pytest.fixture
def three_rwa(stirap_pulses):
    return ThreeLevelParams(100 * MHZ, 200 * MHZ, 200 * MHZ, 1e8, 8e7, stirap_pulses, counter_rotating=False)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
