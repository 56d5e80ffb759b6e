import numpy as np
import pytest

from gsync import (CoordinateProjection, PowerSine, TorusRotation, AxisBox,
                   lorenz_system, observe_trajectory)

LORENZ_M0 = np.array([0.0, 1.0, 1.05])
IV_ALPHA, IV_LAMBDA, IV_K = 0.9, 0.009, 0.1

# the eight stable fixed points of the autonomous power map
FIXED_POINTS = [np.array(p) for p in
                [(1, 1, 1), (-1, 1, 1), (1, -1, 1), (1, 1, -1),
                 (-1, -1, 1), (-1, 1, -1), (1, -1, -1), (-1, -1, -1)]]


@pytest.fixture(scope="session")
def lorenz():
    return lorenz_system()


@pytest.fixture(scope="session")
def lorenz_obs():
    return CoordinateProjection([0], phase_dim=3)


@pytest.fixture(scope="session")
def lorenz_traj(lorenz):
    return lorenz.trajectory(LORENZ_M0, 4000)


@pytest.fixture(scope="session")
def lorenz_z(lorenz_obs, lorenz_traj):
    return observe_trajectory(lorenz_obs, lorenz_traj)


@pytest.fixture(scope="session")
def power_sine():
    return PowerSine(IV_ALPHA, IV_LAMBDA, IV_K)


@pytest.fixture(scope="session")
def eight_boxes():
    return [AxisBox(p - 0.1, p + 0.1, label=f"V{i+1}")
            for i, p in enumerate(FIXED_POINTS)]


@pytest.fixture(scope="session")
def torus():
    # rationally independent angles, orbits equidistribute on the 2-torus
    return TorusRotation([np.sqrt(2.0) - 1.0, np.sqrt(10.0) - 3.0])
