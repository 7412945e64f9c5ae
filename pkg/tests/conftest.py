import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import occusid as oc

settings.register_profile(
    "ci",
    derandomize=True,
    deadline=None,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def system1():
    field, theta_true, basis = oc.builtin_system("system1")
    return field, theta_true, basis


@pytest.fixture(scope="session")
def system1_x0s():
    return oc.lattice_centers([(-0.5, 0.5), (-2.5, -1.5)], 0.25)


@pytest.fixture(scope="session")
def system1_trajs(system1, system1_x0s):
    field, _, _ = system1
    return [oc.integrate_rk4(field, x0, 1.0, 1e-3) for x0 in system1_x0s]


@pytest.fixture(scope="session")
def system1_trajs_coarse(system1, system1_x0s):
    # h=1e-2 variants for tests where quadrature error does not matter
    field, _, _ = system1
    return [oc.integrate_rk4(field, x0, 1.0, 1e-2) for x0 in system1_x0s]


@pytest.fixture(scope="session")
def system1_centers():
    return oc.lattice_centers([(-3, 3), (-3, 5)], 1.0)


@pytest.fixture(scope="session")
def gauss10():
    return oc.gaussian_rbf(10.0)


@pytest.fixture(scope="session")
def lorenz_traj():
    field, _, _ = oc.builtin_system("lorenz")
    return oc.integrate_rk4(field, np.array([-8.0, 7.0, 27.0]), 100.0, 1e-3)
