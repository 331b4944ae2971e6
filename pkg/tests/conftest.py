import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from wavemap import EstimateParams, TargetManifold, build_grid, init_state
from wavemap.solver import evolve

settings.register_profile("wavemap", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("wavemap")


def sphere_run(dr, amplitude=0.3, t_end=1.0, r_max=16.0, twist=1.0, kind="sphere", ambient_dim=None):
    """Every step of a short Gaussian-data run (leapfrog, cfl 0.5)."""
    g = build_grid(dr, r_max)
    M = TargetManifold(kind, ambient_dim)
    s0 = init_state("gaussian_bump", amplitude, 1.0, 0.0, g, M, t_planned=t_end, twist=twist)
    return evolve(s0, t_end, cfl=0.5)


@pytest.fixture(scope="session")
def sphere_runs():
    """Short sphere runs at three resolutions, keyed by dr."""
    return {dr: sphere_run(dr) for dr in (2.0 ** -5, 2.0 ** -6, 2.0 ** -7)}


@pytest.fixture(scope="session")
def params():
    return EstimateParams()


def orders(values):
    v = np.asarray(values, dtype=float)
    return np.log2(v[:-1] / v[1:])
