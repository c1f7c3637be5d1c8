"""Session-scoped trajectories shared across test modules.

The expensive runs (circle benchmark, shear compositions at two
resolutions, gradient-graph refinement pair) are integrated once and
reused; every test treats them as read-only.
"""

from __future__ import annotations

import numpy as np
import pytest

import mcflab as m


@pytest.fixture(scope="session")
def circle_scenario():
    return m.make_circle(1.0, ambient_dim=3, resolution=256)


@pytest.fixture(scope="session")
def circle_traj(circle_scenario):
    return m.run_flow(circle_scenario.immersion, m.StepPolicy(t_max=0.6))


@pytest.fixture(scope="session")
def circle_traj_512():
    sc = m.make_circle(1.0, ambient_dim=3, resolution=512)
    # short horizon: the refinement checks only need the early intervals
    return m.run_flow(sc.immersion, m.StepPolicy(t_max=0.01))


@pytest.fixture(scope="session")
def circle_traj_short(circle_scenario):
    return m.run_flow(circle_scenario.immersion, m.StepPolicy(t_max=0.01))


@pytest.fixture(scope="session")
def ellipse_traj():
    sc = m.make_ellipse(2.0, 1.0, resolution=256)
    return m.run_flow(sc.immersion, m.StepPolicy(t_max=1.2))


@pytest.fixture(scope="session")
def ellipse_traj_128():
    sc = m.make_ellipse(2.0, 1.0, resolution=128)
    return m.run_flow(sc.immersion, m.StepPolicy(t_max=1.2))


SHEAR_POLICY = dict(safety=0.5, t_max=0.6, convergence_tol=1.5e-3)


@pytest.fixture(scope="session")
def shear64_traj():
    sc = m.make_shear_composition(resolution=64)
    return m.run_flow(sc.immersion, m.StepPolicy(**SHEAR_POLICY))


@pytest.fixture(scope="session")
def shear128_traj():
    sc = m.make_shear_composition(resolution=128)
    return m.run_flow(sc.immersion, m.StepPolicy(**SHEAR_POLICY))


GRAD_TERMS = [m.PotentialTerm(0.01, (1, 1))]
GRAD_POLICY = dict(t_max=0.04, convergence_tol=-1.0)


@pytest.fixture(scope="session")
def grad32_traj():
    sc = m.make_gradient_graph(GRAD_TERMS, resolution=32)
    return m.run_flow(sc.immersion, m.StepPolicy(**GRAD_POLICY))


@pytest.fixture(scope="session")
def grad64_traj():
    sc = m.make_gradient_graph(GRAD_TERMS, resolution=64)
    return m.run_flow(sc.immersion, m.StepPolicy(**GRAD_POLICY))


@pytest.fixture(scope="session")
def plane_immersion():
    """Static flat 2-plane patch, represented as a large flat torus."""
    return m.make_torus_graph(np.zeros((2, 2)), resolution=64, domain_period=2.0).immersion


@pytest.fixture(scope="session")
def plane_center():
    return np.array([1.0, 1.0, 0.0, 0.0])
