import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from csstokes.config import KernelFamily, KernelSpec, SimConfig
from csstokes.state import ParticleEnsemble

settings.register_profile("default", deadline=None, max_examples=50,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("dev", deadline=None, max_examples=10)
settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "default"))

RATIONAL = KernelSpec()
CONSTANT = KernelSpec(KernelFamily.CONSTANT, 1.0)

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_ensemble(rng, n, box_length=2 * np.pi, speed=1.0, mass=1.0):
    pos = rng.random((n, 3)) * box_length
    vel = rng.uniform(-speed, speed, (n, 3))
    return ParticleEnsemble(pos, vel, np.full(n, mass / n), box_length)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_config():
    return SimConfig(box_length=2 * np.pi, grid_n=8, particle_count=16, dt=0.01, t_end=0.1)
