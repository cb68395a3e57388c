import numpy as np
import pytest

from nhgeo.models.geometry import ExpMapPatch
from nhgeo.services.systems_service import disk_system, particle_system


@pytest.fixture(scope="session")
def particle():
    return particle_system()


@pytest.fixture(scope="session")
def disk():
    return disk_system(1.0, 1.0)


@pytest.fixture(scope="session")
def particle_patch(particle):
    return ExpMapPatch(sys=particle.system, chart=particle.chart, domain=particle.patch_domain, steps=1000)


@pytest.fixture(scope="session")
def disk_patch(disk):
    return ExpMapPatch(sys=disk.system, chart=disk.chart, domain=disk.patch_domain, steps=1000)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def box_grid(half_widths, points_per_axis=21):
    """Uniform product grid over the box prod [-h_i, h_i]."""
    axes = [np.linspace(-h, h, points_per_axis) for h in half_widths]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)
