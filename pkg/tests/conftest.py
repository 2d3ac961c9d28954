"""Shared fixtures and hypothesis settings for the test suite."""

import pytest
from hypothesis import HealthCheck, settings

import cellbench as cb

# Property tests spawn worker pools and solve small systems; wall time per
# example is noisy under load, so the deadline is disabled globally.
settings.register_profile(
    "cellbench",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("cellbench")


@pytest.fixture
def small_mesh():
    return cb.CartesianMesh(4, 4, 4)


@pytest.fixture
def pool2():
    pool = cb.WorkerPool(2)
    yield pool
    pool.shutdown()


def make_container(mesh, positions, **cell_kwargs):
    """Build a container with cells at the given positions, binned."""
    cont = cb.CellContainer(mesh)
    for p in positions:
        cont.new_cell(list(p), **cell_kwargs)
    cb.rebin_cells(cont)
    return cont
