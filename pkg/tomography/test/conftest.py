import numpy as np
import pytest

from tomography.fem.assembly import assemble
from tomography.fem.field import Field
from tomography.fem.solver import BoundaryData, solve_patterns
from tomography.mesh.disk_mesh import generate_disk_mesh
from tomography.models import BoundaryArc
from tomography.simulation.patterns import default_pattern_set, neumann_loads
from tomography.utils.configuration import configuration


@pytest.fixture(autouse=True)
def no_mesh_cache(monkeypatch):
    monkeypatch.setattr(configuration, "MESH_CACHE_ENABLED", False)


@pytest.fixture(scope="session")
def coarse_mesh():
    return generate_disk_mesh(0.2)


@pytest.fixture(scope="session")
def small_mesh():
    return generate_disk_mesh(0.15)


@pytest.fixture(scope="session")
def medium_mesh():
    return generate_disk_mesh(0.1)


@pytest.fixture(scope="session")
def half_arc():
    return BoundaryArc.parse("0,pi")


def bump_conductivity(mesh, center=(0.2, 0.1), radius=0.4, amplitude=1.0) -> Field:
    distance = np.hypot(mesh.nodes[:, 0] - center[0], mesh.nodes[:, 1] - center[1]) / radius
    return Field(mesh, 1.0 + amplitude * np.clip(1.0 - distance**2, 0.0, None) ** 2)


def exact_data(mesh, gamma: Field, arc: BoundaryArc, noise: float = 0.0, patterns=None, seed: int = 7):
    """Boundary data computed with gamma on the mesh itself, optionally with additive noise on the arc."""
    patterns = patterns or default_pattern_set(arc)
    loads = neumann_loads(mesh, patterns)
    potentials = solve_patterns(assemble(mesh, gamma, arc), loads)
    weights = mesh.boundary_vector(arc.contains(mesh.boundary_theta) * mesh.boundary_weights)
    dirichlet = np.where((weights > 0)[:, None], potentials, 0.0)
    if noise > 0:
        rng = np.random.default_rng(seed)
        dirichlet = dirichlet + np.where((weights > 0)[:, None], noise * rng.standard_normal(dirichlet.shape), 0.0)
    return BoundaryData(mesh=mesh, arc=arc, loads=loads, dirichlet=dirichlet, weights=weights)
