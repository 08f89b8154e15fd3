import numpy as np
import pytest

from tomography import cache
from tomography.cache import JSONDisk, MeshCache, cached_disk_mesh
from tomography.mesh.disk_mesh import generate_disk_mesh
from tomography.utils.configuration import configuration


@pytest.fixture
def mesh_cache(tmp_path):
    with MeshCache(directory=str(tmp_path), disk=JSONDisk, disk_compress_level=6) as store:
        yield store


def test_mesh_round_trip(mesh_cache, coarse_mesh):
    assert mesh_cache.get_mesh(0.2) is None
    mesh_cache.set_mesh(0.2, coarse_mesh)
    restored = mesh_cache.get_mesh(0.2)
    assert np.array_equal(restored.nodes, coarse_mesh.nodes)
    assert np.array_equal(restored.triangles, coarse_mesh.triangles)
    assert restored.h == 0.2


def test_keys_distinguish_edge_lengths():
    assert MeshCache.key(0.1) != MeshCache.key(0.10000000000000002)


def test_cached_disk_mesh_generates_once(mesh_cache, monkeypatch):
    calls = []

    def generate(h):
        calls.append(h)
        return generate_disk_mesh(h)

    monkeypatch.setattr(configuration, "MESH_CACHE_ENABLED", True)
    monkeypatch.setattr(cache, "get_mesh_cache", lambda: mesh_cache)
    monkeypatch.setattr(cache, "generate_disk_mesh", generate)
    first = cached_disk_mesh(0.25)
    second = cached_disk_mesh(0.25)
    assert calls == [0.25]
    assert np.array_equal(first.nodes, second.nodes)
    assert np.array_equal(first.boundary_nodes, second.boundary_nodes)


def test_cache_disabled(monkeypatch):
    monkeypatch.setattr(cache, "get_mesh_cache", lambda: pytest.fail("cache must not be opened"))
    assert cached_disk_mesh(0.3).num_nodes == generate_disk_mesh(0.3).num_nodes
