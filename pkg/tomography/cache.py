import json
import zlib
from functools import lru_cache

from diskcache import UNKNOWN, Cache, Disk

from tomography.mesh.disk_mesh import Mesh, generate_disk_mesh
from tomography.models import MeshDocument
from tomography.utils.configuration import configuration
from tomography.utils.logger import log


class JSONDisk(Disk):
    def __init__(self, directory, compress_level=1, **kwargs):
        self.compress_level = compress_level
        super().__init__(directory, **kwargs)

    def put(self, key):
        json_bytes = json.dumps(key).encode("utf-8")
        data = zlib.compress(json_bytes, self.compress_level)
        return super().put(data)

    def get(self, key, raw):
        data = super().get(key, raw)
        return json.loads(zlib.decompress(data).decode("utf-8"))

    def store(self, value, read, key=UNKNOWN):
        if not read:
            if hasattr(value, "model_dump_json"):
                json_bytes = value.model_dump_json().encode("utf-8")
            else:
                json_bytes = json.dumps(value).encode("utf-8")
            value = zlib.compress(json_bytes, self.compress_level)

        return super().store(value, read, key=key)

    def fetch(self, mode, filename, value, read):
        data = super().fetch(mode, filename, value, read)
        if not read:
            data = json.loads(zlib.decompress(data).decode("utf-8"))
        return data


class MeshCache(Cache):
    """Generated disk meshes keyed by their target edge length."""

    @staticmethod
    def key(h: float) -> str:
        return f"disk_mesh:{h!r}"

    def set_mesh(self, h: float, mesh: Mesh):
        self.set(self.key(h), mesh.to_document())

    def get_mesh(self, h: float) -> Mesh | None:
        document = self.get(self.key(h))
        if document:
            return Mesh.from_document(MeshDocument.model_validate(document))
        return None


@lru_cache
def get_mesh_cache():
    return MeshCache(
        disk=JSONDisk,
        disk_compress_level=6,  # zlib compression level
        directory=configuration.CACHE_DIRECTORY,
        size_limit=1e9,
    )


def cached_disk_mesh(h: float) -> Mesh:
    """Disk mesh for edge length h, served from the mesh cache when it is enabled."""
    if not configuration.MESH_CACHE_ENABLED:
        return generate_disk_mesh(h)
    cache = get_mesh_cache()
    mesh = cache.get_mesh(h)
    if mesh is not None:
        log.debug("Mesh cache hit for h=%s", h)
        return mesh
    log.debug("Mesh cache miss for h=%s", h)
    mesh = generate_disk_mesh(h)
    cache.set_mesh(h, mesh)
    return mesh


__all__ = ["get_mesh_cache", "cached_disk_mesh"]
