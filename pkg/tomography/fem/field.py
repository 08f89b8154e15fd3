import numpy as np

from tomography.mesh.disk_mesh import Mesh


class Field:
    """Continuous piecewise-linear function on a mesh, stored by its nodal values."""

    def __init__(self, mesh: Mesh, values):
        values = np.array(values, dtype=float).reshape(-1)
        if values.shape[0] != mesh.num_nodes:
            raise ValueError(f"Field has {values.shape[0]} values for a mesh with {mesh.num_nodes} nodes")
        if not np.all(np.isfinite(values)):
            raise ValueError("Field values must be finite")
        self.mesh = mesh
        self.values = values

    def __repr__(self) -> str:
        return f"Field(nodes={self.mesh.num_nodes}, min={self.values.min():.4g}, max={self.values.max():.4g})"

    @classmethod
    def constant(cls, mesh: Mesh, value: float) -> "Field":
        return cls(mesh, np.full(mesh.num_nodes, float(value)))

    @classmethod
    def zeros(cls, mesh: Mesh) -> "Field":
        return cls(mesh, np.zeros(mesh.num_nodes))

    def gradients(self) -> np.ndarray:
        """(T, 2) gradient on every triangle."""
        return np.einsum("tid,ti->td", self.mesh.grad_basis, self.values[self.mesh.triangles])

    def triangle_means(self) -> np.ndarray:
        return self.values[self.mesh.triangles].mean(axis=1)

    def boundary_values(self) -> np.ndarray:
        return self.values[self.mesh.boundary_nodes]

    def __add__(self, other: "Field") -> "Field":
        if other.mesh is not self.mesh:
            raise ValueError("Fields live on different meshes")
        return Field(self.mesh, self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        if other.mesh is not self.mesh:
            raise ValueError("Fields live on different meshes")
        return Field(self.mesh, self.values - other.values)
