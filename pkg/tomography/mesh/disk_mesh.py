import math
from functools import cached_property

import numpy as np
from scipy.spatial import Delaunay, cKDTree

from tomography.models import BoundaryArc, MeshDocument
from tomography.utils.geometry import angles
from tomography.utils.logger import log

BOUNDARY_TOLERANCE = 1e-10
SNAP_TOLERANCE = 1e-15


class Mesh:
    """
    Conforming triangulation of the unit disk.

    Nodes on the boundary polygon are snapped to the unit circle, triangles are stored with
    positive orientation, and the boundary nodes are kept sorted by their angle. A mesh is
    never modified after construction; refinement builds a new one.
    """

    def __init__(self, nodes: np.ndarray, triangles: np.ndarray, h: float | None = None):
        nodes = np.array(nodes, dtype=float)
        triangles = np.array(triangles, dtype=np.int64).reshape(-1, 3)
        if nodes.ndim != 2 or nodes.shape[1] != 2:
            raise ValueError("Mesh nodes must be an (N, 2) array")

        self.h = h
        self.triangles = triangles
        self.edges, self.triangle_edges, edge_counts = _build_edges(triangles)
        self.boundary_edge_mask = edge_counts == 1

        boundary = np.unique(self.edges[self.boundary_edge_mask])
        radii = np.linalg.norm(nodes[boundary], axis=1)
        # nodes already within rounding of the circle are left alone so reloading a mesh is exact
        off_circle = np.abs(radii - 1.0) > SNAP_TOLERANCE
        nodes[boundary[off_circle]] /= radii[off_circle, None]
        self.nodes = nodes

        # orient every triangle counterclockwise
        flipped = _signed_areas(nodes, triangles) < 0
        if flipped.any():
            self.triangles = triangles.copy()
            self.triangles[flipped] = self.triangles[flipped][:, [0, 2, 1]]
            self.edges, self.triangle_edges, edge_counts = _build_edges(self.triangles)
            self.boundary_edge_mask = edge_counts == 1
        self.edge_counts = edge_counts

        theta = angles(nodes[boundary])
        order = np.argsort(theta, kind="stable")
        self.boundary_nodes = boundary[order]
        self.boundary_theta = theta[order]
        self.boundary_edges = np.column_stack((self.boundary_nodes, np.roll(self.boundary_nodes, -1)))

        for array in (self.nodes, self.triangles, self.edges, self.triangle_edges, self.boundary_nodes):
            array.flags.writeable = False

    def __str__(self) -> str:
        return f"Disk mesh with {self.num_nodes} nodes and {self.num_triangles} triangles"

    def __repr__(self) -> str:
        return self.__str__()

    @property
    def num_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def num_triangles(self) -> int:
        return self.triangles.shape[0]

    @cached_property
    def areas(self) -> np.ndarray:
        return _signed_areas(self.nodes, self.triangles)

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.nodes[self.triangles].mean(axis=1)

    @cached_property
    def centroid_tree(self) -> cKDTree:
        return cKDTree(self.centroids)

    @cached_property
    def grad_basis(self) -> np.ndarray:
        """(T, 3, 2) constant gradients of the three P1 hat functions on every triangle."""
        p = self.nodes[self.triangles]
        # edge opposite to vertex i, running from vertex i+1 to vertex i+2
        opposite = np.roll(p, -2, axis=1) - np.roll(p, -1, axis=1)
        rotated = np.stack((-opposite[:, :, 1], opposite[:, :, 0]), axis=2)
        return rotated / (2.0 * self.areas)[:, None, None]

    @cached_property
    def element_stiffness(self) -> np.ndarray:
        """(T, 3, 3) element matrices |T| grad(psi_i) . grad(psi_j) for unit conductivity."""
        grads = self.grad_basis
        return self.areas[:, None, None] * np.einsum("tid,tjd->tij", grads, grads)

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        return np.linalg.norm(self.nodes[self.edges[:, 1]] - self.nodes[self.edges[:, 0]], axis=1)

    @cached_property
    def boundary_weights(self) -> np.ndarray:
        """Trapezoidal weights of the boundary nodes: half of the two adjacent chord lengths."""
        chords = np.linalg.norm(
            self.nodes[self.boundary_edges[:, 1]] - self.nodes[self.boundary_edges[:, 0]], axis=1
        )
        return 0.5 * (chords + np.roll(chords, 1))

    @cached_property
    def interior_mask(self) -> np.ndarray:
        mask = np.ones(self.num_nodes, dtype=bool)
        mask[self.boundary_nodes] = False
        return mask

    @property
    def h_max(self) -> float:
        return float(self.edge_lengths.max())

    @property
    def h_mean(self) -> float:
        return float(self.edge_lengths.mean())

    @property
    def total_area(self) -> float:
        return float(self.areas.sum())

    @property
    def boundary_length(self) -> float:
        return float(self.boundary_weights.sum())

    def boundary_vector(self, boundary_values: np.ndarray) -> np.ndarray:
        """Scatter values given per boundary node (in angular order) into a full nodal vector."""
        full = np.zeros(self.num_nodes)
        full[self.boundary_nodes] = boundary_values
        return full

    def validate(self):
        """Check the structural invariants of a disk triangulation, raising ValueError on the first violation."""
        if np.any(self.areas <= 0):
            raise ValueError("Mesh has triangles with non-positive area")
        if np.any((self.edge_counts < 1) | (self.edge_counts > 2)):
            raise ValueError("Mesh has edges shared by more than two triangles")
        radii = np.linalg.norm(self.nodes[self.boundary_nodes], axis=1)
        if np.any(np.abs(radii - 1.0) > BOUNDARY_TOLERANCE):
            raise ValueError("Boundary nodes are not on the unit circle")
        if np.any(np.diff(self.boundary_theta) <= 0):
            raise ValueError("Boundary nodes are not strictly ordered by angle")
        actual = {tuple(edge) for edge in np.sort(self.edges[self.boundary_edge_mask], axis=1)}
        polygon = {tuple(edge) for edge in np.sort(self.boundary_edges, axis=1)}
        if actual != polygon:
            raise ValueError("Boundary edges do not form a closed polygon in angular order")

    def to_document(self) -> MeshDocument:
        return MeshDocument(
            nodes=[tuple(node) for node in self.nodes.tolist()],
            triangles=[tuple(tri) for tri in self.triangles.tolist()],
            boundary=self.boundary_nodes.tolist(),
            h=self.h,
        )

    @classmethod
    def from_document(cls, document: MeshDocument) -> "Mesh":
        return cls(np.asarray(document.nodes, dtype=float), np.asarray(document.triangles), h=document.h)


def _signed_areas(nodes: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    p = nodes[triangles]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


def _build_edges(triangles: np.ndarray):
    # local edge k of a triangle runs from vertex k to vertex k+1
    local = np.stack((triangles, np.roll(triangles, -1, axis=1)), axis=2).reshape(-1, 2)
    edges, inverse, counts = np.unique(np.sort(local, axis=1), axis=0, return_inverse=True, return_counts=True)
    return edges, inverse.reshape(-1, 3), counts


def generate_disk_mesh(h: float) -> Mesh:
    """
    Quasi-uniform triangulation of the unit disk.

    Nodes are laid out on concentric rings of spacing 1/ceil(1/h), ring k carrying 6k nodes,
    and connected by a Delaunay triangulation. Odd rings (counted from the boundary) are rotated
    by half a node spacing; the boundary ring starts at angle 0.

    Args:
        h (float): target edge length, 0 < h < 1.

    Returns:
        Mesh: the triangulation.
    """
    if not 0.0 < h < 1.0:
        raise ValueError(f"Target edge length must lie in (0, 1), got {h}")

    rings = math.ceil(1.0 / h)
    points = [np.zeros((1, 2))]
    for k in range(1, rings + 1):
        count = 6 * k
        offset = math.pi / count if (rings - k) % 2 else 0.0
        phi = offset + 2.0 * math.pi * np.arange(count) / count
        radius = k / rings
        points.append(radius * np.column_stack((np.cos(phi), np.sin(phi))))
    points = np.vstack(points)

    triangles = Delaunay(points).simplices
    keep = np.abs(_signed_areas(points, triangles)) > 1e-12 * h * h
    mesh = Mesh(points, triangles[keep], h=h)
    log.debug("Generated %s for h=%s", mesh, h)
    return mesh


def node_areas(mesh: Mesh) -> np.ndarray:
    """Node weights beta_j: a third of the area of the support of each hat function."""
    return np.bincount(mesh.triangles.ravel(), weights=np.repeat(mesh.areas / 3.0, 3), minlength=mesh.num_nodes)


def arc_mask(mesh: Mesh, arc: BoundaryArc) -> np.ndarray:
    """Characteristic function of the arc, one weight per boundary node in angular order."""
    return arc.contains(mesh.boundary_theta).astype(float)
