import numpy as np
import scipy.sparse as sp

from tomography.fem.field import Field
from tomography.mesh.disk_mesh import Mesh

CANDIDATES = 12
INSIDE_TOLERANCE = 1e-12
DOMAIN_TOLERANCE = 1e-9


def barycentric(mesh: Mesh, triangle_ids: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Barycentric coordinates of points with respect to the given triangles, unclamped."""
    grads = mesh.grad_basis[triangle_ids]
    offset = points - mesh.centroids[triangle_ids]
    # every hat function is 1/3 at the centroid and affine on the triangle
    return 1.0 / 3.0 + np.einsum("...id,...d->...i", grads, offset)


def locate(mesh: Mesh, points: np.ndarray):
    """
    Find a triangle and barycentric coordinates for each point.

    Points inside the triangulation get their containing triangle. Points in the sliver between
    the boundary polygon and the circle get the best nearby triangle with coordinates clamped to
    its closure.

    Returns:
        tuple: (P,) triangle ids and (P, 3) nonnegative barycentric coordinates summing to 1.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    triangle_ids = np.empty(len(points), dtype=np.int64)
    coordinates = np.empty((len(points), 3))
    pending = np.arange(len(points))

    k = min(CANDIDATES, mesh.num_triangles)
    while True:
        _, candidates = mesh.centroid_tree.query(points[pending], k=k)
        candidates = np.asarray(candidates).reshape(len(pending), k)
        bary = barycentric(mesh, candidates, points[pending][:, None, :])
        worst = bary.min(axis=2)
        best = np.argmax(worst, axis=1)
        rows = np.arange(len(pending))
        triangle_ids[pending] = candidates[rows, best]
        coordinates[pending] = bary[rows, best]

        missed = worst[rows, best] < -INSIDE_TOLERANCE
        if not missed.any() or k == mesh.num_triangles:
            break
        pending = pending[missed]
        k = min(4 * k, mesh.num_triangles)

    coordinates = np.clip(coordinates, 0.0, None)
    coordinates /= coordinates.sum(axis=1, keepdims=True)
    return triangle_ids, coordinates


def interpolation_matrix(source: Mesh, points: np.ndarray) -> sp.csr_matrix:
    """Sparse (P, N_source) matrix mapping nodal values of the source mesh to P1 values at the points."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if np.any(np.linalg.norm(points, axis=1) > 1.0 + DOMAIN_TOLERANCE):
        raise ValueError("Interpolation points lie outside the unit disk")
    triangle_ids, coordinates = locate(source, points)
    rows = np.repeat(np.arange(len(points)), 3)
    cols = source.triangles[triangle_ids].ravel()
    return sp.coo_matrix((coordinates.ravel(), (rows, cols)), shape=(len(points), source.num_nodes)).tocsr()


def interpolate(field: Field, target: Mesh) -> Field:
    """P1 evaluation of a field at the nodes of another disk mesh."""
    if target is field.mesh:
        return Field(target, field.values.copy())
    matrix = interpolation_matrix(field.mesh, target.nodes)
    return Field(target, matrix @ field.values)
