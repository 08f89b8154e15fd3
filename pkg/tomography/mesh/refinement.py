import math

import numpy as np
import scipy.sparse as sp

from tomography.mesh.disk_mesh import Mesh
from tomography.mesh.interpolation import barycentric
from tomography.utils.logger import log


def select_triangles(indicator: np.ndarray, fraction: float) -> np.ndarray:
    """Indices of the top `fraction` triangles by indicator, ties broken by lower triangle index."""
    count = max(1, math.ceil(fraction * len(indicator)))
    order = np.lexsort((np.arange(len(indicator)), -indicator))
    return order[:count]


def close_marking(mesh: Mesh, marked_triangles: np.ndarray) -> np.ndarray:
    """
    Edge marks for longest-edge bisection of the given triangles, closed for conformity.

    Any triangle with a marked edge also gets its longest edge marked, until no triangle
    would need a hanging node.
    """
    triangle_edges = mesh.triangle_edges
    longest = triangle_edges[np.arange(mesh.num_triangles), np.argmax(mesh.edge_lengths[triangle_edges], axis=1)]
    marked = np.zeros(len(mesh.edges), dtype=bool)
    marked[longest[marked_triangles]] = True
    while True:
        missing = marked[triangle_edges].any(axis=1) & ~marked[longest]
        if not missing.any():
            return marked
        marked[longest[missing]] = True


def refine_where(mesh: Mesh, indicator, fraction: float = 0.1):
    """
    Longest-edge bisection of the triangles with the largest indicator.

    Args:
        mesh (Mesh): mesh to refine.
        indicator: one nonnegative value per triangle.
        fraction (float): share of triangles to mark, in (0, 1].

    Returns:
        tuple: the refined Mesh and a sparse (N_new, N_old) matrix transferring nodal values.
    """
    if mesh.num_triangles == 0:
        raise ValueError("Cannot refine an empty mesh")
    indicator = np.asarray(indicator, dtype=float)
    if indicator.shape != (mesh.num_triangles,):
        raise ValueError("Refinement indicator needs one value per triangle")
    if not np.all(np.isfinite(indicator)) or np.any(indicator < 0):
        raise ValueError("Refinement indicator must be finite and nonnegative")
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"Refinement fraction must lie in (0, 1], got {fraction}")

    edge_marked = close_marking(mesh, select_triangles(indicator, fraction))
    split = np.flatnonzero(edge_marked)
    n_old = mesh.num_nodes
    midpoint = np.full(len(mesh.edges), -1, dtype=np.int64)
    midpoint[split] = n_old + np.arange(len(split))

    ends = mesh.edges[split]
    new_points = 0.5 * (mesh.nodes[ends[:, 0]] + mesh.nodes[ends[:, 1]])
    on_boundary = mesh.boundary_edge_mask[split]
    new_points[on_boundary] /= np.linalg.norm(new_points[on_boundary], axis=1)[:, None]

    # transfer rows: edge average inside, extrapolation from the parent triangle for snapped points
    rows = [np.arange(n_old), np.repeat(n_old + np.flatnonzero(~on_boundary), 2)]
    cols = [np.arange(n_old), ends[~on_boundary].ravel()]
    vals = [np.ones(n_old), np.full(2 * int((~on_boundary).sum()), 0.5)]
    if on_boundary.any():
        boundary_split = split[on_boundary]
        owner = np.full(len(mesh.edges), -1, dtype=np.int64)
        owner[mesh.triangle_edges.ravel()] = np.repeat(np.arange(mesh.num_triangles), 3)
        parents = owner[boundary_split]
        rows.append(np.repeat(midpoint[boundary_split], 3))
        cols.append(mesh.triangles[parents].ravel())
        vals.append(barycentric(mesh, parents, new_points[on_boundary]).ravel())

    triangles = []
    for tri, edges in zip(mesh.triangles, mesh.triangle_edges):
        if not edge_marked[edges].any():
            triangles.append(tuple(tri))
            continue
        triangles.extend(_bisect(tri, edges, mesh.edge_lengths[edges], edge_marked, midpoint))

    nodes = np.vstack((mesh.nodes, new_points))
    refined = Mesh(nodes, np.asarray(triangles), h=mesh.h)
    transfer = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(refined.num_nodes, n_old)
    ).tocsr()
    log.debug("Refined %d edges: %s -> %s", len(split), mesh, refined)
    return refined, transfer


def _bisect(tri, edges, lengths, edge_marked, midpoint):
    # rotate so the longest edge runs from a to b
    first = int(np.argmax(lengths))
    a, b, c = (int(tri[(first + i) % 3]) for i in range(3))
    ab, bc, ca = (edges[(first + i) % 3] for i in range(3))
    m_ab = int(midpoint[ab])

    children = []
    if edge_marked[bc]:
        m_bc = int(midpoint[bc])
        children += [(m_ab, b, m_bc), (m_ab, m_bc, c)]
    else:
        children.append((m_ab, b, c))
    if edge_marked[ca]:
        m_ca = int(midpoint[ca])
        children += [(a, m_ab, m_ca), (m_ca, m_ab, c)]
    else:
        children.append((a, m_ab, c))
    return children
