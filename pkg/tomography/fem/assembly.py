import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from tomography.fem.field import Field
from tomography.mesh.disk_mesh import Mesh, arc_mask
from tomography.models import BoundaryArc
from tomography.utils.errors import NumericalError

BOUNDS_TOLERANCE = 1e-12
MASS_REFERENCE = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0


def _scatter(mesh: Mesh, local: np.ndarray) -> sp.csr_matrix:
    rows = np.broadcast_to(mesh.triangles[:, :, None], local.shape).ravel()
    cols = np.broadcast_to(mesh.triangles[:, None, :], local.shape).ravel()
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(mesh.num_nodes, mesh.num_nodes)).tocsr()


def stiffness_matrix(mesh: Mesh, weights=None) -> sp.csr_matrix:
    """P1 stiffness matrix, optionally with a constant weight per triangle."""
    local = mesh.element_stiffness
    if weights is not None:
        local = np.asarray(weights, dtype=float)[:, None, None] * local
    return _scatter(mesh, local)


def mass_matrix(mesh: Mesh) -> sp.csr_matrix:
    return _scatter(mesh, mesh.areas[:, None, None] * MASS_REFERENCE[None, :, :])


def grounding_vector(mesh: Mesh, arc: BoundaryArc) -> np.ndarray:
    """m_i = trapezoidal integral of psi_i over the arc."""
    return mesh.boundary_vector(arc_mask(mesh, arc) * mesh.boundary_weights)


class StiffnessSystem:
    """
    Grounded Neumann problem for one conductivity.

    Holds the stiffness matrix A, the grounding vector m and the factorization of the
    saddle system [[A, m], [m^T, 0]]. Immutable once built; solves can share it.
    """

    def __init__(self, mesh: Mesh, gamma: Field, arc: BoundaryArc, matrix: sp.csr_matrix, grounding: np.ndarray):
        self.mesh = mesh
        self.gamma = gamma
        self.arc = arc
        self.matrix = matrix
        self.grounding = grounding
        bordered = sp.bmat([[matrix, sp.csr_matrix(grounding[:, None])], [sp.csr_matrix(grounding[None, :]), None]])
        try:
            self._lu = splu(bordered.tocsc(), permc_spec="MMD_AT_PLUS_A")
        except RuntimeError as exc:
            raise NumericalError(f"Saddle system is singular: {exc}") from exc

    def solve(self, loads: np.ndarray) -> np.ndarray:
        """Solve for one load vector (N,) or several stacked as columns (N, K)."""
        loads = np.asarray(loads, dtype=float)
        rhs = np.concatenate((loads, np.zeros((1,) + loads.shape[1:])), axis=0)
        solution = self._lu.solve(rhs)
        if not np.all(np.isfinite(solution)):
            raise NumericalError("Neumann solve produced non-finite potentials")
        return solution[:-1]


def assemble(mesh: Mesh, gamma: Field, arc: BoundaryArc, c: float | None = None) -> StiffnessSystem:
    """
    Assemble the grounded Neumann problem for conductivity gamma with grounding over arc.

    Args:
        mesh (Mesh): mesh the conductivity lives on.
        gamma (Field): nodal conductivity; averaged over the vertices of each triangle.
        arc (BoundaryArc): Dirichlet arc carrying the grounding constraint.
        c (float): admissibility constant; when given, gamma must lie in [c, 1/c].
    """
    if gamma.mesh is not mesh:
        raise ValueError("Conductivity field lives on a different mesh")
    values = gamma.values
    if np.min(values) <= 0.0:
        raise NumericalError("Conductivity must be positive", {"min": float(np.min(values))})
    if c is not None and (np.min(values) < c - BOUNDS_TOLERANCE or np.max(values) > 1.0 / c + BOUNDS_TOLERANCE):
        raise NumericalError(
            "Conductivity violates the admissibility bounds",
            {"min": float(np.min(values)), "max": float(np.max(values)), "c": c},
        )
    grounding = grounding_vector(mesh, arc)
    if not grounding.any():
        raise NumericalError("Grounding arc contains no boundary nodes")
    return StiffnessSystem(mesh, gamma, arc, stiffness_matrix(mesh, gamma.triangle_means()), grounding)


class SobolevMetric:
    """H1 inner product matrix K + M of a mesh, with the factorization of its interior block."""

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        self.matrix = (stiffness_matrix(mesh) + mass_matrix(mesh)).tocsr()
        interior = np.flatnonzero(mesh.interior_mask)
        self.interior = interior
        try:
            self._lu = splu(self.matrix[interior][:, interior].tocsc())
        except RuntimeError as exc:
            raise NumericalError(f"H1 system is singular: {exc}") from exc

    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        return float(u @ (self.matrix @ v))

    def norm_sq(self, u: np.ndarray) -> float:
        return self.inner(u, u)

    def riesz(self, coefficients: np.ndarray) -> np.ndarray:
        """Nodal values of v in H1_0 with <v, psi_j>_H1 = coefficients_j for all interior j."""
        v = np.zeros(self.mesh.num_nodes)
        if len(self.interior):
            v[self.interior] = self._lu.solve(np.asarray(coefficients, dtype=float)[self.interior])
        return v
