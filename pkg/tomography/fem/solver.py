from dataclasses import dataclass

import numpy as np

from tomography.fem.assembly import SobolevMetric, StiffnessSystem
from tomography.fem.field import Field
from tomography.mesh.disk_mesh import Mesh
from tomography.models import BoundaryArc
from tomography.utils.errors import NumericalError

COMPATIBILITY_TOLERANCE = 1e-8


@dataclass(frozen=True)
class BoundaryData:
    """
    Cauchy data bound to one mesh.

    loads: (N, K) Neumann load vectors, column k integrates g_k against every hat function.
    dirichlet: (N, K) measured f_k at the nodes of the Dirichlet arc, zero elsewhere.
    weights: (N,) trapezoidal weights of the Dirichlet arc, zero off the arc.
    """

    mesh: Mesh
    arc: BoundaryArc
    loads: np.ndarray
    dirichlet: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        n = self.mesh.num_nodes
        if self.loads.shape[0] != n or self.dirichlet.shape != self.loads.shape or self.weights.shape != (n,):
            raise ValueError("Boundary data does not match the mesh")

    @property
    def size(self) -> int:
        return self.loads.shape[1]

    def select(self, k: int) -> "BoundaryData":
        return BoundaryData(self.mesh, self.arc, self.loads[:, [k]], self.dirichlet[:, [k]], self.weights)


class DualVector:
    """Coefficients r_j = R'(psi_j) of a linear functional, one per node."""

    def __init__(self, mesh: Mesh, coefficients):
        coefficients = np.asarray(coefficients, dtype=float)
        if coefficients.shape != (mesh.num_nodes,):
            raise ValueError("Dual vector needs one coefficient per node")
        if not np.all(np.isfinite(coefficients)):
            raise NumericalError("Dual vector has non-finite coefficients")
        self.mesh = mesh
        self.coefficients = coefficients

    def __call__(self, eta: np.ndarray) -> float:
        return float(self.coefficients @ eta)

    def __add__(self, other: "DualVector") -> "DualVector":
        return DualVector(self.mesh, self.coefficients + other.coefficients)


def check_compatible(loads: np.ndarray):
    loads = loads.reshape(loads.shape[0], -1)
    total = np.abs(loads.sum(axis=0))
    scale = np.maximum(np.abs(loads).sum(axis=0), 1.0)
    if np.any(total > COMPATIBILITY_TOLERANCE * scale):
        raise ValueError(f"Neumann data has nonzero mean {float(total.max()):.3e}")


def solve_neumann(system: StiffnessSystem, load: np.ndarray) -> Field:
    """Potential u with A u = load and zero trapezoidal mean over the grounding arc."""
    load = np.asarray(load, dtype=float)
    check_compatible(load)
    return Field(system.mesh, system.solve(load))


def solve_patterns(system: StiffnessSystem, loads: np.ndarray) -> np.ndarray:
    """(N, K) potentials for all load columns in one multi right-hand-side solve."""
    check_compatible(loads)
    return system.solve(loads)


def nd_trace(system: StiffnessSystem, load: np.ndarray, arc: BoundaryArc) -> np.ndarray:
    """Dirichlet trace of the Neumann solution at the boundary nodes inside the arc, in angular order."""
    u = solve_neumann(system, load).values
    mesh = system.mesh
    return u[mesh.boundary_nodes][arc.contains(mesh.boundary_theta)]


def residuals(system: StiffnessSystem, data: BoundaryData) -> tuple:
    """Potentials U and the arc residuals chi_D (U - F)."""
    if data.mesh is not system.mesh:
        raise ValueError("Boundary data is bound to a different mesh")
    potentials = solve_patterns(system, data.loads)
    on_arc = (data.weights > 0)[:, None]
    return potentials, np.where(on_arc, potentials - data.dirichlet, 0.0)


def discrepancy(system: StiffnessSystem, data: BoundaryData, potentials: np.ndarray | None = None) -> float:
    """1/2 sum_k ||Lambda g_k - f_k||^2 over the Dirichlet arc, trapezoidal rule."""
    if potentials is None:
        _, residual = residuals(system, data)
    else:
        residual = np.where((data.weights > 0)[:, None], potentials - data.dirichlet, 0.0)
    return 0.5 * float(np.sum(data.weights[:, None] * residual**2))


def assemble_R_prime(system: StiffnessSystem, data: BoundaryData, potentials: np.ndarray | None = None) -> DualVector:
    """
    Derivative of the discrepancy with respect to nodal conductivity perturbations.

    For every pattern a second Neumann problem is solved with the arc residual as data; the
    per-triangle product of the two potential gradients is integrated against each hat function.
    The residual is centered on the arc, which leaves the derivative unchanged and makes the
    second load compatible for noisy data.
    """
    mesh = system.mesh
    if potentials is None:
        potentials, residual = residuals(system, data)
    else:
        residual = np.where((data.weights > 0)[:, None], potentials - data.dirichlet, 0.0)

    w = data.weights[:, None]
    mean = (w * residual).sum(axis=0) / data.weights.sum()
    adjoint_loads = w * (residual - mean[None, :])
    adjoints = system.solve(adjoint_loads)

    grads = mesh.grad_basis
    grad_u = np.einsum("tid,tik->tkd", grads, potentials[mesh.triangles])
    grad_p = np.einsum("tid,tik->tkd", grads, adjoints[mesh.triangles])
    # G summed over patterns, constant per triangle
    g = -np.einsum("tkd,tkd->t", grad_u, grad_p)
    coefficients = np.bincount(
        mesh.triangles.ravel(), weights=np.repeat(g * mesh.areas / 3.0, 3), minlength=mesh.num_nodes
    )
    return DualVector(mesh, coefficients)


def sobolev_gradient(metric: SobolevMetric, rp: DualVector) -> Field:
    """H1_0 Riesz representative of a dual vector, exactly zero on the boundary."""
    if rp.mesh is not metric.mesh:
        raise ValueError("Dual vector and metric live on different meshes")
    return Field(metric.mesh, metric.riesz(rp.coefficients))
