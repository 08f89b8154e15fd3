import numpy as np

from tomography.fem.field import Field
from tomography.fem.solver import DualVector, assemble_R_prime
from tomography.mesh.disk_mesh import Mesh, node_areas
from tomography.models import CauchyDataSet, ReconConfig, ReconMethod
from tomography.reconstructors.base_reconstructor import BaseReconstructor, Evaluation, ReconResult
from tomography.utils.priors import alpha_weights, mu_field


def soft_threshold(x, beta):
    """sign(x) * max(|x| - beta, 0), elementwise."""
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - beta, 0.0)


def effective_thresholds(step: float, weights: np.ndarray, psi_l1_norms: np.ndarray) -> np.ndarray:
    """Nodal thresholds s * alpha_j / ||psi_j||_L1."""
    return step * weights / psi_l1_norms


def fem_update(
    delta_gamma: np.ndarray,
    gradient: np.ndarray,
    step: float,
    weights: np.ndarray,
    psi_l1_norms: np.ndarray,
    mesh: Mesh,
) -> np.ndarray:
    """Soft-thresholded gradient step at the nodes; boundary nodes stay zero."""
    zeta = soft_threshold(delta_gamma - step * gradient, effective_thresholds(step, weights, psi_l1_norms))
    zeta[mesh.boundary_nodes] = 0.0
    return zeta


class SparsityReconstructor(BaseReconstructor):
    """Weighted L1 penalty sum_j alpha_j |delta_gamma_j| with alpha_j = alpha beta_j mu_j."""

    method = ReconMethod.sparsity

    def prepare(self):
        # ||psi_j||_L1 of a P1 hat equals its node area
        self.beta = node_areas(self.mesh)
        self.mu = mu_field(self.config.prior, self.mesh)
        self.weights = alpha_weights(self.config.alpha, self.mu, self.beta)

    def penalty(self, delta_gamma: np.ndarray) -> float:
        return float(self.weights @ np.abs(delta_gamma))

    def smooth_dual(self, delta_gamma: np.ndarray, evaluation: Evaluation) -> DualVector:
        return assemble_R_prime(evaluation.system, self.data, evaluation.potentials)

    def trial_point(self, delta_gamma: np.ndarray, gradient: np.ndarray, step: float) -> np.ndarray:
        return self.project(fem_update(delta_gamma, gradient, step, self.weights, self.beta, self.mesh))


def reconstruct(dataset: CauchyDataSet, mesh: Mesh, sigma0: Field, config: ReconConfig) -> ReconResult:
    return SparsityReconstructor(ReconMethod.sparsity, dataset, mesh, sigma0, config).reconstruct()
