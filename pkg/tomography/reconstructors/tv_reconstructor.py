import numpy as np

from tomography.fem.assembly import stiffness_matrix
from tomography.fem.field import Field
from tomography.fem.solver import DualVector, assemble_R_prime
from tomography.mesh.disk_mesh import Mesh
from tomography.models import CauchyDataSet, ReconMethod, TVConfig
from tomography.reconstructors.base_reconstructor import BaseReconstructor, Evaluation, ReconResult


def _smoothed_norms(delta_gamma: Field, b: float) -> np.ndarray:
    grads = delta_gamma.gradients()
    return np.sqrt(np.einsum("td,td->t", grads, grads) + b)


def tv_penalty(delta_gamma: Field, alpha: float, b: float) -> float:
    """alpha * integral of sqrt(|grad delta_gamma|^2 + b), exact for P1."""
    return alpha * float(delta_gamma.mesh.areas @ _smoothed_norms(delta_gamma, b))


def tv_gradient(delta_gamma: Field, alpha: float, b: float) -> DualVector:
    """Derivative of tv_penalty: a stiffness action with weight alpha / sqrt(|grad|^2 + b) per triangle."""
    weights = alpha / _smoothed_norms(delta_gamma, b)
    return DualVector(delta_gamma.mesh, stiffness_matrix(delta_gamma.mesh, weights) @ delta_gamma.values)


class TVReconstructor(BaseReconstructor):
    method = ReconMethod.tv

    def __init__(self, method: ReconMethod, dataset: CauchyDataSet, mesh: Mesh, sigma0: Field, config: TVConfig):
        super().__init__(method, dataset, mesh, sigma0, config)
        if method == ReconMethod.tv and not isinstance(config, TVConfig):
            raise ValueError("TV reconstruction needs a TVConfig")

    def prepare(self):
        pass

    def penalty(self, delta_gamma: np.ndarray) -> float:
        return tv_penalty(Field(self.mesh, delta_gamma), self.config.alpha, self.config.b)

    def smooth_dual(self, delta_gamma: np.ndarray, evaluation: Evaluation) -> DualVector:
        fit = assemble_R_prime(evaluation.system, self.data, evaluation.potentials)
        return fit + tv_gradient(Field(self.mesh, delta_gamma), self.config.alpha, self.config.b)

    def trial_point(self, delta_gamma: np.ndarray, gradient: np.ndarray, step: float) -> np.ndarray:
        return self.project(delta_gamma - step * gradient)


def reconstruct_tv(dataset: CauchyDataSet, mesh: Mesh, sigma0: Field, config: TVConfig) -> ReconResult:
    return TVReconstructor(ReconMethod.tv, dataset, mesh, sigma0, config).reconstruct()
