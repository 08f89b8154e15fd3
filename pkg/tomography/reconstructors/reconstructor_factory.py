from tomography.fem.field import Field
from tomography.mesh.disk_mesh import Mesh
from tomography.models import CauchyDataSet, ReconConfig, ReconMethod
from tomography.reconstructors.sparsity_reconstructor import SparsityReconstructor
from tomography.reconstructors.tv_reconstructor import TVReconstructor


class ReconstructorFactory:
    def __init__(self, method: ReconMethod, dataset: CauchyDataSet, mesh: Mesh, sigma0: Field, config: ReconConfig):
        self.reconstructors = [
            SparsityReconstructor(method, dataset, mesh, sigma0, config),
            TVReconstructor(method, dataset, mesh, sigma0, config),
        ]

    def get_reconstructor(self):
        for reconstructor in self.reconstructors:
            if reconstructor.match():
                return reconstructor
        raise ValueError("No matching reconstructor found.")
