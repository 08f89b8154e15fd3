from concurrent.futures import ThreadPoolExecutor
from typing import List, Sequence

from tomography.fem.field import Field
from tomography.mesh.disk_mesh import Mesh
from tomography.models import CauchyDataSet, PhantomSpec, ReconConfig, SweepRow
from tomography.reconstructors.sparsity_reconstructor import reconstruct
from tomography.utils.configuration import configuration
from tomography.utils.logger import log, timeit
from tomography.utils.metrics import metrics
from tomography.utils.priors import mask_from_phantom

DEFAULT_DELTA_R = (-0.25, -0.1, 0.0, 0.1, 0.25)


def _sweep_run(phantom: PhantomSpec, dataset, mesh, sigma0, config: ReconConfig, delta_r) -> SweepRow:
    support = mask_from_phantom(phantom).region
    prior = None if delta_r is None else mask_from_phantom(phantom, dilation=delta_r)
    if prior is not None and config.prior is not None:
        prior = prior.model_copy(update={"mu_in": config.prior.mu_in, "mu_out": config.prior.mu_out})
    result = reconstruct(dataset, mesh, sigma0, config.model_copy(update={"prior": prior}))
    sigma_b, sigma_max = metrics(result.sigma, support)
    log.info("delta_r=%s: sigma_B=%.4f sigma_max=%.4f", delta_r, sigma_b, sigma_max)
    return SweepRow(
        delta_r=delta_r,
        sigma_B=sigma_b,
        sigma_max=sigma_max,
        status=result.status,
        iterations=result.iterations,
    )


@timeit
def delta_r_sweep(
    phantom: PhantomSpec,
    dataset: CauchyDataSet,
    mesh: Mesh,
    sigma0: Field,
    config: ReconConfig,
    delta_rs: Sequence[float | None] = DEFAULT_DELTA_R,
) -> List[SweepRow]:
    """
    One sparsity reconstruction per dilation of the exact-support prior, in parallel threads.
    A None entry runs without prior. Rows come back in the order of delta_rs.
    """
    with ThreadPoolExecutor(max_workers=configuration.WORKER_CONCURRENCY_LIMIT) as executor:
        futures = [executor.submit(_sweep_run, phantom, dataset, mesh, sigma0, config, dr) for dr in delta_rs]
        return [future.result() for future in futures]
