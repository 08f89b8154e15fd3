from typing import List, Optional

import numpy as np

from tomography.fem.assembly import assemble
from tomography.fem.field import Field
from tomography.fem.solver import BoundaryData, solve_patterns
from tomography.mesh.disk_mesh import Mesh
from tomography.models import TWO_PI, BoundaryArc, CauchyDataSet, NeumannPattern, PatternSamples, PhantomSpec
from tomography.simulation.patterns import default_pattern_set, neumann_loads
from tomography.utils.logger import log, timeit

RECOMMENDED_MESH_RATIO = 3.0


def noise_generator(seed: int, k: int) -> np.random.Generator:
    """PCG64 stream for pattern k, independent of the order patterns are processed in."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(k,))))


def angular_resample(theta_source, values, theta_target, arc: BoundaryArc) -> np.ndarray:
    """Piecewise linear interpolation in the boundary angle."""
    theta_source = np.asarray(theta_source, dtype=float)
    values = np.asarray(values, dtype=float)
    theta_target = np.asarray(theta_target, dtype=float)
    if theta_source.shape == theta_target.shape and np.array_equal(theta_source, theta_target):
        return values.copy()
    if arc.full:
        return np.interp(theta_target, theta_source, values, period=TWO_PI)
    return np.interp(theta_target, theta_source, values)


def _same_mesh(first: Mesh, second: Mesh) -> bool:
    return first is second or (
        first.nodes.shape == second.nodes.shape
        and first.triangles.shape == second.triangles.shape
        and np.array_equal(first.nodes, second.nodes)
    )


@timeit
def simulate(
    true_sigma: Field,
    arc: BoundaryArc,
    recon_mesh: Mesh,
    eps: float,
    seed: int,
    patterns: Optional[List[NeumannPattern]] = None,
    allow_inverse_crime: bool = False,
    phantom: Optional[PhantomSpec] = None,
) -> CauchyDataSet:
    """
    Simulate partial Cauchy data on the mesh of true_sigma and sample it on the reconstruction mesh.

    The fine boundary trace is interpolated in angle to the Dirichlet nodes of recon_mesh and
    grounded there with the trapezoidal rule. Gaussian noise with standard deviation
    eps * max_k max_j |f_k(x_j)| is then added at those nodes, one seeded stream per pattern.

    Args:
        true_sigma (Field): conductivity on the simulation mesh.
        arc (BoundaryArc): boundary part carrying currents and measurements.
        recon_mesh (Mesh): mesh the data is sampled for.
        eps (float): relative noise level.
        seed (int): seed of the noise streams.
        patterns (list): Neumann patterns, the ten default patterns of the arc when omitted.
        allow_inverse_crime (bool): permit simulating on the reconstruction mesh itself.
        phantom (PhantomSpec): phantom recorded in the dataset for later reports.

    Returns:
        CauchyDataSet: patterns and noisy Dirichlet samples.
    """
    if eps < 0:
        raise ValueError(f"Noise level must be nonnegative, got {eps}")
    fine = true_sigma.mesh
    if _same_mesh(fine, recon_mesh):
        if not allow_inverse_crime:
            raise ValueError("Simulation and reconstruction meshes coincide; pass allow_inverse_crime to proceed")
        log.warning("Simulating on the reconstruction mesh, the data commits an inverse crime")
    elif recon_mesh.h_mean < RECOMMENDED_MESH_RATIO * fine.h_mean:
        log.warning(
            "Simulation mesh is only %.2f times finer than the reconstruction mesh",
            recon_mesh.h_mean / fine.h_mean,
        )

    patterns = patterns if patterns is not None else default_pattern_set(arc)
    system = assemble(fine, true_sigma, arc)
    potentials = solve_patterns(system, neumann_loads(fine, patterns))
    traces = potentials[fine.boundary_nodes]

    on_arc = arc.contains(recon_mesh.boundary_theta)
    theta = recon_mesh.boundary_theta[on_arc]
    weights = recon_mesh.boundary_weights[on_arc]
    if not on_arc.any():
        raise ValueError(f"Arc {arc} contains no boundary nodes of the reconstruction mesh")

    clean = []
    for k in range(len(patterns)):
        f = angular_resample(fine.boundary_theta, traces[:, k], theta, BoundaryArc.full_boundary())
        clean.append(f - float(weights @ f) / float(weights.sum()))

    noise_std = eps * max(float(np.max(np.abs(f))) for f in clean)
    samples = []
    for k, f in enumerate(clean):
        noisy = f + noise_generator(seed, k).normal(0.0, noise_std, size=f.shape) if noise_std > 0 else f
        samples.append(PatternSamples(theta=theta.tolist(), values=noisy.tolist()))

    log.info(
        "Simulated %d patterns on arc %s, eps=%s, noise std=%.3e, %d samples each",
        len(patterns),
        arc,
        eps,
        noise_std,
        len(theta),
    )
    return CauchyDataSet(
        patterns=patterns,
        samples=samples,
        arc=arc,
        noise_level=eps,
        noise_std=noise_std,
        seed=seed,
        fine_mesh_h=fine.h,
        recon_mesh_h=recon_mesh.h,
        phantom=phantom,
    )


def discretize(dataset: CauchyDataSet, mesh: Mesh) -> BoundaryData:
    """Bind a dataset to a mesh: Neumann loads plus Dirichlet samples at the arc nodes of the mesh."""
    arc = dataset.arc
    on_arc = arc.contains(mesh.boundary_theta)
    if not on_arc.any():
        raise ValueError(f"Arc {arc} contains no boundary nodes of the mesh")
    theta = mesh.boundary_theta[on_arc]

    dirichlet = np.zeros((mesh.num_nodes, dataset.size))
    for k, sample in enumerate(dataset.samples):
        if len(sample.theta) < 2:
            raise ValueError("Each pattern needs at least two Dirichlet samples")
        boundary = np.zeros(len(mesh.boundary_nodes))
        boundary[on_arc] = angular_resample(sample.theta, sample.values, theta, arc)
        dirichlet[:, k] = mesh.boundary_vector(boundary)

    return BoundaryData(
        mesh=mesh,
        arc=arc,
        loads=neumann_loads(mesh, dataset.patterns),
        dirichlet=dirichlet,
        weights=mesh.boundary_vector(on_arc * mesh.boundary_weights),
    )
