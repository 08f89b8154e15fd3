"""
Test conductivities: a circular inclusion, a kite-shaped inclusion and three smooth bumps.
"""
import numpy as np

from tomography.fem.field import Field
from tomography.mesh.disk_mesh import Mesh
from tomography.models import BumpProfile, DiskInclusion, KiteInclusion, PhantomSpec, SmoothBump


def circular_phantom(contrast: float = 4.0) -> PhantomSpec:
    return PhantomSpec(inclusions=[DiskInclusion(center=(0.3, 0.3), radius=0.25, contrast=contrast)])


def kite_phantom(contrast: float = 4.0) -> PhantomSpec:
    return PhantomSpec(inclusions=[KiteInclusion(center=(0.1, -0.05), scale=0.25, contrast=contrast)])


def multi_bump_phantom(amplitude: float = 2.0, profile: BumpProfile = BumpProfile.c1) -> PhantomSpec:
    """Two large bumps in the upper half of the disk and a small one in the lower half."""
    return PhantomSpec(
        inclusions=[
            SmoothBump(center=(-0.35, 0.45), radius=0.3, amplitude=amplitude, profile=profile),
            SmoothBump(center=(0.35, 0.45), radius=0.3, amplitude=amplitude, profile=profile),
            SmoothBump(center=(0.0, -0.55), radius=0.15, amplitude=amplitude, profile=profile),
        ]
    )


SHIPPED_PHANTOMS = {
    "circular": circular_phantom,
    "kite": kite_phantom,
    "multi": multi_bump_phantom,
}


def delta_sigma(spec: PhantomSpec, mesh: Mesh) -> Field:
    """Perturbation sigma - sigma_0 at the mesh nodes, summed over the inclusions."""
    values = np.zeros(mesh.num_nodes)
    for inclusion in spec.inclusions:
        values += inclusion.values(mesh.nodes)
    values[mesh.boundary_nodes] = 0.0
    return Field(mesh, values)


def rasterize(spec: PhantomSpec, mesh: Mesh) -> Field:
    """Nodal conductivity of the phantom."""
    return Field(mesh, spec.background + delta_sigma(spec, mesh).values)


def check_admissible(spec: PhantomSpec, mesh: Mesh, c: float):
    """Raise ValueError when the rasterized conductivity leaves [c, 1/c]."""
    sigma = rasterize(spec, mesh).values
    if sigma.min() < c or sigma.max() > 1.0 / c:
        raise ValueError(f"Phantom conductivity range [{sigma.min():.3g}, {sigma.max():.3g}] exceeds [{c}, {1.0 / c}]")
