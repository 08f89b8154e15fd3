import numpy as np
from scipy.spatial import ConvexHull, QhullError

from tomography.fem.field import Field
from tomography.mesh.disk_mesh import Mesh
from tomography.models import (
    DiskInclusion,
    DiskRegion,
    KiteInclusion,
    PhantomSpec,
    PolygonRegion,
    PriorMask,
    SmoothBump,
    UnionRegion,
)


def mu_field(mask: PriorMask | None, mesh: Mesh) -> Field:
    """
    Nodal prior weights: mu_in inside the (dilated) region, mu_out elsewhere.
    Without a mask or region every weight is 1.
    """
    if mask is None or mask.region is None:
        return Field.constant(mesh, 1.0)
    factor = 1.0 + mask.dilation
    if factor <= 0:
        raise ValueError("Dilation factor 1 + delta_r must be positive")
    region = mask.region.dilated(factor) if mask.dilation != 0.0 else mask.region
    return Field(mesh, np.where(region.contains(mesh.nodes), mask.mu_in, mask.mu_out))


def alpha_weights(alpha: float, mu: Field, beta: np.ndarray) -> np.ndarray:
    """Distributed regularization alpha_j = alpha * beta_j * mu_j."""
    if alpha <= 0:
        raise ValueError(f"Regularization parameter must be positive, got {alpha}")
    weights = alpha * np.asarray(beta, dtype=float) * mu.values
    if np.any(weights <= 0):
        raise ValueError("Regularization weights must be positive")
    return weights


def _inclusion_region(inclusion):
    match inclusion:
        case DiskInclusion() | SmoothBump():
            return DiskRegion(center=inclusion.center, radius=inclusion.radius)
        case KiteInclusion():
            return PolygonRegion(vertices=[tuple(v) for v in inclusion.curve(128).tolist()])
    raise ValueError(f"No region for inclusion shape {inclusion.shape}")


def mask_from_phantom(spec: PhantomSpec, dilation: float = 0.0, mu_in: float = 1e-2, mu_out: float = 1.0) -> PriorMask:
    """Prior whose region is the exact support of the phantom, optionally dilated."""
    if not spec.inclusions:
        raise ValueError("Phantom has no inclusions to build a prior from")
    members = [_inclusion_region(inclusion) for inclusion in spec.inclusions]
    region = members[0] if len(members) == 1 else UnionRegion(members=members)
    return PriorMask(region=region, mu_in=mu_in, mu_out=mu_out, dilation=dilation)


def mask_from_field(field: Field, level: float = 0.5, mu_in: float = 1e-2, mu_out: float = 1.0) -> PriorMask:
    """
    Prior from a reconstruction: the convex hull of the nodes where the field exceeds
    level * max(field), e.g. a thresholded TV reconstruction.
    """
    peak = float(field.values.max())
    if peak <= 0:
        raise ValueError("Field has no positive values to threshold")
    points = field.mesh.nodes[field.values > level * peak]
    try:
        hull = ConvexHull(points)
    except (QhullError, ValueError) as exc:
        raise ValueError(f"Thresholded support is degenerate: {exc}") from exc
    region = PolygonRegion(vertices=[tuple(v) for v in points[hull.vertices].tolist()])
    return PriorMask(region=region, mu_in=mu_in, mu_out=mu_out)
