from typing import Protocol

import numpy as np

from tomography.fem.field import Field
from tomography.models import PhantomSpec


class Region(Protocol):
    def contains(self, points: np.ndarray) -> np.ndarray: ...


def region_mean(field: Field, region: Region | None = None) -> float:
    """Mean of the field over the triangles whose centroid lies in the region (the whole disk for None)."""
    mesh = field.mesh
    selected = np.ones(mesh.num_triangles, dtype=bool) if region is None else region.contains(mesh.centroids)
    if not selected.any():
        raise ValueError("Region contains no triangle centroids")
    areas = mesh.areas[selected]
    return float(areas @ field.triangle_means()[selected] / areas.sum())


def metrics(sigma: Field, region: Region | None = None) -> tuple:
    """(sigma_E, sigma_max): mean over E and the largest nodal magnitude."""
    return region_mean(sigma, region), float(np.max(np.abs(sigma.values)))


def support_overlap(delta_gamma: Field, phantom: PhantomSpec) -> float:
    """Jaccard index of the nodes above half the maximum and the nodes inside the true inclusions."""
    nodes = delta_gamma.mesh.nodes
    truth = phantom.support_contains(nodes)
    peak = float(delta_gamma.values.max())
    found = delta_gamma.values > 0.5 * peak if peak > 0 else np.zeros(len(nodes), dtype=bool)
    union = np.count_nonzero(truth | found)
    if union == 0:
        return 1.0
    return np.count_nonzero(truth & found) / union
