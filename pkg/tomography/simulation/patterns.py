from typing import List

import numpy as np

from tomography.mesh.disk_mesh import Mesh, arc_mask
from tomography.models import TWO_PI, BoundaryArc, NeumannPattern, PatternKind

DEFAULT_PERIODS = range(1, 6)


def pattern_eval(pattern: NeumannPattern, theta) -> np.ndarray:
    """
    Current density of a pattern at boundary angles.

    On the full boundary this is cos(n theta) or sin(n theta). On a partial arc the pattern is
    stretched to n whole periods over the arc and vanishes outside it.
    """
    theta = np.asarray(theta, dtype=float)
    wave = np.cos if pattern.kind == PatternKind.cosine else np.sin
    arc = pattern.arc
    if arc.full:
        return wave(pattern.n * theta)
    phase = TWO_PI * pattern.n * (theta - arc.theta1) / arc.length
    return np.where(arc.contains(theta), wave(phase), 0.0)


def default_pattern_set(arc: BoundaryArc) -> List[NeumannPattern]:
    """Cosine and sine patterns with 1 to 5 periods on the arc."""
    return [NeumannPattern(kind=kind, n=n, arc=arc) for kind in PatternKind for n in DEFAULT_PERIODS]


def neumann_load(mesh: Mesh, pattern: NeumannPattern) -> np.ndarray:
    """
    Load vector of a pattern by trapezoidal boundary quadrature.

    The weighted mean over the support nodes is removed, so the discrete load sums to zero
    exactly and stays supported on the arc.
    """
    support = arc_mask(mesh, pattern.arc) * mesh.boundary_weights
    if not support.any():
        raise ValueError(f"Arc {pattern.arc} contains no boundary nodes of the mesh")
    g = pattern_eval(pattern, mesh.boundary_theta)
    mean = float(support @ g) / float(support.sum())
    return mesh.boundary_vector(support * (g - mean))


def neumann_loads(mesh: Mesh, patterns: List[NeumannPattern]) -> np.ndarray:
    return np.column_stack([neumann_load(mesh, pattern) for pattern in patterns])
