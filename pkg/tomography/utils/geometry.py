import numpy as np


def polygon_contains(points: np.ndarray, vertices: np.ndarray) -> np.ndarray:
    """
    Point membership in a closed polygon by winding number.

    Args:
        points (np.ndarray): (P, 2) query points.
        vertices (np.ndarray): (V, 2) polygon vertices, first vertex not repeated.

    Returns:
        np.ndarray: (P,) boolean array, True where the winding number is nonzero.
    """
    points = np.atleast_2d(points)
    x, y = points[:, 0][:, None], points[:, 1][:, None]
    x0, y0 = vertices[:, 0][None, :], vertices[:, 1][None, :]
    nxt = np.roll(vertices, -1, axis=0)
    x1, y1 = nxt[:, 0][None, :], nxt[:, 1][None, :]

    # signed area test: > 0 when the point lies left of the edge
    is_left = (x1 - x0) * (y - y0) - (x - x0) * (y1 - y0)
    upward = (y0 <= y) & (y1 > y) & (is_left > 0)
    downward = (y0 > y) & (y1 <= y) & (is_left < 0)
    winding = upward.sum(axis=1) - downward.sum(axis=1)
    return winding != 0


def polygon_area_centroid(vertices: np.ndarray):
    """Signed area and area centroid of a simple polygon (shoelace formula)."""
    x, y = vertices[:, 0], vertices[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * cross.sum()
    if abs(area) < 1e-15:
        return 0.0, vertices.mean(axis=0)
    cx = ((x + xn) * cross).sum() / (6.0 * area)
    cy = ((y + yn) * cross).sum() / (6.0 * area)
    return area, np.array([cx, cy])


def kite_curve(center, scale: float, rotation: float = 0.0, samples: int = 256) -> np.ndarray:
    """
    Sample the kite curve center + scale * R(rotation) (cos t + 0.65 cos 2t - 0.65, 1.5 sin t).
    """
    t = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
    local = np.column_stack((np.cos(t) + 0.65 * np.cos(2.0 * t) - 0.65, 1.5 * np.sin(t)))
    c, s = np.cos(rotation), np.sin(rotation)
    rot = np.array([[c, -s], [s, c]])
    return np.asarray(center, dtype=float) + scale * local @ rot.T


def angles(points: np.ndarray) -> np.ndarray:
    """Angular coordinate in [0, 2*pi)."""
    theta = np.mod(np.arctan2(points[:, 1], points[:, 0]), 2.0 * np.pi)
    # mod of a tiny negative angle rounds up to 2*pi
    theta[theta >= 2.0 * np.pi] = 0.0
    return theta
