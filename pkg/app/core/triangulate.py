# app/core/triangulate.py
"""
Boundary sampling for shapes without analytic patches: the zero level set is
triangulated on a regular node grid and every triangle contributes its
centroid, area and a level-gradient normal.
"""
import logging
from typing import Sequence, Tuple

import numpy as np
from skimage import measure

from app.core.errors import ComputationError

logger = logging.getLogger(__name__)


def _gradient(level, points: np.ndarray, step: np.ndarray) -> np.ndarray:
    grads = []
    for d in range(3):
        offset = np.zeros(3)
        offset[d] = step[d]
        ahead = points + offset
        behind = points - offset
        grads.append(
            (level(ahead[:, 0], ahead[:, 1], ahead[:, 2]) - level(behind[:, 0], behind[:, 1], behind[:, 2]))
            / (2 * step[d])
        )
    return np.stack(grads, axis=-1)


def triangulate_level(
    level,
    lo: Sequence[float],
    hi: Sequence[float],
    resolution: int,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Returns (centroids, unit normals, areas) of a marching-cubes mesh of
    {level = 0}. The node grid is padded by one cell so surfaces touching
    the box are closed.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    h = (hi - lo) / resolution
    origin = lo - h
    axes = [origin[d] + np.arange(resolution + 3) * h[d] for d in range(3)]
    values = np.broadcast_to(
        level(axes[0][:, None, None], axes[1][None, :, None], axes[2][None, None, :]),
        (resolution + 3,) * 3,
    ).astype(float)

    if np.all(values > 0):
        empty = np.zeros((0, 3))
        return empty, empty, np.zeros(0)
    if np.all(values <= 0):
        raise ComputationError("level function is nonpositive on the whole padded box; no boundary to triangulate")

    try:
        verts, faces, _, _ = measure.marching_cubes(values, level=0.0, spacing=tuple(h))
    except (ValueError, RuntimeError) as e:
        raise ComputationError(f"triangulation failed: {e}")

    triangles = verts[faces] + origin
    centroids = triangles.mean(axis=1)
    cross = np.cross(triangles[:, 1] - triangles[:, 0], triangles[:, 2] - triangles[:, 0])
    areas = 0.5 * np.linalg.norm(cross, axis=1)

    grad = _gradient(level, centroids, 1e-3 * h)
    norm = np.linalg.norm(grad, axis=1)
    facet = cross / np.where(areas > 0, 2 * areas, 1.0)[:, None]
    normals = np.where((norm > 0)[:, None], grad / np.where(norm > 0, norm, 1.0)[:, None], facet)
    normals = normals / np.where(np.linalg.norm(normals, axis=1) > 0, np.linalg.norm(normals, axis=1), 1.0)[:, None]

    logger.debug("Triangulated level set: %d triangles, area %.6g", len(faces), float(areas.sum()))
    return centroids, normals, areas
