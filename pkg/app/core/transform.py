# app/core/transform.py
"""
Polar maps between the first sector and its flattened image.

    phi1(r, theta, y)   = (r cos theta, r sin theta, y)
    phi2(r, theta, eta) = (r^{a+1} cos((a+1) theta), r^{a+1} sin((a+1) theta), 0) / (a+1) + (0, 0, eta)

The flattening map is phi2 o phi1^{-1}; it sends the weighted measure
|x|^{2a} dx dy on the sector to Lebesgue measure on the image sector of
opening (a+1) pi / n, and the weighted sector perimeter to Euclidean area.
`psi_inverse` is the flattening map and `psi` its inverse.
"""
import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from app.core.config import WALL_TOLERANCE
from app.core.errors import DomainError
from app.core.grid import tree_reduce
from app.core.geometry import (
    as_alpha,
    sector_perimeter,
    voxel_integral,
    weighted_volume,
)
from app.core.shapes import ImplicitShape, patch_from_param, rotate_shape, wedge_bounds
from app.core.triangulate import triangulate_level
from app.schemas.common import AlphaParam, QuadratureConfig
from app.schemas.geometry import PushforwardCheck

logger = logging.getLogger(__name__)

AlphaLike = Union[float, AlphaParam]


@dataclass(frozen=True)
class PolarTriple:
    r: float
    theta: float
    y: float


def _validate(t: PolarTriple, opening: float) -> None:
    if not t.r > 0:
        raise DomainError(f"polar radius must be positive, got {t.r}")
    if not 0 < t.theta < opening:
        raise DomainError(f"polar angle {t.theta} outside (0, {opening})")


def phi1(t: PolarTriple, alpha: AlphaLike) -> Tuple[float, float, float]:
    alpha = as_alpha(alpha)
    _validate(t, alpha.sector_width)
    return (t.r * math.cos(t.theta), t.r * math.sin(t.theta), t.y)


def phi1_inverse(p: Sequence[float], alpha: AlphaLike) -> PolarTriple:
    alpha = as_alpha(alpha)
    t = PolarTriple(math.hypot(p[0], p[1]), math.atan2(p[1], p[0]), float(p[2]))
    _validate(t, alpha.sector_width)
    return t


def phi2(t: PolarTriple, alpha: AlphaLike) -> Tuple[float, float, float]:
    alpha = as_alpha(alpha)
    _validate(t, alpha.sector_width)
    a1 = alpha.alpha + 1.0
    rho = t.r ** a1 / a1
    return (rho * math.cos(a1 * t.theta), rho * math.sin(a1 * t.theta), t.y)


def phi2_inverse(xi: Sequence[float], alpha: AlphaLike) -> PolarTriple:
    alpha = as_alpha(alpha)
    a1 = alpha.alpha + 1.0
    rho = math.hypot(xi[0], xi[1])
    angle = math.atan2(xi[1], xi[0])
    if not rho > 0 or not 0 < angle < a1 * alpha.sector_width:
        raise DomainError(f"point {tuple(xi)} is not inside the flattened sector")
    return PolarTriple((a1 * rho) ** (1.0 / a1), angle / a1, float(xi[2]))


def psi_inverse(p: Sequence[float], alpha: AlphaLike) -> Tuple[float, float, float]:
    """Flattening map phi2 o phi1^{-1}: sector 1 -> flattened sector."""
    return phi2(phi1_inverse(p, alpha), alpha)


def psi(xi: Sequence[float], alpha: AlphaLike) -> Tuple[float, float, float]:
    """Inverse of the flattening map."""
    return phi1(phi2_inverse(xi, alpha), alpha)


# ---------------------------------------------------------------------------
# Array versions without validation, for quadrature
# ---------------------------------------------------------------------------

def flatten_points(x1, x2, y, alpha: AlphaParam):
    a1 = alpha.alpha + 1.0
    r = np.hypot(x1, x2)
    theta = np.arctan2(x2, x1)
    rho = r ** a1 / a1
    return rho * np.cos(a1 * theta), rho * np.sin(a1 * theta), y


def unflatten_points(xi1, xi2, eta, alpha: AlphaParam):
    a1 = alpha.alpha + 1.0
    rho = np.hypot(xi1, xi2)
    angle = np.mod(np.arctan2(xi2, xi1), 2 * math.pi)
    r = (a1 * rho) ** (1.0 / a1)
    theta = angle / a1
    return r * np.cos(theta), r * np.sin(theta), eta


def image_opening(alpha: AlphaParam) -> float:
    return (alpha.alpha + 1.0) * alpha.sector_width


def angle_dilation_check(points: np.ndarray, alpha: AlphaLike) -> float:
    """Largest deviation of the flattened polar angle from (a+1) theta."""
    alpha = as_alpha(alpha)
    points = np.asarray(points, dtype=float)
    xi1, xi2, _ = flatten_points(points[:, 0], points[:, 1], points[:, 2], alpha)
    expected = (alpha.alpha + 1.0) * np.arctan2(points[:, 1], points[:, 0])
    return float(np.max(np.abs(np.arctan2(xi2, xi1) - expected)))


def rotate_to_first_sector(shape: ImplicitShape, j: int, alpha: AlphaLike) -> ImplicitShape:
    """Rotates a shape of sector j onto sector 1."""
    alpha = as_alpha(alpha)
    if not 1 <= j <= alpha.sector_total:
        raise DomainError(f"sector index {j} outside 1..{alpha.sector_total}")
    rotated = rotate_shape(shape, -(j - 1) * alpha.sector_width)
    return replace(rotated, sector=1 if shape.sector == j else rotated.sector)


# ---------------------------------------------------------------------------
# Pushforward checks
# ---------------------------------------------------------------------------

def _require_first_sector(shape: ImplicitShape, alpha: AlphaParam, samples: int = 32) -> Optional[float]:
    """
    Raises if the shape reaches outside the closed first sector. Returns a
    bound on |x| over the shape, or None for a shape with no interior samples.
    """
    lo, hi = np.array(shape.lo), np.array(shape.hi)
    h = (hi - lo) / samples
    axes = [lo[d] + (np.arange(samples) + 0.5) * h[d] for d in range(3)]
    X1, X2, Y = np.meshgrid(*axes, indexing="ij")
    inside = np.broadcast_to(shape.level(X1, X2, Y), X1.shape) < 0
    if not np.any(inside):
        return None
    theta = np.mod(np.arctan2(X2[inside], X1[inside]), 2 * math.pi)
    slack = WALL_TOLERANCE * 2 * math.pi
    outside = (theta > alpha.sector_width + slack) & (theta < 2 * math.pi - slack)
    if np.any(outside):
        raise DomainError(f"shape {shape.name} leaves the first sector")
    corner = max(math.hypot(x, y) for x in (lo[0], hi[0]) for y in (lo[1], hi[1]))
    reach = float(np.max(np.hypot(X1[inside], X2[inside]))) + 2 * math.hypot(h[0], h[1])
    return min(corner, reach)


def _image_level(shape: ImplicitShape, alpha: AlphaParam):
    opening = image_opening(alpha)
    sb, cb = math.sin(opening), math.cos(opening)

    def level(xi1, xi2, eta):
        x1, x2, y = unflatten_points(xi1, xi2, eta, alpha)
        return np.maximum(np.maximum(shape.level(x1, x2, y), -xi2), cb * xi2 - sb * xi1)

    return level


def _image_bounds(shape: ImplicitShape, alpha: AlphaParam, r_max: float):
    a1 = alpha.alpha + 1.0
    (x_lo, x_hi), (y_lo, y_hi) = wedge_bounds(r_max ** a1 / a1, 0.0, image_opening(alpha))
    return (x_lo, y_lo, shape.lo[2]), (x_hi, y_hi, shape.hi[2])


def _gap(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return abs(a - b) / scale if scale > 0 else 0.0


def pushforward_volume_check(shape: ImplicitShape, alpha: AlphaLike, cfg: QuadratureConfig) -> PushforwardCheck:
    """|E|_{2,a} against the Lebesgue volume of the flattened shape."""
    alpha = as_alpha(alpha)
    r_max = _require_first_sector(shape, alpha)
    if r_max is None:
        return PushforwardCheck(weighted=0.0, euclidean=0.0, rel_gap=0.0)
    weighted = weighted_volume(shape, alpha, cfg)
    lo, hi = _image_bounds(shape, alpha, r_max)
    euclidean = voxel_integral(
        _image_level(shape, alpha), lo, hi, lambda xi1, xi2, eta: np.ones(np.shape(xi1)), cfg
    )
    logger.debug("pushforward volume: weighted=%.10g euclidean=%.10g", weighted, euclidean)
    return PushforwardCheck(weighted=weighted, euclidean=euclidean, rel_gap=_gap(weighted, euclidean))


def _strictly_inside_image(points: np.ndarray, alpha: AlphaParam) -> np.ndarray:
    angle = np.mod(np.arctan2(points[:, 1], points[:, 0]), 2 * math.pi)
    k = angle / image_opening(alpha)
    rho = np.hypot(points[:, 0], points[:, 1])
    return (k > WALL_TOLERANCE) & (k < 1.0 - WALL_TOLERANCE) & (rho > 0)


def pushforward_perimeter_check(shape: ImplicitShape, alpha: AlphaLike, cfg: QuadratureConfig) -> PushforwardCheck:
    """P_{2,a,1}(E) against the Euclidean area of the flattened boundary inside the image sector."""
    alpha = as_alpha(alpha)
    r_max = _require_first_sector(shape, alpha)
    if r_max is None:
        return PushforwardCheck(weighted=0.0, euclidean=0.0, rel_gap=0.0)
    weighted = sector_perimeter(shape, alpha, 1, cfg)

    image_level = _image_level(shape, alpha)
    parts = []
    if shape.patches:
        for patch in shape.patches:
            def param(s, t, patch=patch):
                p = patch.param(s, t)
                return np.stack(flatten_points(p[..., 0], p[..., 1], p[..., 2], alpha), axis=-1)

            image = patch_from_param(param, patch.domain, image_level, name=patch.name)
            points, _, weights = image.sample(cfg.surface_resolution)
            parts.append(float(np.sum(weights[_strictly_inside_image(points, alpha)])))
    else:
        lo, hi = _image_bounds(shape, alpha, r_max)
        centroids, _, areas = triangulate_level(image_level, lo, hi, cfg.volume_resolution)
        parts.append(float(np.sum(areas[_strictly_inside_image(centroids, alpha)])))
    euclidean = tree_reduce(parts)
    logger.debug("pushforward perimeter: weighted=%.10g euclidean=%.10g", weighted, euclidean)
    return PushforwardCheck(weighted=weighted, euclidean=euclidean, rel_gap=_gap(weighted, euclidean))
