# app/core/geometry.py
"""
Weighted volume, weighted perimeter and sector perimeter of implicit shapes,
and the isoperimetric quotient measured against the reference ball sector.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import ValidationError

from app.core.config import ISOPERIMETRIC_SLACK, WALL_TOLERANCE
from app.core.errors import ComputationError, DomainError
from app.core.grid import map_slabs, tree_reduce
from app.core.shapes import ImplicitShape, anisotropic_scale, lipschitz_estimate
from app.core.triangulate import triangulate_level
from app.schemas.common import AlphaParam, QuadratureConfig
from app.schemas.geometry import ConvergenceStudy, IsoperimetricCheck, PowerSumCheck

logger = logging.getLogger(__name__)

WeightFn = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def as_alpha(alpha: Union[float, AlphaParam]) -> AlphaParam:
    if isinstance(alpha, AlphaParam):
        return alpha
    try:
        return AlphaParam(alpha=alpha)
    except ValidationError:
        raise DomainError(f"alpha must be a positive finite number, got {alpha!r}")


def sector_count(alpha: float) -> int:
    """Smallest positive integer n with n >= alpha + 1."""
    return as_alpha(alpha).sector_count


def sector_indices(x1, x2, alpha: AlphaParam) -> np.ndarray:
    """Sector index j in 1..2n for each point; 0 on walls and on the y-axis."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    theta = np.mod(np.arctan2(x2, x1), 2 * math.pi)
    k = theta / alpha.sector_width
    on_wall = np.abs(k - np.round(k)) < WALL_TOLERANCE
    j = np.floor(k).astype(int) + 1
    return np.where(on_wall | ((x1 == 0) & (x2 == 0)), 0, j)


def sector_of_point(p: Sequence[float], alpha: Union[float, AlphaParam]) -> Optional[int]:
    alpha = as_alpha(alpha)
    j = int(sector_indices(p[0], p[1], alpha))
    return j if j > 0 else None


def _check_sector(j: int, alpha: AlphaParam) -> None:
    if not 1 <= j <= alpha.sector_total:
        raise DomainError(f"sector index {j} outside 1..{alpha.sector_total}")


# ---------------------------------------------------------------------------
# Voxel quadrature
# ---------------------------------------------------------------------------

def _evaluate(level, points: np.ndarray) -> np.ndarray:
    return np.broadcast_to(level(points[:, 0], points[:, 1], points[:, 2]), points.shape[:1])


def _cell_fraction(level, centers: np.ndarray, size: np.ndarray) -> np.ndarray:
    """
    Share of each cell on the negative side of a linearized level function.
    Falls back to the center indicator where the gradient vanishes.
    """
    value = _evaluate(level, centers)
    spread = np.zeros_like(value)
    for d in range(3):
        offset = np.zeros(3)
        offset[d] = 0.5 * size[d]
        slope = _evaluate(level, centers + offset) - _evaluate(level, centers - offset)
        spread += np.abs(slope)
    flat = spread == 0
    fraction = np.clip(0.5 - value / np.where(flat, 1.0, spread), 0.0, 1.0)
    return np.where(flat, (value < 0).astype(float), fraction)


_CORNERS = np.array([[i, j, k] for i in (-0.5, 0.5) for j in (-0.5, 0.5) for k in (-0.5, 0.5)])


def _classify(level, centers: np.ndarray, size: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(inside, mixed) masks from the signs at the corners and the center."""
    samples = [_evaluate(level, centers)]
    for corner in _CORNERS:
        samples.append(_evaluate(level, centers + corner * size))
    stacked = np.stack(samples)
    inside = np.all(stacked < 0, axis=0)
    outside = np.all(stacked >= 0, axis=0)
    return inside, ~(inside | outside)


def _refine(level, weight: WeightFn, centers: np.ndarray, size: np.ndarray, depth: int) -> float:
    if len(centers) == 0:
        return 0.0
    cell = float(np.prod(size))
    if depth == 0:
        w = weight(centers[:, 0], centers[:, 1], centers[:, 2])
        return float(np.sum(_cell_fraction(level, centers, size) * w)) * cell

    half = 0.5 * size
    children = (centers[:, None, :] + 0.5 * _CORNERS[None, :, :] * size).reshape(-1, 3)
    inside, mixed = _classify(level, children, half)
    full = children[inside]
    total = float(np.sum(weight(full[:, 0], full[:, 1], full[:, 2]))) * float(np.prod(half))
    return total + _refine(level, weight, children[mixed], half, depth - 1)


def voxel_integral(
    level,
    lo: Sequence[float],
    hi: Sequence[float],
    weight: WeightFn,
    cfg: QuadratureConfig,
) -> float:
    """
    Integral of `weight` over {level < 0} within [lo, hi]. Cells whose
    corner and center signs disagree are split recursively down to
    cfg.refine_depth; leaves use a linearized volume fraction.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(hi <= lo):
        raise DomainError(f"degenerate bounding box lo={lo.tolist()} hi={hi.tolist()}")
    N = cfg.volume_resolution
    h = (hi - lo) / N
    a1 = lo[0] + (np.arange(N) + 0.5) * h[0]
    a2 = lo[1] + (np.arange(N) + 0.5) * h[1]

    def slab(k0: int, k1: int) -> float:
        a3 = lo[2] + (np.arange(k0, k1) + 0.5) * h[2]
        C1, C2, C3 = np.meshgrid(a1, a2, a3, indexing="ij")
        centers = np.stack([C1.ravel(), C2.ravel(), C3.ravel()], axis=-1)
        inside, mixed = _classify(level, centers, h)
        full = centers[inside]
        total = float(np.sum(weight(full[:, 0], full[:, 1], full[:, 2]))) * float(np.prod(h))
        return total + _refine(level, weight, centers[mixed], h, cfg.refine_depth)

    return map_slabs(slab, N, cfg.threads)


def _grushin_weight(alpha: AlphaParam) -> WeightFn:
    a = alpha.alpha
    return lambda x1, x2, y: (x1 * x1 + x2 * x2) ** a


def weighted_volume(shape: ImplicitShape, alpha: Union[float, AlphaParam], cfg: QuadratureConfig) -> float:
    """|E|_{2,a}: the integral of |x|^{2a} over the shape."""
    alpha = as_alpha(alpha)
    if shape.degenerate:
        raise DomainError(f"shape {shape.name} has a degenerate bounding box")
    value = voxel_integral(shape.level, shape.lo, shape.hi, _grushin_weight(alpha), cfg)
    logger.debug("weighted_volume(%s, alpha=%g, N=%d) = %.12g", shape.name, alpha.alpha, cfg.volume_resolution, value)
    return value


# ---------------------------------------------------------------------------
# Surface quadrature
# ---------------------------------------------------------------------------

def perimeter_density(points: np.ndarray, normals: np.ndarray, alpha: AlphaParam) -> np.ndarray:
    """|x|^a sqrt(n1^2 + n2^2 + |x|^{2a} n3^2) at boundary samples."""
    rx = np.hypot(points[:, 0], points[:, 1])
    ra = rx ** alpha.alpha
    return ra * np.sqrt(normals[:, 0] ** 2 + normals[:, 1] ** 2 + (ra * normals[:, 2]) ** 2)


def boundary_samples(shape: ImplicitShape, cfg: QuadratureConfig) -> List[Tuple[np.ndarray, np.ndarray, np.ndarray]]:
    if shape.patches:
        res = cfg.surface_resolution
        if cfg.threads > 1 and len(shape.patches) > 1:
            with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
                return list(pool.map(lambda p: p.sample(res), shape.patches))
        return [p.sample(res) for p in shape.patches]
    if shape.degenerate:
        raise DomainError(f"shape {shape.name} has a degenerate bounding box")
    if not np.isfinite(lipschitz_estimate(shape)):
        raise ComputationError(f"shape {shape.name}: level function is not Lipschitz on its bounding box")
    try:
        return [triangulate_level(shape.level, shape.lo, shape.hi, cfg.volume_resolution)]
    except ComputationError:
        raise
    except Exception as e:
        raise ComputationError(f"shape {shape.name}: no patches and triangulation failed: {e}")


def boundary_integrals(shape: ImplicitShape, alpha: AlphaParam, cfg: QuadratureConfig) -> Tuple[float, List[float]]:
    """
    Weighted perimeter together with the per-sector perimeters j = 1..2n,
    from one pass over the boundary samples.
    """
    total_parts: List[float] = []
    sector_parts: List[np.ndarray] = []
    for points, normals, weights in boundary_samples(shape, cfg):
        contrib = perimeter_density(points, normals, alpha) * weights
        total_parts.append(float(np.sum(contrib)))
        ids = sector_indices(points[:, 0], points[:, 1], alpha) if len(points) else np.zeros(0, dtype=int)
        sector_parts.append(np.bincount(ids, weights=contrib, minlength=alpha.sector_total + 1))
    sectors = [
        tree_reduce([part[j] for part in sector_parts]) for j in range(1, alpha.sector_total + 1)
    ]
    return tree_reduce(total_parts), sectors


def weighted_perimeter(shape: ImplicitShape, alpha: Union[float, AlphaParam], cfg: QuadratureConfig) -> float:
    """P_{2,a}(E) over the whole boundary, walls included."""
    alpha = as_alpha(alpha)
    total, _ = boundary_integrals(shape, alpha, cfg)
    return total


def sector_perimeter(shape: ImplicitShape, alpha: Union[float, AlphaParam], j: int, cfg: QuadratureConfig) -> float:
    """P_{2,a,j}(E): the boundary part strictly inside sector j."""
    alpha = as_alpha(alpha)
    _check_sector(j, alpha)
    _, sectors = boundary_integrals(shape, alpha, cfg)
    return sectors[j - 1]


def sector_perimeters(shape: ImplicitShape, alpha: Union[float, AlphaParam], cfg: QuadratureConfig) -> List[float]:
    return boundary_integrals(shape, as_alpha(alpha), cfg)[1]


# ---------------------------------------------------------------------------
# Isoperimetric quotient
# ---------------------------------------------------------------------------

def reference_quotient(alpha: Union[float, AlphaParam]) -> float:
    """Quotient of the reference ball sector: (2(a+1)pi/n)^{3/2} / (2pi(a+1)/(3n))."""
    alpha = as_alpha(alpha)
    n = alpha.sector_count
    a1 = alpha.alpha + 1.0
    return (2 * a1 * math.pi / n) ** 1.5 / (2 * math.pi * a1 / (3 * n))


def _scored_perimeter(shape: ImplicitShape, alpha: AlphaParam, cfg: QuadratureConfig) -> float:
    if shape.sector is not None:
        return sector_perimeter(shape, alpha, shape.sector, cfg)
    return weighted_perimeter(shape, alpha, cfg)


def isoperimetric_quotient(shape: ImplicitShape, alpha: Union[float, AlphaParam], cfg: QuadratureConfig) -> float:
    """
    P^{3/2} / |E|_{2,a}. Shapes confined to one sector are scored with
    their relative perimeter P_{2,a,j}.
    """
    alpha = as_alpha(alpha)
    volume = weighted_volume(shape, alpha, cfg)
    if volume <= 0:
        raise DomainError(f"shape {shape.name} has zero weighted volume")
    return _scored_perimeter(shape, alpha, cfg) ** 1.5 / volume


def isoperimetric_deficit(shape: ImplicitShape, alpha: Union[float, AlphaParam], cfg: QuadratureConfig) -> float:
    return isoperimetric_quotient(shape, alpha, cfg) - reference_quotient(alpha)


def isoperimetric_check(shape: ImplicitShape, alpha: Union[float, AlphaParam], cfg: QuadratureConfig) -> IsoperimetricCheck:
    """The deficit with its slack and a half-resolution error estimate."""
    alpha = as_alpha(alpha)
    quotient = isoperimetric_quotient(shape, alpha, cfg)
    coarse = isoperimetric_quotient(shape, alpha, cfg.halved())
    reference = reference_quotient(alpha)
    deficit = quotient - reference
    tolerance = ISOPERIMETRIC_SLACK * reference
    return IsoperimetricCheck(
        quotient=quotient,
        reference=reference,
        deficit=deficit,
        tolerance=tolerance,
        error_estimate=abs(quotient - coarse),
        passed=deficit >= -tolerance,
    )


def power_sum_check(shape: ImplicitShape, alpha: Union[float, AlphaParam], cfg: QuadratureConfig) -> PowerSumCheck:
    """P^{3/2} against the sum over sectors of P_j^{3/2}."""
    alpha = as_alpha(alpha)
    total, sectors = boundary_integrals(shape, alpha, cfg)
    lhs = total ** 1.5
    rhs = float(sum(p ** 1.5 for p in sectors))
    margin = lhs - rhs
    return PowerSumCheck(total=lhs, sector_sum=rhs, margin=margin, passed=margin >= -1e-9 * max(lhs, 1.0))


# ---------------------------------------------------------------------------
# Studies
# ---------------------------------------------------------------------------

def observed_order(values: Sequence[float]) -> Optional[float]:
    """Convergence order from three values at successively doubled resolution."""
    if len(values) < 3:
        return None
    d1 = abs(values[-2] - values[-3])
    d2 = abs(values[-1] - values[-2])
    if d1 == 0 or d2 == 0:
        return None
    return math.log2(d1 / d2)


def volume_convergence(shape: ImplicitShape, alpha: Union[float, AlphaParam], cfg: QuadratureConfig) -> ConvergenceStudy:
    alpha = as_alpha(alpha)
    resolutions = [cfg.volume_resolution, 2 * cfg.volume_resolution, 4 * cfg.volume_resolution]
    values = [
        weighted_volume(shape, alpha, cfg.model_copy(update={"volume_resolution": n})) for n in resolutions
    ]
    return ConvergenceStudy(resolutions=resolutions, values=values, order=observed_order(values))


def scaling_exponents(
    shape: ImplicitShape,
    alpha: Union[float, AlphaParam],
    cfg: QuadratureConfig,
    lam: float = 2.0,
) -> Dict[str, float]:
    """Measured exponents of volume and perimeter under the anisotropic dilation."""
    alpha = as_alpha(alpha)
    scaled = anisotropic_scale(shape, lam, alpha)
    base = math.log(lam)
    return {
        "volume_exponent": math.log(weighted_volume(scaled, alpha, cfg) / weighted_volume(shape, alpha, cfg)) / base,
        "perimeter_exponent": math.log(
            weighted_perimeter(scaled, alpha, cfg) / weighted_perimeter(shape, alpha, cfg)
        ) / base,
    }
