# app/core/pohozaev.py
"""
The Pohozaev identity for -Delta_G u = |x|^{2a} |u|^{p-1} u with zero
Dirichlet data on a box:

    ((3a+3)/(p+1) - (a+1)/2) int |x|^{2a} |u|^{p+1}
        = 1/2 int_{boundary} g (n1^2 + n2^2 + |x|^{2a} n3^2) (du/dn)^2,
    g = x1 n1 + x2 n2 + (1 + a) y n3.

A negative coefficient (p > 5) on a star-shaped domain leaves only u = 0.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from app.core.config import POHOZAEV_EPSILON
from app.core.errors import DomainError
from app.core.geometry import as_alpha, boundary_samples
from app.core.grid import GridFunction3D, tree_reduce
from app.core.grushin import Domain, power_nonlinearity, solve_ground_state
from app.core.grushin.domain import BoundaryFace
from app.core.shapes import ImplicitShape
from app.schemas.common import AlphaParam, QuadratureConfig
from app.schemas.pohozaev import (
    ExponentRegime,
    PohozaevReport,
    PohozaevTrend,
    StarShapedVerdict,
)
from app.schemas.solver import SolverConfig

logger = logging.getLogger(__name__)

AlphaLike = Union[float, AlphaParam]

STAR_SHAPED_TOLERANCE = 1e-10
CRITICAL_POWER = 5


def pohozaev_coefficient(p: float, alpha: AlphaLike) -> float:
    """(3a+3)/(p+1) - (a+1)/2, written (a+1)(3/(p+1) - 1/2) so that p = 5 gives exactly 0."""
    alpha = as_alpha(alpha)
    if not p >= 1:
        raise DomainError(f"p must be at least 1, got {p}")
    if float(p).is_integer():
        inner = float(Fraction(3, int(p) + 1) - Fraction(1, 2))
    else:
        inner = 3.0 / (p + 1.0) - 0.5
    return (alpha.alpha + 1.0) * inner


def nonexistence_classify(p: float) -> ExponentRegime:
    if not p >= 1:
        raise DomainError(f"p must be at least 1, got {p}")
    if p < CRITICAL_POWER:
        return ExponentRegime.subcritical
    if p == CRITICAL_POWER:
        return ExponentRegime.critical
    return ExponentRegime.supercritical


def regime_note(regime: ExponentRegime) -> str:
    if regime == ExponentRegime.supercritical:
        return "negative coefficient: no nontrivial solution on star-shaped domains"
    if regime == ExponentRegime.critical:
        return "zero coefficient: a solution must have vanishing boundary flux"
    return "positive coefficient: the identity does not obstruct existence"


def _star_values(points: np.ndarray, normals: np.ndarray, alpha: AlphaParam) -> np.ndarray:
    return (
        points[:, 0] * normals[:, 0]
        + points[:, 1] * normals[:, 1]
        + (1.0 + alpha.alpha) * points[:, 2] * normals[:, 2]
    )


def _face_samples(domain: Domain, face: BoundaryFace, resolution: int):
    axis, side = face.axis, face.side
    lo, hi = np.array(domain.lo), np.array(domain.hi)
    others = [d for d in range(3) if d != axis]
    grids = [lo[d] + (np.arange(resolution) + 0.5) * (hi[d] - lo[d]) / resolution for d in others]
    A, B = np.meshgrid(*grids, indexing="ij")
    points = np.zeros((A.size, 3))
    points[:, others[0]] = A.ravel()
    points[:, others[1]] = B.ravel()
    points[:, axis] = hi[axis] if side > 0 else lo[axis]
    normals = np.tile(np.array(face.normal), (A.size, 1))
    return points, normals


def star_shaped_check(
    region: Union[Domain, ImplicitShape],
    alpha: AlphaLike,
    cfg: Optional[QuadratureConfig] = None,
) -> StarShapedVerdict:
    """min of x1 n1 + x2 n2 + (1 + a) y n3 over boundary samples; star-shaped iff >= -1e-10."""
    alpha = as_alpha(alpha)
    cfg = cfg or QuadratureConfig()
    if isinstance(region, Domain):
        if region.mask is not None:
            points, normals = _masked_boundary(region)
            pieces = [(points, normals)]
        else:
            pieces = [_face_samples(region, face, 16) for face in region.boundary_faces()]
    else:
        if not float(np.asarray(region.level(0.0, 0.0, 0.0))) < 0:
            raise DomainError(f"the origin is not inside {region.name}")
        pieces = [(points, normals) for points, normals, _ in boundary_samples(region, cfg)]
    minimum = min(float(np.min(_star_values(pts, nrm, alpha))) for pts, nrm in pieces if len(pts))
    return StarShapedVerdict(verdict=minimum >= -STAR_SHAPED_TOLERANCE, min_value=minimum)


def _masked_boundary(domain: Domain):
    indices, normals = domain.boundary_cells()
    h = domain.spacing
    centers = np.array(domain.lo) + (indices + 1) * h
    return centers + 0.5 * normals * h, normals


def pohozaev_lhs(u: GridFunction3D, p: float, alpha: AlphaLike) -> float:
    """coefficient * int |x|^{2a} |u|^{p+1}."""
    alpha = as_alpha(alpha)
    coefficient = pohozaev_coefficient(p, alpha)
    if coefficient == 0:
        return 0.0
    integral = float(np.sum(u.weight(alpha.alpha) * np.abs(u.values) ** (p + 1))) * u.cell_volume
    return coefficient * integral


def _face_flux(u: np.ndarray, domain: Domain, face: BoundaryFace, alpha: AlphaParam) -> float:
    """int over one face of g (n1^2 + n2^2 + |x|^{2a} n3^2) (du/dn)^2, without the 1/2."""
    axis, side = face.axis, face.side
    h = domain.spacing
    # the two unknowns nearest the face, the boundary value itself being zero
    if side > 0:
        near, far = np.take(u, -1, axis=axis), np.take(u, -2, axis=axis)
        position = domain.hi[axis]
    else:
        near, far = np.take(u, 0, axis=axis), np.take(u, 1, axis=axis)
        position = domain.lo[axis]
    du_dn = (far - 4.0 * near) / (2.0 * h[axis])
    x1, x2, y = (np.squeeze(c) for c in domain.mesh())
    if axis == 2:
        X1, X2 = np.meshgrid(x1, x2, indexing="ij")
        g = (1.0 + alpha.alpha) * position * side
        factor = np.hypot(X1, X2) ** (2.0 * alpha.alpha)
    else:
        g = position * side
        factor = 1.0
    others = [d for d in range(3) if d != axis]
    return float(np.sum(g * factor * du_dn ** 2)) * h[others[0]] * h[others[1]]


def pohozaev_rhs(
    u: GridFunction3D,
    domain: Domain,
    alpha: AlphaLike,
    threads: int = 1,
    printed: bool = False,
) -> float:
    """
    Boundary integral with du/dn from the one-sided second-order difference
    (3 u_b - 4 u_1 + u_2) / (2h), u_b = 0. The factor 1/2 is dropped when
    `printed` is set.
    """
    alpha = as_alpha(alpha)
    faces = domain.boundary_faces()
    values = np.asarray(u.values)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda face: _face_flux(values, domain, face, alpha), faces))
    else:
        parts = [_face_flux(values, domain, face, alpha) for face in faces]
    total = tree_reduce(parts)
    return total if printed else 0.5 * total


def pohozaev_residual(
    u: GridFunction3D,
    p: float,
    domain: Domain,
    alpha: AlphaLike,
    cfg: Optional[QuadratureConfig] = None,
) -> PohozaevReport:
    alpha = as_alpha(alpha)
    cfg = cfg or QuadratureConfig()
    lhs = pohozaev_lhs(u, p, alpha)
    rhs = pohozaev_rhs(u, domain, alpha, cfg.threads)
    rhs_printed = pohozaev_rhs(u, domain, alpha, cfg.threads, printed=True)
    scale = max(abs(lhs), abs(rhs), POHOZAEV_EPSILON)
    trivial = not np.any(u.values != 0)
    report = PohozaevReport(
        p=p,
        alpha=alpha.alpha,
        coefficient=pohozaev_coefficient(p, alpha),
        lhs=lhs,
        rhs=rhs,
        rhs_printed=rhs_printed,
        residual=abs(lhs - rhs) / scale,
        trivial=trivial,
        regime=nonexistence_classify(p),
        star_shaped=star_shaped_check(domain, alpha, cfg),
    )
    logger.debug("pohozaev p=%g: lhs=%.10g rhs=%.10g residual=%.3e", p, lhs, rhs, report.residual)
    return report


def pohozaev_trend(
    p: float,
    alpha: AlphaLike,
    resolutions: Sequence[int] = (16, 32),
    half_width: float = 1.0,
    solver: Optional[SolverConfig] = None,
) -> PohozaevTrend:
    """Identity residual of the ground state for f = |x|^{2a}|u|^{p-1}u at several resolutions."""
    alpha = as_alpha(alpha)
    nl = power_nonlinearity(p + 1.0, alpha.alpha)
    residuals = []
    for n in resolutions:
        domain = Domain.cube(half_width, n)
        solution = solve_ground_state(domain, nl, alpha, solver)
        residuals.append(pohozaev_residual(solution.u, p, domain, alpha).residual)
    logger.info("=== pohozaev trend p=%g: %s ===", p, residuals)
    decreasing = all(b <= a for a, b in zip(residuals, residuals[1:]))
    return PohozaevTrend(resolutions=list(resolutions), residuals=residuals, decreasing=decreasing)
