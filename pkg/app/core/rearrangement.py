# app/core/rearrangement.py
"""
Weighted decreasing rearrangement of nonnegative grid functions.

u* lives on the first sector and depends only on the gauge
r = (|x|^{2a+2} + (a+1)^2 y^2)^{1/2}; its superlevel sets {r < R(t)} carry
the same weighted measure as the superlevel sets of u.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, TextIO, Union

import numpy as np

from app.core.config import DEFAULT_LEVEL_COUNT
from app.core.errors import DomainError
from app.core.geometry import as_alpha, sector_indices
from app.core.grid import GridFunction3D, map_slabs
from app.core.shapes import wedge_bounds
from app.schemas.common import AlphaParam
from app.schemas.rearrangement import (
    CoareaComparison,
    EquimeasurabilityReport,
    PolyaSzegoReport,
)

logger = logging.getLogger(__name__)

AlphaLike = Union[float, AlphaParam]
Levels = Union[int, Sequence[float], np.ndarray]

# Gauss-Legendre nodes per profile segment; exact for the polynomial
# integrands of piecewise-linear profiles up to degree 11.
GAUSS_POINTS = 6


@dataclass(frozen=True)
class DistributionFunction:
    levels: np.ndarray
    measures: np.ndarray  # |{u > t_k}|_{2,a}


@dataclass(frozen=True)
class RadialProfile:
    """
    A nonincreasing profile phi(r) through the points (radii[i], values[i]),
    linear in between, right-continuous where radii repeat, and zero beyond
    the last radius.
    """
    radii: np.ndarray
    values: np.ndarray
    alpha: AlphaParam

    def __post_init__(self):
        radii = np.asarray(self.radii, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if radii.shape != values.shape or radii.ndim != 1 or len(radii) == 0:
            raise DomainError("profile radii and values must be matching 1-d arrays")
        if np.any(np.diff(radii) < 0) or np.any(np.diff(values) > 0):
            raise DomainError("profile must have ascending radii and nonincreasing values")
        if radii[0] < 0 or values[-1] < 0:
            raise DomainError("profile radii and values must be nonnegative")
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "values", values)

    @classmethod
    def zero(cls, alpha: AlphaParam) -> "RadialProfile":
        return cls(np.zeros(1), np.zeros(1), alpha)

    @classmethod
    def from_function(
        cls,
        g: Callable[[np.ndarray], np.ndarray],
        support: float,
        alpha: AlphaLike,
        points: int = 4096,
    ) -> "RadialProfile":
        """Piecewise-linear interpolant of a nonincreasing g on [0, support]."""
        radii = np.linspace(0.0, support, points + 1)
        values = np.minimum.accumulate(np.asarray(g(radii), dtype=float))
        values[-1] = max(values[-1], 0.0)
        return cls(radii, values, as_alpha(alpha))

    @property
    def max_value(self) -> float:
        return float(self.values[0])

    @property
    def support_radius(self) -> float:
        return float(self.radii[-1])

    @property
    def jumps(self) -> int:
        """Vertical segments, i.e. plateaus of the source function."""
        return int(np.sum((np.diff(self.radii) == 0) & (np.diff(self.values) != 0)))

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        radii, values = self.radii, self.values
        idx = np.searchsorted(radii, r, side="right")
        inner = np.clip(idx - 1, 0, len(radii) - 1)
        outer = np.clip(idx, 0, len(radii) - 1)
        r0, r1 = radii[inner], radii[outer]
        v0, v1 = values[inner], values[outer]
        span = r1 - r0
        frac = np.where(span > 0, (r - r0) / np.where(span > 0, span, 1.0), 0.0)
        out = v0 + frac * (v1 - v0)
        out = np.where(idx >= len(radii), 0.0, out)
        return np.where(r < radii[0], values[0], out)

    def superlevel_radius(self, t: float) -> float:
        """sup{r : phi(r) > t}."""
        above = np.nonzero(self.values > t)[0]
        if len(above) == 0:
            return 0.0
        i = above[-1]
        if i == len(self.radii) - 1:
            return float(self.radii[i])
        r0, r1 = self.radii[i], self.radii[i + 1]
        v0, v1 = self.values[i], self.values[i + 1]
        if r1 == r0:
            return float(r0)
        return float(r0 + (v0 - t) / (v0 - v1) * (r1 - r0))

    def superlevel_measure(self, t: float) -> float:
        return sector_ball_measure(self.superlevel_radius(t), self.alpha)

    def write_csv(self, stream: TextIO) -> None:
        stream.write("r,phi\n")
        for r, v in zip(self.radii, self.values):
            stream.write(f"{r:.17g},{v:.17g}\n")


def gauge(x1, x2, y, alpha: AlphaParam) -> np.ndarray:
    """r = (|x|^{2a+2} + (a+1)^2 y^2)^{1/2}."""
    a1 = alpha.alpha + 1.0
    return np.sqrt((x1 * x1 + x2 * x2) ** a1 + (a1 * y) ** 2)


def sector_ball_measure(R: float, alpha: AlphaParam) -> float:
    """|{r < R} within one sector|_{2,a} = 2 pi R^3 / (3 n (a+1)^2)."""
    return 2 * math.pi * R ** 3 / (3 * alpha.sector_count * (alpha.alpha + 1.0) ** 2)


def radius_from_measure(m: float, alpha: AlphaLike) -> float:
    """Inverse of sector_ball_measure."""
    alpha = as_alpha(alpha)
    if m < 0:
        raise DomainError(f"measure must be nonnegative, got {m}")
    return (3 * alpha.sector_count * (alpha.alpha + 1.0) ** 2 * m / (2 * math.pi)) ** (1.0 / 3.0)


# ---------------------------------------------------------------------------
# Distribution functions
# ---------------------------------------------------------------------------

def _require_nonnegative(u: GridFunction3D) -> None:
    if np.any(u.values < 0):
        raise DomainError("rearrangement needs a nonnegative function")


def _level_grid(u: GridFunction3D, levels: Levels) -> np.ndarray:
    if isinstance(levels, (int, np.integer)):
        if levels < 1:
            raise DomainError("level count must be positive")
        return np.linspace(0.0, float(np.max(u.values)), int(levels) + 1)
    levels = np.asarray(levels, dtype=float)
    if levels.ndim != 1 or np.any(np.diff(levels) <= 0):
        raise DomainError("levels must be strictly increasing")
    return levels


def _spread(u: GridFunction3D) -> np.ndarray:
    """sum_i h_i |d_i u|: the range of a linearized u across one cell."""
    h = u.spacing
    spread = np.zeros(u.dims)
    for d in range(3):
        if u.dims[d] > 1:
            spread += h[d] * np.abs(np.gradient(u.values, h[d], axis=d))
    return spread


def superlevel_measures(
    u: GridFunction3D,
    alpha: AlphaParam,
    levels: np.ndarray,
    sharp: bool = False,
    threads: int = 1,
) -> np.ndarray:
    """
    |{u > t}|_{2,a} for each level. By default a cell contributes the share
    of a linearized u above t; `sharp` counts whole cells with u > t.
    Cells where u vanishes never count.
    """
    weight = np.broadcast_to(u.weight(alpha.alpha) * u.cell_volume, u.dims)
    values = u.values
    spread = None if sharp else _spread(u)
    support = (values > 0) & u.active

    def partial(t: float) -> Callable[[int, int], float]:
        def slab(k0: int, k1: int) -> float:
            v = values[:, :, k0:k1]
            w = weight[:, :, k0:k1]
            s = support[:, :, k0:k1]
            if sharp:
                share = (v > t).astype(float)
            else:
                sp = spread[:, :, k0:k1]
                flat = sp == 0
                ramp = np.clip(0.5 + (v - t) / np.where(flat, 1.0, sp), 0.0, 1.0)
                share = np.where(flat, (v > t).astype(float), ramp)
            return float(np.sum(np.where(s, share * w, 0.0)))
        return slab

    return np.array([map_slabs(partial(float(t)), u.dims[2], threads) for t in levels])


def distribution_function(
    u: GridFunction3D,
    alpha: AlphaLike,
    levels: Levels = DEFAULT_LEVEL_COUNT,
    sharp: bool = False,
    threads: int = 1,
) -> DistributionFunction:
    """lambda(t_k) = |{u > t_k}|_{2,a}; nonincreasing, zero at max u."""
    alpha = as_alpha(alpha)
    _require_nonnegative(u)
    grid = _level_grid(u, levels)
    measures = superlevel_measures(u, alpha, grid, sharp, threads)
    top = float(np.max(u.values))
    measures = np.where(grid >= top, 0.0, measures)
    measures = np.minimum.accumulate(measures)
    return DistributionFunction(levels=grid, measures=measures)


# ---------------------------------------------------------------------------
# Rearrangement
# ---------------------------------------------------------------------------

def rearrange(u: GridFunction3D, alpha: AlphaLike, levels: Levels = DEFAULT_LEVEL_COUNT, threads: int = 1) -> RadialProfile:
    """
    The profile phi with |{phi(r) > t}| = |{u > t}| at every level: it
    passes through (R(t_k), t_k) with R the sector-ball radius of the
    superlevel measure, and phi(0) = max u.
    """
    alpha = as_alpha(alpha)
    _require_nonnegative(u)
    top = float(np.max(u.values))
    if top == 0:
        return RadialProfile.zero(alpha)
    grid = _level_grid(u, levels)
    if grid[-1] != top:
        grid = np.append(grid[grid < top], top)
    dist = distribution_function(u, alpha, grid, threads=threads)
    radii = np.array([radius_from_measure(m, alpha) for m in dist.measures])
    profile = RadialProfile(radii[::-1], dist.levels[::-1], alpha)
    logger.debug(
        "rearranged %d levels, max %.6g, support radius %.6g, %d jumps",
        len(grid), top, profile.support_radius, profile.jumps,
    )
    return profile


def sample_profile(profile: RadialProfile, resolution: int = 64, pad: float = 0.05) -> GridFunction3D:
    """u* on a grid over the first sector; cells outside the sector are masked."""
    alpha = profile.alpha
    R = max(profile.support_radius, 1e-12) * (1.0 + pad)
    a1 = alpha.alpha + 1.0
    (x_lo, x_hi), (y_lo, y_hi) = wedge_bounds(R ** (1.0 / a1), 0.0, alpha.sector_width)
    lo = (x_lo, y_lo, -R / a1)
    hi = (x_hi, y_hi, R / a1)
    dims = (resolution, resolution, resolution)
    probe = GridFunction3D(lo, hi, np.zeros(dims))
    x1, x2, y = probe.mesh()
    x1, x2, y = np.broadcast_arrays(x1, x2, y)
    mask = sector_indices(x1, x2, alpha) == 1
    values = np.where(mask, profile(gauge(x1, x2, y, alpha)), 0.0)
    return GridFunction3D(lo, hi, values, mask)


def equimeasurability_gap(
    u: GridFunction3D,
    profile: RadialProfile,
    alpha: AlphaLike,
    levels: Levels = 32,
    resolution: int = 64,
) -> EquimeasurabilityReport:
    """
    Compares |{u > t}| with the superlevel measures of u* sampled on an
    independent sector grid.
    """
    alpha = as_alpha(alpha)
    grid = _level_grid(u, levels)
    source = distribution_function(u, alpha, grid).measures
    sampled = sample_profile(profile, resolution)
    rearranged = superlevel_measures(sampled, alpha, grid, sharp=True)
    rearranged = np.where(grid >= profile.max_value, 0.0, rearranged)
    support = float(source[0]) if len(source) else 0.0
    sup_gap = float(np.max(np.abs(source - rearranged))) if len(grid) else 0.0
    return EquimeasurabilityReport(
        levels=grid.tolist(),
        source_measures=source.tolist(),
        rearranged_measures=rearranged.tolist(),
        sup_gap=sup_gap,
        support_measure=support,
        relative_gap=sup_gap / support if support > 0 else 0.0,
    )


# ---------------------------------------------------------------------------
# Norms and energies
# ---------------------------------------------------------------------------

def _radial_integral(profile: RadialProfile, integrand: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> float:
    """sum over segments of the Gauss-Legendre integral of integrand(r, phi(r))."""
    r0, r1 = profile.radii[:-1], profile.radii[1:]
    v0, v1 = profile.values[:-1], profile.values[1:]
    keep = r1 > r0
    if not np.any(keep):
        return 0.0
    r0, r1, v0, v1 = r0[keep], r1[keep], v0[keep], v1[keep]
    nodes, weights = np.polynomial.legendre.leggauss(GAUSS_POINTS)
    s = 0.5 * (nodes[None, :] + 1.0)
    r = r0[:, None] + s * (r1 - r0)[:, None]
    phi = v0[:, None] + s * (v1 - v0)[:, None]
    return float(np.sum(0.5 * (r1 - r0)[:, None] * weights[None, :] * integrand(r, phi)))


def weighted_lq_norm(u: Union[GridFunction3D, RadialProfile], q: float, alpha: AlphaLike, threads: int = 1) -> float:
    """The L^q norm against |x|^{2a} dx dy."""
    alpha = as_alpha(alpha)
    if not q >= 1:
        raise DomainError(f"q must be at least 1, got {q}")
    if isinstance(u, RadialProfile):
        factor = 2 * math.pi / (alpha.sector_count * (alpha.alpha + 1.0) ** 2)
        total = factor * _radial_integral(u, lambda r, phi: r * r * np.abs(phi) ** q)
    else:
        weight = u.weight(alpha.alpha)
        values = u.values
        total = map_slabs(
            lambda k0, k1: float(np.sum(weight[k0:k1] * np.abs(values[k0:k1]) ** q)), u.dims[0], threads
        ) * u.cell_volume
    return total ** (1.0 / q)


def _face_energy_rows(padded: np.ndarray, inv_h2: np.ndarray, weight: np.ndarray, k0: int, k1: int) -> float:
    # faces k0..k1-1 across x1, plus the outer face when the slab ends the grid
    stop = k1 + 2 if k1 + 2 == padded.shape[0] else k1 + 1
    rows = padded[k0 + 1:k1 + 1]
    d1 = np.diff(padded[k0:stop, 1:-1, 1:-1], axis=0)
    d2 = np.diff(rows[:, :, 1:-1], axis=1)
    d3 = np.diff(rows[:, 1:-1, :], axis=2)
    return float(
        inv_h2[0] * np.sum(d1 * d1)
        + inv_h2[1] * np.sum(d2 * d2)
        + inv_h2[2] * np.sum(weight[k0:k1] * d3 * d3)
    )


def grushin_energy(u: Union[GridFunction3D, RadialProfile], alpha: AlphaLike, threads: int = 1) -> float:
    """
    Integral of |grad_G u|^2 = u_x1^2 + u_x2^2 + |x|^{2a} u_y^2. Grids sum
    squared face differences with zero beyond the box, which is <A u, u> h^3
    for the 7-point operator; profiles the exact integral of their linear
    pieces, (2 pi / n) int r^2 phi'^2 dr, with jumps left out.
    """
    alpha = as_alpha(alpha)
    if isinstance(u, RadialProfile):
        dr = np.diff(u.radii)
        dv = np.diff(u.values)
        keep = dr > 0
        slope = dv[keep] / dr[keep]
        cubes = u.radii[1:][keep] ** 3 - u.radii[:-1][keep] ** 3
        return float(2 * math.pi / alpha.sector_count * np.sum(slope ** 2 * cubes / 3.0))
    h = u.spacing
    padded = np.pad(u.values, 1)
    weight = u.weight(alpha.alpha)
    total = map_slabs(lambda k0, k1: _face_energy_rows(padded, 1.0 / (h * h), weight, k0, k1), u.dims[0], threads)
    return total * u.cell_volume


def polya_szego_gap(u: GridFunction3D, alpha: AlphaLike, levels: Levels = DEFAULT_LEVEL_COUNT) -> float:
    """energy(u) - energy(u*)."""
    return polya_szego_report(u, alpha, levels).gap


def polya_szego_report(u: GridFunction3D, alpha: AlphaLike, levels: Levels = DEFAULT_LEVEL_COUNT) -> PolyaSzegoReport:
    alpha = as_alpha(alpha)
    profile = rearrange(u, alpha, levels)
    energy = grushin_energy(u, alpha)
    rearranged = grushin_energy(profile, alpha)
    return PolyaSzegoReport(
        energy=energy,
        rearranged_energy=rearranged,
        gap=energy - rearranged,
        ratio=rearranged / energy if energy > 0 else 0.0,
        jumps=profile.jumps,
    )


# ---------------------------------------------------------------------------
# Coarea derivative
# ---------------------------------------------------------------------------

def coarea_derivative_compare(
    u: GridFunction3D,
    alpha: AlphaLike,
    t: float,
    delta: Optional[float] = None,
    levels: Levels = DEFAULT_LEVEL_COUNT,
) -> CoareaComparison:
    """
    -d/dt |{u > t}| for u and for u*, by central differences in t. Both
    equal the coarea integral of |x|^{2a}/|grad u| over {u = t}.
    """
    alpha = as_alpha(alpha)
    _require_nonnegative(u)
    top = float(np.max(u.values))
    if not 0 < t < top:
        raise DomainError(f"level {t} must lie strictly between 0 and max u = {top}")
    if delta is None:
        delta = 0.02 * top
    delta = min(delta, t, top - t) * 0.999

    lam = distribution_function(u, alpha, np.array([t - delta, t + delta])).measures
    lhs = -(lam[1] - lam[0]) / (2 * delta)
    profile = rearrange(u, alpha, levels)
    rhs = -(profile.superlevel_measure(t + delta) - profile.superlevel_measure(t - delta)) / (2 * delta)

    flat = (_spread(u) == 0) & (np.abs(u.values - t) <= delta) & (u.values > 0)
    plateau = bool(np.any(flat))
    scale = max(abs(lhs), abs(rhs))
    return CoareaComparison(
        t=t,
        delta=delta,
        lhs=float(lhs),
        rhs=float(rhs),
        relative_gap=abs(lhs - rhs) / scale if scale > 0 else 0.0,
        plateau=plateau,
    )
