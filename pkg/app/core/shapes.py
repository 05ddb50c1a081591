# app/core/shapes.py
"""
Implicit shapes with analytic boundary patches, and the built-in corpus.

A shape is the open set {level < 0}. Level functions and patch maps act on
numpy arrays elementwise, so a whole sample grid is evaluated in one call.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from app.core.errors import DomainError
from app.schemas.common import AlphaParam
from app.schemas.geometry import ReferenceValues, ShapeSpec

logger = logging.getLogger(__name__)

Vector3 = Tuple[float, float, float]
LevelFn = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
# (s, t) -> array of shape s.shape + (3,)
PatchMap = Callable[[np.ndarray, np.ndarray], np.ndarray]

# Step for finite-difference tangents of parametrized patches.
TANGENT_STEP = 1e-6
NORMAL_TOLERANCE = 1e-12


@dataclass(frozen=True)
class SurfacePatch:
    """
    A parametrized piece of the boundary over the rectangle
    (s0, s1) x (t0, t1), sampled by the midpoint rule.
    """
    param: PatchMap
    normal: PatchMap
    area_element: Callable[[np.ndarray, np.ndarray], np.ndarray]
    domain: Tuple[float, float, float, float]
    name: str = "patch"

    def sample(self, resolution: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Points, unit normals and quadrature weights at the midpoint nodes."""
        s0, s1, t0, t1 = self.domain
        ds = (s1 - s0) / resolution
        dt = (t1 - t0) / resolution
        s = s0 + (np.arange(resolution) + 0.5) * ds
        t = t0 + (np.arange(resolution) + 0.5) * dt
        S, T = np.meshgrid(s, t, indexing="ij")
        points = self.param(S, T).reshape(-1, 3)
        normals = self.normal(S, T).reshape(-1, 3)
        weights = (self.area_element(S, T) * ds * dt).reshape(-1)
        return points, normals, weights

    def validate(self, samples: int = 5) -> None:
        _, normals, _ = self.sample(samples)
        deviation = np.max(np.abs(np.linalg.norm(normals, axis=1) - 1.0))
        if deviation > NORMAL_TOLERANCE:
            raise DomainError(f"patch {self.name}: normals deviate from unit length by {deviation:.2e}")


@dataclass(frozen=True)
class ImplicitShape:
    """
    A bounded open set E = {level < 0} inside the box [lo, hi].

    `sector` marks shapes contained in the closure of one sector; those are
    scored with their relative perimeter.
    """
    level: LevelFn
    lo: Vector3
    hi: Vector3
    patches: Tuple[SurfacePatch, ...] = field(default=())
    name: str = "shape"
    sector: Optional[int] = None

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != 3 or len(hi) != 3:
            raise DomainError("bounding box needs three coordinates per corner")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "patches", tuple(self.patches))
        for patch in self.patches:
            patch.validate()

    @property
    def degenerate(self) -> bool:
        return any(b <= a for a, b in zip(self.lo, self.hi))

    def contains(self, x1, x2, y) -> np.ndarray:
        return np.asarray(self.level(np.asarray(x1), np.asarray(x2), np.asarray(y))) < 0


def lipschitz_estimate(shape: ImplicitShape, samples: int = 12) -> float:
    """Largest finite-difference gradient norm of the level function over bbox."""
    lo, hi = np.array(shape.lo), np.array(shape.hi)
    axes = [np.linspace(lo[d], hi[d], samples) for d in range(3)]
    X1, X2, Y = np.meshgrid(*axes, indexing="ij")
    h = 1e-6 * max(1.0, float(np.max(hi - lo)))
    grads = []
    for d in range(3):
        plus = [c + (h if i == d else 0.0) for i, c in enumerate((X1, X2, Y))]
        minus = [c - (h if i == d else 0.0) for i, c in enumerate((X1, X2, Y))]
        grads.append((shape.level(*plus) - shape.level(*minus)) / (2 * h))
    return float(np.max(np.sqrt(sum(g ** 2 for g in grads))))


# ---------------------------------------------------------------------------
# Patch construction
# ---------------------------------------------------------------------------

def patch_from_param(
    param: PatchMap,
    domain: Tuple[float, float, float, float],
    level: LevelFn,
    name: str = "patch",
) -> SurfacePatch:
    """
    Builds a patch from a parametrization alone. Tangents come from central
    differences; each normal is oriented so the level function increases
    along it.
    """
    h = TANGENT_STEP

    def frame(s, t):
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        ts = (param(s + h, t) - param(s - h, t)) / (2 * h)
        tt = (param(s, t + h) - param(s, t - h)) / (2 * h)
        cross = np.cross(ts, tt)
        jac = np.linalg.norm(cross, axis=-1)
        n = cross / np.where(jac > 0, jac, 1.0)[..., None]
        p = param(s, t)
        scale = h * np.maximum(1.0, np.linalg.norm(p, axis=-1))[..., None]
        ahead = p + scale * n
        behind = p - scale * n
        rising = level(ahead[..., 0], ahead[..., 1], ahead[..., 2]) >= level(
            behind[..., 0], behind[..., 1], behind[..., 2]
        )
        n = np.where(rising[..., None], n, -n)
        n = n / np.linalg.norm(n, axis=-1)[..., None]
        return n, jac

    return SurfacePatch(
        param=param,
        normal=lambda s, t: frame(s, t)[0],
        area_element=lambda s, t: frame(s, t)[1],
        domain=domain,
        name=name,
    )


def _stack(x1, x2, y) -> np.ndarray:
    x1, x2, y = np.broadcast_arrays(x1, x2, y)
    return np.stack([x1, x2, y], axis=-1)


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v, axis=-1)[..., None]


# ---------------------------------------------------------------------------
# Built-in shapes
# ---------------------------------------------------------------------------

def empty_shape() -> ImplicitShape:
    return ImplicitShape(
        level=lambda x1, x2, y: np.ones(np.broadcast(x1, x2, y).shape),
        lo=(-1.0, -1.0, -1.0),
        hi=(1.0, 1.0, 1.0),
        name="empty",
    )


def cylinder(radius: float = 1.0, halfheight: float = 1.0, center: Sequence[float] = (0, 0, 0)) -> ImplicitShape:
    """{|x - c| < radius, |y - c3| < halfheight}, with lateral and cap patches."""
    c1, c2, c3 = (float(v) for v in center)
    R, H = float(radius), float(halfheight)

    def level(x1, x2, y):
        return np.maximum(np.hypot(x1 - c1, x2 - c2) - R, np.abs(y - c3) - H)

    lateral = SurfacePatch(
        param=lambda th, yy: _stack(c1 + R * np.cos(th), c2 + R * np.sin(th), c3 + yy),
        normal=lambda th, yy: _stack(np.cos(th), np.sin(th), np.zeros_like(yy)),
        area_element=lambda th, yy: np.full(np.broadcast(th, yy).shape, R),
        domain=(0.0, 2 * math.pi, -H, H),
        name="lateral",
    )

    def cap(sign: float) -> SurfacePatch:
        return SurfacePatch(
            param=lambda rho, th: _stack(c1 + rho * np.cos(th), c2 + rho * np.sin(th), np.full_like(rho, c3 + sign * H)),
            normal=lambda rho, th: _stack(np.zeros_like(rho), np.zeros_like(rho), np.full_like(rho, sign)),
            area_element=lambda rho, th: rho + 0.0 * th,
            domain=(0.0, R, 0.0, 2 * math.pi),
            name="top" if sign > 0 else "bottom",
        )

    return ImplicitShape(
        level=level,
        lo=(c1 - R, c2 - R, c3 - H),
        hi=(c1 + R, c2 + R, c3 + H),
        patches=(lateral, cap(1.0), cap(-1.0)),
        name="cylinder",
    )


def box(half_widths: Sequence[float] = (1, 1, 1), center: Sequence[float] = (0, 0, 0)) -> ImplicitShape:
    c = np.array(center, dtype=float)
    a = np.array(half_widths, dtype=float)

    def level(x1, x2, y):
        return np.maximum(np.maximum(np.abs(x1 - c[0]) - a[0], np.abs(x2 - c[1]) - a[1]), np.abs(y - c[2]) - a[2])

    patches: List[SurfacePatch] = []
    for axis in range(3):
        u_axis, v_axis = [d for d in range(3) if d != axis]
        for sign in (1.0, -1.0):
            def param(s, t, axis=axis, u_axis=u_axis, v_axis=v_axis, sign=sign):
                coords = [None, None, None]
                coords[axis] = np.full_like(s, c[axis] + sign * a[axis])
                coords[u_axis] = c[u_axis] + s
                coords[v_axis] = c[v_axis] + t
                return _stack(*coords)

            def normal(s, t, axis=axis, sign=sign):
                n = np.zeros(np.broadcast(s, t).shape + (3,))
                n[..., axis] = sign
                return n

            patches.append(SurfacePatch(
                param=param,
                normal=normal,
                area_element=lambda s, t: np.ones(np.broadcast(s, t).shape),
                domain=(-a[u_axis], a[u_axis], -a[v_axis], a[v_axis]),
                name=f"face{axis}{'+' if sign > 0 else '-'}",
            ))

    return ImplicitShape(level=level, lo=tuple(c - a), hi=tuple(c + a), patches=tuple(patches), name="box")


def ellipsoid(semi_axes: Sequence[float] = (1, 1, 1), center: Sequence[float] = (0, 0, 0), name: str = "ellipsoid") -> ImplicitShape:
    a1, a2, a3 = (float(v) for v in semi_axes)
    c = np.array(center, dtype=float)

    def level(x1, x2, y):
        return ((x1 - c[0]) / a1) ** 2 + ((x2 - c[1]) / a2) ** 2 + ((y - c[2]) / a3) ** 2 - 1.0

    def param(phi, th):
        return _stack(
            c[0] + a1 * np.sin(phi) * np.cos(th),
            c[1] + a2 * np.sin(phi) * np.sin(th),
            c[2] + a3 * np.cos(phi),
        )

    def normal(phi, th):
        return _unit(_stack(np.sin(phi) * np.cos(th) / a1, np.sin(phi) * np.sin(th) / a2, np.cos(phi) / a3))

    def area_element(phi, th):
        sp = np.sin(phi)
        return sp * np.sqrt(
            (a2 * a3 * sp * np.cos(th)) ** 2 + (a1 * a3 * sp * np.sin(th)) ** 2 + (a1 * a2 * np.cos(phi)) ** 2
        )

    surface = SurfacePatch(param, normal, area_element, (0.0, math.pi, 0.0, 2 * math.pi), name="surface")
    a = np.array([a1, a2, a3])
    return ImplicitShape(level=level, lo=tuple(c - a), hi=tuple(c + a), patches=(surface,), name=name)


def ball(radius: float = 1.0, center: Sequence[float] = (0, 0, 0)) -> ImplicitShape:
    return ellipsoid((radius, radius, radius), center, name="ball")


def _anisotropic_ball_level(alpha: float, radius: float) -> LevelFn:
    def level(x1, x2, y):
        return (x1 * x1 + x2 * x2) ** (alpha + 1.0) / (alpha + 1.0) ** 2 + y * y - radius ** 2
    return level


def _gauge_radius(alpha: float, radius: float) -> float:
    """Largest |x| reached by the anisotropic ball of the given radius."""
    return ((alpha + 1.0) * radius) ** (1.0 / (alpha + 1.0))


def _curved_param(alpha: float, radius: float, theta0: float) -> PatchMap:
    # Pulls back the round sphere of the flattened picture: polar angle phi,
    # flattened azimuth psi = (alpha + 1)(theta - theta0).
    def param(psi, phi):
        r = ((alpha + 1.0) * radius * np.sin(phi)) ** (1.0 / (alpha + 1.0))
        th = theta0 + psi / (alpha + 1.0)
        return _stack(r * np.cos(th), r * np.sin(th), radius * np.cos(phi))
    return param


def _wall_param(alpha: float, radius: float, theta: float) -> PatchMap:
    def param(u, y):
        extent = ((alpha + 1.0) * np.sqrt(np.maximum(radius ** 2 - y * y, 0.0))) ** (1.0 / (alpha + 1.0))
        r = u * extent
        return _stack(r * math.cos(theta), r * math.sin(theta), y)
    return param


def wedge_bounds(r_max: float, a: float, b: float) -> Tuple[Tuple[float, float], Tuple[float, float]]:
    angles = [a, b] + [k * math.pi / 2 for k in range(-4, 9) if a < k * math.pi / 2 < b]
    xs = [0.0] + [r_max * math.cos(t) for t in angles]
    ys = [0.0] + [r_max * math.sin(t) for t in angles]
    return (min(xs), max(xs)), (min(ys), max(ys))


def reference_ball(alpha: AlphaParam, j: int, radius: float = 1.0) -> Tuple[ImplicitShape, ReferenceValues]:
    """
    The reference ball sector {|x|^{2a+2}/(a+1)^2 + y^2 < R^2} cut to the open
    sector j, with its closed-form volume and relative perimeter.
    """
    n = alpha.sector_count
    if not 1 <= j <= alpha.sector_total:
        raise DomainError(f"sector index {j} outside 1..{alpha.sector_total}")
    a_val = alpha.alpha
    w = alpha.sector_width
    theta_a, theta_b = (j - 1) * w, j * w
    ball_level = _anisotropic_ball_level(a_val, radius)
    sa, ca, sb, cb = math.sin(theta_a), math.cos(theta_a), math.sin(theta_b), math.cos(theta_b)

    def level(x1, x2, y):
        return np.maximum(np.maximum(ball_level(x1, x2, y), sa * x1 - ca * x2), cb * x2 - sb * x1)

    curved = patch_from_param(
        _curved_param(a_val, radius, theta_a),
        (0.0, (a_val + 1.0) * w, 0.0, math.pi),
        level,
        name="curved",
    )
    walls = [
        patch_from_param(_wall_param(a_val, radius, theta), (0.0, 1.0, -radius, radius), level, name=f"wall{k}")
        for k, theta in enumerate((theta_a, theta_b))
    ]

    r_max = _gauge_radius(a_val, radius)
    (x_lo, x_hi), (y_lo, y_hi) = wedge_bounds(r_max, theta_a, theta_b)
    shape = ImplicitShape(
        level=level,
        lo=(x_lo, y_lo, -radius),
        hi=(x_hi, y_hi, radius),
        patches=(curved, *walls),
        name="ball-sector",
        sector=j,
    )
    values = ReferenceValues(
        volume=2 * math.pi * (a_val + 1.0) * radius ** 3 / (3 * n),
        sector_perimeter=2 * (a_val + 1.0) * math.pi * radius ** 2 / n,
    )
    return shape, values


def anisotropic_ball(alpha: AlphaParam, radius: float = 1.0) -> ImplicitShape:
    """The union of the reference ball over all sectors."""
    a_val = alpha.alpha
    level = _anisotropic_ball_level(a_val, radius)
    surface = patch_from_param(
        _curved_param(a_val, radius, 0.0),
        (0.0, 2 * math.pi * (a_val + 1.0), 0.0, math.pi),
        level,
        name="surface",
    )
    r_max = _gauge_radius(a_val, radius)
    return ImplicitShape(
        level=level,
        lo=(-r_max, -r_max, -radius),
        hi=(r_max, r_max, radius),
        patches=(surface,),
        name="anisotropic-ball",
    )


# ---------------------------------------------------------------------------
# Rigid motions and dilations
# ---------------------------------------------------------------------------

def rotate_shape(shape: ImplicitShape, angle: float) -> ImplicitShape:
    """Rotates a shape about the y-axis by `angle`."""
    c, s = math.cos(angle), math.sin(angle)

    def level(x1, x2, y):
        return shape.level(c * x1 + s * x2, -s * x1 + c * x2, y)

    def rotate(v: np.ndarray) -> np.ndarray:
        return _stack(c * v[..., 0] - s * v[..., 1], s * v[..., 0] + c * v[..., 1], v[..., 2])

    patches = tuple(
        SurfacePatch(
            param=lambda u, v, p=p: rotate(p.param(u, v)),
            normal=lambda u, v, p=p: rotate(p.normal(u, v)),
            area_element=p.area_element,
            domain=p.domain,
            name=p.name,
        )
        for p in shape.patches
    )
    corners = np.array([[x, y] for x in (shape.lo[0], shape.hi[0]) for y in (shape.lo[1], shape.hi[1])])
    rotated = corners @ np.array([[c, s], [-s, c]])
    # The rotated corner box is a loose but valid bound.
    return replace(
        shape,
        level=level,
        lo=(rotated[:, 0].min(), rotated[:, 1].min(), shape.lo[2]),
        hi=(rotated[:, 0].max(), rotated[:, 1].max(), shape.hi[2]),
        patches=patches,
    )


def anisotropic_scale(shape: ImplicitShape, lam: float, alpha: AlphaParam) -> ImplicitShape:
    """
    The dilated shape {(lam x, lam^{a+1} y) : (x, y) in E}. Patch normals are
    pushed forward by the inverse transpose and the area element picks up the
    matching Jacobian factor.
    """
    if not lam > 0:
        raise DomainError(f"scale factor must be positive, got {lam}")
    if lam == 1.0:
        return shape
    a_val = alpha.alpha
    mu = lam ** (a_val + 1.0)
    factors = np.array([lam, lam, mu])
    tilt = lam ** (-a_val)

    def level(x1, x2, y):
        return shape.level(x1 / lam, x2 / lam, y / mu)

    def make(p: SurfacePatch) -> SurfacePatch:
        def normal(u, v):
            n = p.normal(u, v)
            return _unit(_stack(n[..., 0], n[..., 1], n[..., 2] * tilt))

        def area_element(u, v):
            n = p.normal(u, v)
            stretch = np.sqrt(n[..., 0] ** 2 + n[..., 1] ** 2 + (tilt * n[..., 2]) ** 2)
            return p.area_element(u, v) * lam ** (a_val + 2.0) * stretch

        return SurfacePatch(
            param=lambda u, v: p.param(u, v) * factors,
            normal=normal,
            area_element=area_element,
            domain=p.domain,
            name=p.name,
        )

    return replace(
        shape,
        level=level,
        lo=tuple(np.array(shape.lo) * factors),
        hi=tuple(np.array(shape.hi) * factors),
        patches=tuple(make(p) for p in shape.patches),
    )


# ---------------------------------------------------------------------------
# Corpus
# ---------------------------------------------------------------------------

def build_shape(spec: ShapeSpec, alpha: AlphaParam) -> ImplicitShape:
    if spec.name == "ball-sector":
        shape, _ = reference_ball(alpha, spec.sector, spec.radius)
    elif spec.name == "anisotropic-ball":
        shape = anisotropic_ball(alpha, spec.radius)
    elif spec.name == "cylinder":
        shape = cylinder(spec.radius, spec.halfheight, spec.center)
    elif spec.name == "box":
        shape = box(spec.half_widths, spec.center)
    elif spec.name == "ellipsoid":
        shape = ellipsoid(spec.semi_axes, spec.center)
    elif spec.name == "ball":
        shape = ball(spec.radius, spec.center)
    else:
        raise DomainError(f"unknown shape {spec.name!r}")
    return anisotropic_scale(shape, spec.scale, alpha)


def default_corpus() -> List[ShapeSpec]:
    """The shapes swept by the isoperimetric check."""
    return [
        ShapeSpec(name="ball-sector"),
        ShapeSpec(name="ball-sector", scale=0.5),
        ShapeSpec(name="ball-sector", radius=2.0, sector=2),
        ShapeSpec(name="anisotropic-ball"),
        ShapeSpec(name="cylinder"),
        ShapeSpec(name="cylinder", radius=0.5, halfheight=2.0),
        ShapeSpec(name="cylinder", radius=2.0, halfheight=0.25, center=(0.5, 0.0, 0.0)),
        ShapeSpec(name="box"),
        ShapeSpec(name="box", half_widths=(0.5, 1.5, 0.75), center=(1.0, 0.0, 0.0)),
        ShapeSpec(name="ellipsoid", semi_axes=(1.0, 0.6, 1.4)),
        ShapeSpec(name="ellipsoid", semi_axes=(2.0, 1.0, 0.5), center=(0.3, -0.2, 0.1)),
        ShapeSpec(name="ball"),
        ShapeSpec(name="ball", radius=0.5, center=(2.0, 1.0, 0.0)),
        ShapeSpec(name="ball", center=(0.0, 0.0, 3.0), scale=1.5),
    ]
