# app/core/sobolev.py
"""
Sobolev constants for the Grushin gradient: the radial extremal constant,
the lower bound for the best constant at the critical exponent, grid
Rayleigh quotients and their scaling laws.
"""
import logging
import math
from typing import Callable, Dict, List, Optional, Sequence, TextIO, Union

import numpy as np
from scipy import integrate, optimize, special

from app.core.errors import DomainError
from app.core.geometry import as_alpha
from app.core.grid import GridFunction3D
from app.core.rearrangement import gauge, grushin_energy, weighted_lq_norm
from app.schemas.common import AlphaParam
from app.schemas.sobolev import FamilyConfig, RayleighMinimum, RayleighReport, SobolevRow

logger = logging.getLogger(__name__)

AlphaLike = Union[float, AlphaParam]

CRITICAL_EXPONENT = 6
QUAD_RELATIVE_TOLERANCE = 1e-12


def _half_line(f: Callable[[float], float], epsrel: float = QUAD_RELATIVE_TOLERANCE) -> float:
    value, _ = integrate.quad(f, 0.0, np.inf, epsabs=0.0, epsrel=epsrel, limit=500)
    return value


def _check_pm(p: float, m: float) -> None:
    if not 1 < p < m:
        raise DomainError(f"need 1 < p < m, got p={p}, m={m}")


def extremal_quotient(
    a: float = 1.0,
    b: float = 1.0,
    p: float = 2.0,
    m: float = 3.0,
    epsrel: float = QUAD_RELATIVE_TOLERANCE,
) -> float:
    """
    (int r^{m-1} |phi'|^p)^{1/p} / (int r^{m-1} phi^q)^{1/q} for
    phi(r) = (a + b r^{p'})^{1 - m/p}, q = mp/(m - p), by adaptive quadrature.
    """
    _check_pm(p, m)
    if not (a > 0 and b > 0):
        raise DomainError("extremal parameters a, b must be positive")
    pp = p / (p - 1.0)
    q = m * p / (m - p)
    e = 1.0 - m / p

    def phi(r):
        return (a + b * r ** pp) ** e

    def dphi(r):
        return e * (a + b * r ** pp) ** (e - 1.0) * b * pp * r ** (pp - 1.0)

    gradient = _half_line(lambda r: r ** (m - 1.0) * abs(dphi(r)) ** p, epsrel)
    norm = _half_line(lambda r: r ** (m - 1.0) * phi(r) ** q, epsrel)
    return gradient ** (1.0 / p) / norm ** (1.0 / q)


def talenti_radial_constant() -> float:
    """D_{2,6,3} = sqrt(3) (pi/16)^{1/3}, closed form of the (p, m) = (2, 3) quotient."""
    return math.sqrt(3.0) * (math.pi / 16.0) ** (1.0 / 3.0)


def talenti_constant_general(p: float, m: float, epsrel: float = QUAD_RELATIVE_TOLERANCE) -> float:
    """The extremal quotient for general 1 < p < m, computed by quadrature."""
    value = extremal_quotient(1.0, 1.0, p, m, epsrel)
    logger.debug("extremal quotient (p=%g, m=%g) = %.12g", p, m, value)
    return value


def talenti_printed_constant(p: float, m: float) -> float:
    """
    m^{1/p} ((p-1)/(m-1))^{-1/p'} [(1/p') B(m/p, m/p')]^{1/m}. At (2, 3) this
    is sqrt(2) times the quadrature value; reported for comparison only.
    """
    _check_pm(p, m)
    pp = p / (p - 1.0)
    return (
        m ** (1.0 / p)
        * ((p - 1.0) / (m - 1.0)) ** (-1.0 / pp)
        * (special.beta(m / p, m / pp) / pp) ** (1.0 / m)
    )


def sobolev_lower_bound(alpha: AlphaLike) -> float:
    """L = (2 pi / n)^{1/3} (a+1)^{1/3} D_{2,6,3}."""
    alpha = as_alpha(alpha)
    n = alpha.sector_count
    return (2 * math.pi / n) ** (1.0 / 3.0) * (alpha.alpha + 1.0) ** (1.0 / 3.0) * talenti_radial_constant()


def sobolev_printed_bound(alpha: AlphaLike) -> float:
    """The same bound with both exponents negated; reported for comparison only."""
    alpha = as_alpha(alpha)
    n = alpha.sector_count
    return (2 * math.pi / n) ** (-1.0 / 3.0) * (alpha.alpha + 1.0) ** (-1.0 / 3.0) * talenti_radial_constant()


def scaling_exponent(q: float, alpha: AlphaLike) -> float:
    """Exponent of lam in the quotient of u(lam x, lam^{a+1} y): (3a+3)/q - (a+1)/2."""
    alpha = as_alpha(alpha)
    if not q > 0:
        raise DomainError(f"q must be positive, got {q}")
    return (3 * alpha.alpha + 3) / q - (alpha.alpha + 1.0) / 2


def critical_exponent() -> int:
    return CRITICAL_EXPONENT


# ---------------------------------------------------------------------------
# Rayleigh quotients
# ---------------------------------------------------------------------------

def rayleigh_quotient(u: GridFunction3D, q: float, alpha: AlphaLike, threads: int = 1) -> RayleighReport:
    """grushin_energy(u)^{1/2} / ||u||_{L^q_w}, both reduced over x1 slabs."""
    alpha = as_alpha(alpha)
    if not np.any(u.values != 0):
        raise DomainError("Rayleigh quotient of the zero function")
    energy = grushin_energy(u, alpha, threads)
    norm = weighted_lq_norm(u, q, alpha, threads)
    return RayleighReport(
        numerator=energy,
        denominator=norm,
        quotient=math.sqrt(energy) / norm,
        alpha=alpha.alpha,
        q=q,
    )


def radial_rayleigh_quotient(
    phi: Callable[[float], float],
    dphi: Callable[[float], float],
    alpha: AlphaLike,
    q: float,
    epsrel: float = QUAD_RELATIVE_TOLERANCE,
) -> float:
    """
    Quotient of u = phi(r) on one sector through the polar identities
    energy = (2 pi/n) int r^2 phi'^2 and ||u||_q^q = 2 pi/(n (a+1)^2) int r^2 |phi|^q.
    """
    alpha = as_alpha(alpha)
    n = alpha.sector_count
    energy = 2 * math.pi / n * _half_line(lambda r: r * r * dphi(r) ** 2, epsrel)
    mass = 2 * math.pi / (n * (alpha.alpha + 1.0) ** 2) * _half_line(lambda r: r * r * abs(phi(r)) ** q, epsrel)
    return math.sqrt(energy) / mass ** (1.0 / q)


def rayleigh_scaling_check(u: GridFunction3D, q: float, alpha: AlphaLike, lam: float = 2.0) -> Dict[str, float]:
    """Measured exponent of the quotient under u -> u(lam x, lam^{a+1} y)."""
    alpha = as_alpha(alpha)
    base = rayleigh_quotient(u, q, alpha).quotient
    scaled = rayleigh_quotient(u.rescaled(lam, alpha.alpha), q, alpha).quotient
    measured = math.log(scaled / base) / math.log(lam)
    expected = scaling_exponent(q, alpha)
    return {"measured": measured, "expected": expected, "error": abs(measured - expected)}


# ---------------------------------------------------------------------------
# Extremal family on a full-space grid
# ---------------------------------------------------------------------------

def family_box(alpha: AlphaParam, truncation: float):
    """Box holding the gauge ball {r < truncation}."""
    a1 = alpha.alpha + 1.0
    X = truncation ** (1.0 / a1)
    Y = truncation / a1
    return (-X, -X, -Y), (X, X, Y)


def family_member(
    alpha: AlphaLike,
    resolution: int,
    truncation: float,
    b: float = 1.0,
    coefficients: Sequence[float] = (),
) -> GridFunction3D:
    """
    (phi_b(r) - phi_b(T))_+ with phi_b = (1 + b r^2)^{-1/2}, times
    1 + sum c_k m_k for modes symmetric under the 2n sector reflections.
    """
    alpha = as_alpha(alpha)
    a1 = alpha.alpha + 1.0
    lo, hi = family_box(alpha, truncation)
    X = hi[0]
    two_n = alpha.sector_total
    edge = (1.0 + b * truncation ** 2) ** -0.5

    def fn(x1, x2, y):
        r = gauge(x1, x2, y, alpha)
        base = np.where(r < truncation, (1.0 + b * r * r) ** -0.5 - edge, 0.0)
        if len(coefficients) == 0:
            return base
        s = (x1 * x1 + x2 * x2) ** (a1 / 2) / truncation
        tau = a1 * y / truncation
        modes = [
            s * s - tau * tau,
            np.real((x1 + 1j * x2) ** two_n) / X ** two_n,
            tau + 0.0 * s,
        ]
        factor = 1.0 + sum(c * m for c, m in zip(coefficients, modes))
        return base * factor

    return GridFunction3D.from_function(fn, lo, hi, (resolution,) * 3)


def sector_estimate(full_quotient: float, alpha: AlphaParam) -> float:
    """Quotient of one sector's restriction of a 2n-fold symmetric function."""
    return full_quotient / alpha.sector_total ** (1.0 / 3.0)


def core_floor(alpha: AlphaParam, cfg: FamilyConfig, resolution: int) -> float:
    """Smallest core radius b^{-1/2} spanning core_cells cells along both x and y."""
    a1 = alpha.alpha + 1.0
    lo, hi = family_box(alpha, cfg.truncation)
    hx = (hi[0] - lo[0]) / resolution
    hy = (hi[2] - lo[2]) / resolution
    return max((cfg.core_cells * hx) ** a1, a1 * cfg.core_cells * hy)


def family_estimate(
    alpha: AlphaLike,
    cfg: FamilyConfig,
    resolution: int,
    log_scale: float,
    coefficients: Sequence[float] = (),
) -> float:
    """Sector quotient of the member whose core is exp(log_scale) times the floor."""
    alpha = as_alpha(alpha)
    core = core_floor(alpha, cfg, resolution) * math.exp(log_scale)
    u = family_member(alpha, resolution, cfg.truncation, core ** -2, coefficients)
    return sector_estimate(rayleigh_quotient(u, cfg.q, alpha, cfg.threads).quotient, alpha)


def minimize_rayleigh(alpha: AlphaLike, cfg: Optional[FamilyConfig] = None) -> RayleighMinimum:
    """
    Minimizes the sector Rayleigh quotient at q = 6 over the extremal
    family: a bounded scalar search over the core scale, then a simplex
    search over perturbation coefficients.

    The core is measured in cells, so the truncation error of the family
    shrinks linearly with the mesh size. With `extrapolate` the minimizer is
    re-evaluated at half the resolution and the estimate is 2 Q_N - Q_{N/2}.
    """
    alpha = as_alpha(alpha)
    cfg = cfg or FamilyConfig()
    if cfg.q != CRITICAL_EXPONENT:
        raise DomainError(
            f"q={cfg.q}: only q = 6 is scale invariant; for other q the quotient "
            "can be driven to 0 or infinity by anisotropic dilation"
        )
    span = math.log(10.0)
    evaluations = {"count": 0}
    best = {"value": math.inf, "log_scale": 0.0, "coefficients": ()}

    def objective(log_scale: float, coefficients: Sequence[float] = ()) -> float:
        log_scale = min(max(log_scale, 0.0), span)
        value = family_estimate(alpha, cfg, cfg.resolution, log_scale, coefficients)
        evaluations["count"] += 1
        if value < best["value"]:
            best.update(value=value, log_scale=log_scale, coefficients=tuple(coefficients))
        logger.debug("family member log_scale=%.4f c=%s -> %.8f", log_scale, list(coefficients), value)
        return value

    logger.info("=== Rayleigh minimization (alpha=%g, N=%d) ===", alpha.alpha, cfg.resolution)
    initial = objective(0.5 * span)
    optimize.minimize_scalar(
        objective,
        bounds=(0.0, span),
        method="bounded",
        options={"xatol": 1e-3, "maxiter": cfg.max_iterations},
    )
    if cfg.perturbations > 0:
        x0 = np.concatenate([[best["log_scale"]], np.zeros(cfg.perturbations)])
        optimize.minimize(
            lambda z: objective(z[0], z[1:]),
            x0,
            method="Nelder-Mead",
            options={"maxiter": cfg.max_iterations, "xatol": 1e-3, "fatol": 1e-7},
        )

    grid_estimate = best["value"]
    coarse_estimate = None
    estimate = grid_estimate
    if cfg.extrapolate:
        coarse_estimate = family_estimate(
            alpha, cfg, cfg.resolution // 2, best["log_scale"], best["coefficients"]
        )
        estimate = 2.0 * grid_estimate - coarse_estimate
        logger.info("extrapolated from N=%d: %.8f, N=%d: %.8f", cfg.resolution, grid_estimate,
                    cfg.resolution // 2, coarse_estimate)

    core = core_floor(alpha, cfg, cfg.resolution) * math.exp(best["log_scale"])
    parameters = {"b": core ** -2}
    for k, c in enumerate(best["coefficients"], start=1):
        parameters[f"c{k}"] = float(c)
    logger.info("=== Rayleigh minimum %.8f after %d evaluations ===", estimate, evaluations["count"])
    return RayleighMinimum(
        estimate=estimate,
        grid_estimate=grid_estimate,
        coarse_estimate=coarse_estimate,
        full_space_quotient=grid_estimate * alpha.sector_total ** (1.0 / 3.0),
        initial_estimate=initial,
        parameters=parameters,
        evaluations=evaluations["count"],
    )


# ---------------------------------------------------------------------------
# Constants table
# ---------------------------------------------------------------------------

def constants_row(alpha: AlphaLike, family: Optional[FamilyConfig] = None) -> SobolevRow:
    alpha = as_alpha(alpha)
    rayleigh_min = minimize_rayleigh(alpha, family).estimate if family is not None else None
    return SobolevRow(
        alpha=alpha.alpha,
        n_alpha=alpha.sector_count,
        D=talenti_radial_constant(),
        L_derived=sobolev_lower_bound(alpha),
        L_paper_printed=sobolev_printed_bound(alpha),
        D_printed=talenti_printed_constant(2.0, 3.0),
        rayleigh_min=rayleigh_min,
    )


CSV_COLUMNS = ["alpha", "n_alpha", "D", "L_derived", "L_paper_printed", "rayleigh_min"]


def write_constants_csv(rows: List[SobolevRow], stream: TextIO) -> None:
    stream.write(",".join(CSV_COLUMNS) + "\n")
    for row in rows:
        data = row.model_dump()
        cells = []
        for column in CSV_COLUMNS:
            value = data[column]
            cells.append("" if value is None else (str(value) if isinstance(value, int) else f"{value:.17g}"))
        stream.write(",".join(cells) + "\n")
