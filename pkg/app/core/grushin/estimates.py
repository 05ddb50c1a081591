# app/core/grushin/estimates.py
"""
Norm estimates on the discrete space: the Poincare eigenvalue, the weighted
Sobolev embedding, and a manufactured-solution convergence study.
"""
import logging
import math
from typing import List, Optional, Sequence, Union

import numpy as np

from app.core.config import SOBOLEV_SLACK
from app.core.errors import ConvergenceError, DomainError
from app.core.geometry import as_alpha
from app.core.grid import GridFunction3D
from app.core.grushin.domain import Domain
from app.core.grushin.operator import assemble_grushin, dirichlet_energy, linear_solve
from app.core.rearrangement import gauge
from app.core.sobolev import sobolev_lower_bound
from app.schemas.common import AlphaParam
from app.schemas.solver import EmbeddingEntry, EmbeddingReport, ManufacturedReport, SolverConfig

logger = logging.getLogger(__name__)

AlphaLike = Union[float, AlphaParam]


def poincare_constant(domain: Domain, alpha: AlphaLike, cfg: Optional[SolverConfig] = None) -> float:
    """
    Smallest eigenvalue lambda_1 of the discrete operator by inverse power
    iteration; ||u||_2 <= lambda_1^{-1/2} ||grad_G u|| on the discrete space.
    """
    alpha = as_alpha(alpha)
    cfg = cfg or SolverConfig()
    A = assemble_grushin(domain, alpha, cfg.threads)
    v = domain.from_function(lambda x1, x2, y: np.ones(np.broadcast(x1, x2, y).shape))
    v = v.with_values(v.values / math.sqrt(A.inner(v.values, v.values)))
    eigenvalue = dirichlet_energy(v, A)
    for iteration in range(1, cfg.eigen_max_iterations + 1):
        w = linear_solve(A, v, cfg, guess=v.with_values(v.values / eigenvalue))
        v = w.with_values(w.values / math.sqrt(A.inner(w.values, w.values)))
        previous, eigenvalue = eigenvalue, dirichlet_energy(v, A)
        change = abs(eigenvalue - previous) / eigenvalue
        logger.debug("inverse iteration %d: lambda=%.12g change=%.3e", iteration, eigenvalue, change)
        if change <= cfg.eigen_tolerance:
            return eigenvalue
    raise ConvergenceError("inverse power iteration did not converge", change, cfg.eigen_max_iterations)


def embedding_constant(domain: Domain, q: float, alpha: AlphaLike) -> float:
    """C_q = |Omega|_{2,a}^{1/q - 1/6} / L."""
    alpha = as_alpha(alpha)
    if not 1 <= q <= 6:
        raise DomainError(f"embedding exponent must lie in [1, 6], got {q}")
    volume = domain.weighted_volume(alpha.alpha)
    return volume ** (1.0 / q - 1.0 / 6.0) / sobolev_lower_bound(alpha)


def embedding_check(
    domain: Domain,
    q: float,
    alpha: AlphaLike,
    corpus: Sequence[GridFunction3D],
    slack: float = SOBOLEV_SLACK,
) -> EmbeddingReport:
    """||u||_{L^q_w} against (1 + slack) C_q ||grad_G u|| for every corpus member."""
    alpha = as_alpha(alpha)
    constant = embedding_constant(domain, q, alpha)
    A = assemble_grushin(domain, alpha)
    weight = domain.weight(alpha.alpha)
    entries: List[EmbeddingEntry] = []
    for u in corpus:
        if u.dims != domain.dims:
            raise DomainError(f"corpus function dims {u.dims} do not match the domain {domain.dims}")
        lq = float(np.sum(weight * np.abs(u.values) ** q)) * domain.cell_volume
        lq = lq ** (1.0 / q)
        gradient = math.sqrt(dirichlet_energy(u, A))
        bound = constant * gradient
        entries.append(EmbeddingEntry(
            lq_norm=lq,
            gradient_norm=gradient,
            ratio=lq / bound if bound > 0 else 0.0,
            margin=(1 + slack) * bound - lq,
        ))
    ratios = [e.ratio for e in entries]
    return EmbeddingReport(
        q=q,
        constant=constant,
        weighted_volume=domain.weighted_volume(alpha.alpha),
        slack=slack,
        entries=entries,
        max_ratio=max(ratios) if ratios else 0.0,
        violations=sum(1 for e in entries if e.margin < 0),
    )


def random_bumps(domain: Domain, count: int, seed: int = 0) -> List[GridFunction3D]:
    """Gaussian bumps of random center, width and sign, cut off by the boundary sines."""
    rng = np.random.default_rng(seed)
    lo, hi = np.array(domain.lo), np.array(domain.hi)
    half = (hi - lo) / 2
    mid = (hi + lo) / 2
    corpus = []
    for _ in range(count):
        center = mid + half * rng.uniform(-0.5, 0.5, 3)
        sigma = half * rng.uniform(0.15, 0.6, 3)
        sign = rng.choice([-1.0, 1.0])

        def bump(x1, x2, y, center=center, sigma=sigma, sign=sign):
            value = sign
            for d, x in enumerate((x1, x2, y)):
                value = value * np.sin(math.pi * (x - lo[d]) / (hi[d] - lo[d]))
                value = value * np.exp(-((x - center[d]) ** 2) / (2 * sigma[d] ** 2))
            return value

        corpus.append(domain.from_function(bump))
    return corpus


def truncated_extremal(domain: Domain, alpha: AlphaLike, b: Optional[float] = None) -> GridFunction3D:
    """The radial extremal cut to the largest gauge ball inside the domain box."""
    alpha = as_alpha(alpha)
    a1 = alpha.alpha + 1.0
    reach_x = min(min(-domain.lo[0], domain.hi[0]), min(-domain.lo[1], domain.hi[1]))
    reach_y = min(-domain.lo[2], domain.hi[2])
    radius = min(reach_x ** a1, a1 * reach_y)
    if b is None:
        b = (6.0 / radius) ** 2
    edge = (1.0 + b * radius ** 2) ** -0.5

    def fn(x1, x2, y):
        r = gauge(x1, x2, y, alpha)
        return np.where(r < radius, (1.0 + b * r * r) ** -0.5 - edge, 0.0)

    return domain.from_function(fn)


# ---------------------------------------------------------------------------
# Manufactured solution
# ---------------------------------------------------------------------------

def manufactured_solution(domain: Domain, alpha: AlphaLike) -> GridFunction3D:
    """u = prod cos(pi x_i / 2) on (-1, 1)^3."""
    return domain.from_function(
        lambda x1, x2, y: np.cos(math.pi * x1 / 2) * np.cos(math.pi * x2 / 2) * np.cos(math.pi * y / 2)
    )


def manufactured_rhs(domain: Domain, alpha: AlphaLike) -> GridFunction3D:
    """-Laplace_x u - |x|^{2a} u_yy = (pi^2 / 4) (2 + |x|^{2a}) u."""
    alpha = as_alpha(alpha)
    u = manufactured_solution(domain, alpha)
    factor = (math.pi ** 2 / 4) * (2 + domain.weight(alpha.alpha))
    return u.with_values(factor * u.values)


def manufactured_convergence(
    alpha: AlphaLike,
    resolutions: Sequence[int] = (8, 16, 32),
    cfg: Optional[SolverConfig] = None,
) -> ManufacturedReport:
    """Discrete L^2 error of the linear solve on (-1, 1)^3 and the observed orders."""
    alpha = as_alpha(alpha)
    spacings, errors = [], []
    for n in resolutions:
        domain = Domain.cube(1.0, n)
        A = assemble_grushin(domain, alpha)
        solution = linear_solve(A, manufactured_rhs(domain, alpha), cfg)
        diff = solution.values - manufactured_solution(domain, alpha).values
        spacings.append(float(domain.spacing[0]))
        errors.append(math.sqrt(A.inner(diff, diff)))
        logger.debug("manufactured N=%d h=%.5f error=%.6e", n, spacings[-1], errors[-1])
    orders = [
        math.log(errors[k] / errors[k + 1]) / math.log(spacings[k] / spacings[k + 1])
        for k in range(len(errors) - 1)
    ]
    return ManufacturedReport(resolutions=list(resolutions), spacings=spacings, errors=errors, orders=orders)
