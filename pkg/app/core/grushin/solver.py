# app/core/grushin/solver.py
"""
Energy functional of the semilinear problem and the Nehari-projected
descent that computes a ground state.

    Phi(u)          = 1/2 <Au, u> h^3 - sum F(x, u) h^3
    Phi'(u)         = Au - f(x, u)
    descent step    u <- u - s (u - A^{-1} f(u)), then rescaled onto the Nehari set
"""
import logging
import math
from typing import Optional, Tuple, Union

import numpy as np
from scipy import optimize

from app.core.config import DEGENERACY_THRESHOLD
from app.core.errors import ConvergenceError, DegeneracyError, DomainError
from app.core.geometry import as_alpha
from app.core.grid import GridFunction3D
from app.core.grushin.domain import Domain
from app.core.grushin.nonlinearity import Nonlinearity, NonlinearityKind
from app.core.grushin.operator import GrushinOperator, assemble_grushin, dirichlet_energy, linear_solve
from app.schemas.common import AlphaParam
from app.schemas.solver import InitialGuess, SolutionReport, SolverConfig

logger = logging.getLogger(__name__)

AlphaLike = Union[float, AlphaParam]


def _operator(u: GridFunction3D, alpha: AlphaLike, operator: Optional[GrushinOperator]) -> GrushinOperator:
    if operator is not None:
        return operator
    return assemble_grushin(Domain.of(u), alpha)


def _reaction(u: GridFunction3D, nl: Nonlinearity, domain: Domain) -> np.ndarray:
    x1, x2, y = domain.mesh()
    return np.where(domain.active, nl.f(x1, x2, y, u.values), 0.0)


def _primitive(u: GridFunction3D, nl: Nonlinearity, domain: Domain) -> np.ndarray:
    x1, x2, y = domain.mesh()
    return np.where(domain.active, nl.F(x1, x2, y, u.values), 0.0)


def energy(u: GridFunction3D, nl: Nonlinearity, alpha: AlphaLike, operator: Optional[GrushinOperator] = None) -> float:
    A = _operator(u, alpha, operator)
    potential = float(np.sum(_primitive(u, nl, A.domain))) * A.domain.cell_volume
    return 0.5 * dirichlet_energy(u, A) - potential


def energy_gradient(
    u: GridFunction3D, nl: Nonlinearity, alpha: AlphaLike, operator: Optional[GrushinOperator] = None
) -> GridFunction3D:
    """Au - f(u); <Phi'(u), v> is its h^3-weighted inner product with v."""
    A = _operator(u, alpha, operator)
    return A.domain.grid_function(A.apply(u.values) - _reaction(u, nl, A.domain))


def directional_derivative(
    u: GridFunction3D, v: GridFunction3D, nl: Nonlinearity, alpha: AlphaLike, operator: Optional[GrushinOperator] = None
) -> float:
    A = _operator(u, alpha, operator)
    return A.inner(energy_gradient(u, nl, alpha, A).values, v.values)


def weak_residual(u: GridFunction3D, nl: Nonlinearity, alpha: AlphaLike, operator: Optional[GrushinOperator] = None) -> float:
    """Discrete L^2 norm of Phi'(u), sqrt(h^3 sum g^2)."""
    A = _operator(u, alpha, operator)
    g = energy_gradient(u, nl, alpha, A).values
    return math.sqrt(A.inner(g, g))


def _power_parts(u: GridFunction3D, nl: Nonlinearity, A: GrushinOperator) -> Tuple[float, float]:
    """a = int |grad_G u|^2, b = int |x|^{2a} |u|^q."""
    a = dirichlet_energy(u, A)
    b = float(np.sum(_reaction(u, nl, A.domain) * u.values)) * A.domain.cell_volume
    return a, b


def _require_power(nl: Nonlinearity) -> float:
    if nl.kind != NonlinearityKind.power or nl.exponent is None:
        raise DomainError("this operation needs the power nonlinearity")
    return nl.exponent


def nehari_scale(u: GridFunction3D, nl: Nonlinearity, alpha: AlphaLike, operator: Optional[GrushinOperator] = None) -> float:
    """t* = (a/b)^{1/(q-2)}, so that <Phi'(t* u), t* u> = 0."""
    q = _require_power(nl)
    if not q > 2:
        raise DomainError(f"Nehari scaling needs q > 2, got {q}")
    A = _operator(u, alpha, operator)
    a, b = _power_parts(u, nl, A)
    if not b > 0:
        raise DomainError("int |x|^{2a} |u|^q vanishes; u has no Nehari rescaling")
    return (a / b) ** (1.0 / (q - 2))


def nehari_residual(u: GridFunction3D, nl: Nonlinearity, alpha: AlphaLike, operator: Optional[GrushinOperator] = None) -> float:
    """<Phi'(u), u>."""
    A = _operator(u, alpha, operator)
    return A.inner(energy_gradient(u, nl, alpha, A).values, u.values)


def mountain_pass_level(
    u: GridFunction3D,
    nl: Nonlinearity,
    alpha: AlphaLike,
    t_max: float = 3.0,
    operator: Optional[GrushinOperator] = None,
) -> Tuple[float, float]:
    """max of Phi(t u) over t in [0, t_max], with the maximizing t."""
    A = _operator(u, alpha, operator)
    result = optimize.minimize_scalar(
        lambda t: -energy(u.with_values(t * u.values), nl, alpha, A),
        bounds=(0.0, t_max),
        method="bounded",
        options={"xatol": 1e-10},
    )
    return -float(result.fun), float(result.x)


def initial_guess(domain: Domain, guess: Optional[InitialGuess] = None) -> GridFunction3D:
    """Product of boundary sines times a Gaussian around guess.center."""
    guess = guess or InitialGuess()
    lo, hi = np.array(domain.lo), np.array(domain.hi)
    center = np.array(guess.center)
    if not np.all((lo < center) & (center < hi)):
        raise DomainError(f"initial guess center {tuple(center)} is outside the domain")
    sigma = guess.width * (hi - lo) / 2

    def bump(x1, x2, y):
        value = guess.amplitude
        for d, x in enumerate((x1, x2, y)):
            value = value * np.sin(math.pi * (x - lo[d]) / (hi[d] - lo[d]))
            value = value * np.exp(-((x - center[d]) ** 2) / (2 * sigma[d] ** 2))
        return value

    return domain.from_function(bump)


def solve_ground_state(
    domain: Domain,
    nl: Nonlinearity,
    alpha: AlphaLike,
    cfg: Optional[SolverConfig] = None,
) -> SolutionReport:
    """
    Nehari-projected descent along the H-gradient u - A^{-1} f(u) with
    backtracking on the projected energy. Stops when the weak residual is
    at most cfg.outer_tolerance.
    """
    alpha = as_alpha(alpha)
    cfg = cfg or SolverConfig()
    q = _require_power(nl)
    if not 2 < q < 6:
        raise DomainError(f"ground states are computed for 2 < q < 6, got q={q}")
    A = assemble_grushin(domain, alpha, cfg.threads)

    def project(v: GridFunction3D) -> GridFunction3D:
        a, b = _power_parts(v, nl, A)
        if not (a > 0 and b > DEGENERACY_THRESHOLD * a) or math.sqrt(A.inner(v.values, v.values)) < DEGENERACY_THRESHOLD:
            raise DegeneracyError("iterate collapsed to the trivial solution")
        return v.with_values((a / b) ** (1.0 / (q - 2)) * v.values)

    logger.info("=== ground state: alpha=%g q=%g dims=%s ===", alpha.alpha, q, domain.dims)
    u = project(initial_guess(domain, cfg.initial_guess))
    phi = energy(u, nl, alpha, A)
    residual = weak_residual(u, nl, alpha, A)
    iterations = 0
    while residual > cfg.outer_tolerance:
        if iterations >= cfg.outer_max_iterations:
            raise ConvergenceError("ground-state iteration did not converge", residual, iterations)
        iterations += 1
        rhs = domain.grid_function(_reaction(u, nl, domain))
        target = linear_solve(A, rhs, cfg, guess=u)
        direction = u.values - target.values

        step = cfg.step
        for _ in range(cfg.max_backtracks + 1):
            candidate = project(u.with_values(u.values - step * direction))
            candidate_phi = energy(candidate, nl, alpha, A)
            if candidate_phi <= phi + 1e-12 * abs(phi):
                break
            step *= cfg.backtrack_factor
        else:
            raise ConvergenceError("backtracking found no energy decrease", residual, iterations)

        u, phi = candidate, candidate_phi
        residual = weak_residual(u, nl, alpha, A)
        logger.debug("iteration %d: step=%.3g energy=%.12g residual=%.3e", iterations, step, phi, residual)

    if np.sum(u.values) < 0:
        u = u.with_values(-u.values)
    beta, _ = mountain_pass_level(u, nl, alpha, cfg.mountain_pass_t_max, A)
    logger.info("=== ground state converged: %d iterations, energy %.10g ===", iterations, phi)
    return SolutionReport(
        u=u,
        energy=phi,
        gradient_norm=residual,
        nehari_residual=nehari_residual(u, nl, alpha, A),
        l2_norm=math.sqrt(A.inner(u.values, u.values)),
        iterations=iterations,
        mountain_pass_level=beta,
        alpha=alpha.alpha,
        q=q,
        dims=domain.dims,
    )
