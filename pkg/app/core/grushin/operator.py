# app/core/grushin/operator.py
"""
Matrix-free 7-point discretization of -Laplace_x - |x|^{2a} d^2/dy^2 with
zero ghost values outside the domain, and the conjugate-gradient solve.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Union

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from app.core.errors import ConvergenceError
from app.core.geometry import as_alpha
from app.core.grid import GridFunction3D, slab_ranges
from app.core.grushin.domain import Domain
from app.schemas.common import AlphaParam
from app.schemas.solver import SolverConfig

logger = logging.getLogger(__name__)


class GrushinOperator:
    """
    A acting on arrays of shape `domain.dims`. Inactive cells are ignored on
    input and zero on output.
    """

    def __init__(self, domain: Domain, alpha: Union[float, AlphaParam], threads: int = 1):
        self.domain = domain
        self.alpha = as_alpha(alpha)
        self.threads = threads
        h = domain.spacing
        self._inv_h2 = 1.0 / (h * h)
        self._weight = domain.weight(self.alpha.alpha)
        self._active = domain.active
        self.size = int(np.count_nonzero(self._active))

    def _apply_rows(self, padded: np.ndarray, out: np.ndarray, k0: int, k1: int) -> None:
        # rows k0..k1 along x1; padded has one ghost layer on every side
        c = padded[k0 + 1:k1 + 1, 1:-1, 1:-1]
        d1 = 2 * c - padded[k0:k1, 1:-1, 1:-1] - padded[k0 + 2:k1 + 2, 1:-1, 1:-1]
        d2 = 2 * c - padded[k0 + 1:k1 + 1, :-2, 1:-1] - padded[k0 + 1:k1 + 1, 2:, 1:-1]
        d3 = 2 * c - padded[k0 + 1:k1 + 1, 1:-1, :-2] - padded[k0 + 1:k1 + 1, 1:-1, 2:]
        out[k0:k1] = (
            self._inv_h2[0] * d1
            + self._inv_h2[1] * d2
            + self._inv_h2[2] * self._weight[k0:k1] * d3
        )

    def apply(self, values: np.ndarray) -> np.ndarray:
        u = np.where(self._active, np.asarray(values, dtype=float).reshape(self.domain.dims), 0.0)
        padded = np.pad(u, 1)
        out = np.empty_like(u)
        ranges = slab_ranges(self.domain.dims[0])
        if self.threads > 1 and len(ranges) > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                list(pool.map(lambda r: self._apply_rows(padded, out, *r), ranges))
        else:
            for k0, k1 in ranges:
                self._apply_rows(padded, out, k0, k1)
        return np.where(self._active, out, 0.0)

    def __call__(self, u: GridFunction3D) -> GridFunction3D:
        return self.domain.grid_function(self.apply(u.values))

    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        """sum over active cells of u * v, times the cell volume."""
        return float(np.sum(np.where(self._active, u * v, 0.0))) * self.domain.cell_volume

    def as_linear_operator(self) -> LinearOperator:
        """A restricted to active cells, as a scipy LinearOperator on flat vectors."""
        active = self._active
        dims = self.domain.dims

        def matvec(x: np.ndarray) -> np.ndarray:
            full = np.zeros(dims)
            full[active] = np.ravel(x)
            return self.apply(full)[active]

        return LinearOperator((self.size, self.size), matvec=matvec, rmatvec=matvec, dtype=float)


def assemble_grushin(domain: Domain, alpha: Union[float, AlphaParam], threads: int = 1) -> GrushinOperator:
    return GrushinOperator(domain, alpha, threads)


def dirichlet_energy(u: GridFunction3D, operator: GrushinOperator) -> float:
    """Discrete integral of |grad_G u|^2, i.e. <Au, u> h^3."""
    return operator.inner(operator.apply(u.values), u.values)


def linear_solve(
    operator: GrushinOperator,
    rhs: GridFunction3D,
    cfg: Optional[SolverConfig] = None,
    guess: Optional[GridFunction3D] = None,
) -> GridFunction3D:
    """Conjugate gradients on the active cells to relative residual cfg.cg_tolerance."""
    cfg = cfg or SolverConfig()
    active = operator.domain.active
    b = np.asarray(rhs.values)[active]
    if not np.any(b):
        return operator.domain.zeros()
    x0 = None if guess is None else np.asarray(guess.values)[active]

    iterations = {"count": 0}

    def count(_):
        iterations["count"] += 1

    x, info = cg(
        operator.as_linear_operator(),
        b,
        x0=x0,
        rtol=cfg.cg_tolerance,
        atol=0.0,
        maxiter=cfg.cg_max_iterations,
        callback=count,
    )
    if info != 0:
        A = operator.as_linear_operator()
        residual = float(np.linalg.norm(b - A.matvec(x)) / np.linalg.norm(b))
        raise ConvergenceError("conjugate gradients did not converge", residual, iterations["count"])
    logger.debug("cg converged in %d iterations", iterations["count"])
    full = np.zeros(operator.domain.dims)
    full[active] = x
    return operator.domain.grid_function(full)
