# app/core/grushin/domain.py
"""
Box and masked domains for the finite-difference solver.

Unknowns sit at lo + (i + 1) h with h = (hi - lo) / (N + 1); the
Dirichlet boundary is the box itself, so the cell-centered grid covering the
unknowns spans [lo + h/2, hi - h/2].
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage

from app.core.errors import DomainError
from app.core.grid import GridFunction3D
from app.core.shapes import ImplicitShape

logger = logging.getLogger(__name__)

Vector3 = Tuple[float, float, float]


@dataclass(frozen=True)
class BoundaryFace:
    """All cell faces on one side of the box: axis 0..2, side -1 or +1."""
    axis: int
    side: int

    @property
    def normal(self) -> Vector3:
        n = [0.0, 0.0, 0.0]
        n[self.axis] = float(self.side)
        return tuple(n)


@dataclass(frozen=True)
class Domain:
    lo: Vector3
    hi: Vector3
    dims: Tuple[int, int, int]
    mask: Optional[np.ndarray] = field(default=None)
    name: str = "box"

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        dims = tuple(int(n) for n in self.dims)
        if len(lo) != 3 or len(hi) != 3 or len(dims) != 3:
            raise DomainError("domain needs three bounds and three dimensions")
        if any(b <= a for a, b in zip(lo, hi)):
            raise DomainError(f"degenerate domain box lo={lo} hi={hi}")
        if any(n < 2 for n in dims):
            raise DomainError(f"need at least two unknowns per axis, got {dims}")
        if dims[0] % 2 or dims[1] % 2:
            raise DomainError(f"dims along x1 and x2 must be even, got {dims}")
        if not all(a < 0 < b for a, b in zip(lo, hi)):
            raise DomainError("the origin must lie strictly inside the domain")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "dims", dims)

        if self.mask is not None:
            mask = np.array(self.mask, dtype=bool)
            if mask.shape != dims:
                raise DomainError(f"mask shape {mask.shape} does not match dims {dims}")
            if not mask[self.origin_cell]:
                raise DomainError("the cell nearest the origin is not in the domain")
            _, components = ndimage.label(mask)
            if components != 1:
                raise DomainError(f"domain mask has {components} connected components")
            mask.flags.writeable = False
            object.__setattr__(self, "mask", mask)

    @classmethod
    def cube(cls, half_width: float, n: int) -> "Domain":
        return cls((-half_width,) * 3, (half_width,) * 3, (n, n, n), name="cube")

    @classmethod
    def from_shape(cls, shape: ImplicitShape, lo: Sequence[float], hi: Sequence[float], dims: Sequence[int]) -> "Domain":
        """Masked domain {level < 0} inside the box."""
        probe = cls(lo, hi, dims)
        x1, x2, y = probe.mesh()
        mask = np.broadcast_to(shape.level(x1, x2, y), probe.dims) < 0
        return cls(lo, hi, dims, mask, name=shape.name)

    @classmethod
    def of(cls, u: GridFunction3D) -> "Domain":
        """The domain whose unknown grid is the grid of u."""
        h = u.spacing
        lo = tuple(np.array(u.lo) - h / 2)
        hi = tuple(np.array(u.hi) + h / 2)
        return cls(lo, hi, u.dims, u.mask)

    @property
    def spacing(self) -> np.ndarray:
        return (np.array(self.hi) - np.array(self.lo)) / (np.array(self.dims) + 1)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def grid_bounds(self) -> Tuple[Vector3, Vector3]:
        h = self.spacing
        return tuple(np.array(self.lo) + h / 2), tuple(np.array(self.hi) - h / 2)

    @property
    def active(self) -> np.ndarray:
        if self.mask is None:
            return np.ones(self.dims, dtype=bool)
        return self.mask

    @property
    def origin_cell(self) -> Tuple[int, int, int]:
        h = self.spacing
        return tuple(
            int(np.clip(np.rint(-self.lo[d] / h[d] - 1), 0, self.dims[d] - 1)) for d in range(3)
        )

    def axes(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        h = self.spacing
        return tuple(self.lo[d] + (np.arange(self.dims[d]) + 1) * h[d] for d in range(3))

    def mesh(self):
        a1, a2, a3 = self.axes()
        return a1[:, None, None], a2[None, :, None], a3[None, None, :]

    def weight(self, alpha: float) -> np.ndarray:
        x1, x2, _ = self.mesh()
        return np.hypot(x1, x2) ** (2.0 * alpha)

    def weighted_volume(self, alpha: float) -> float:
        """Discrete |Omega|_{2,a}."""
        return float(np.sum(np.broadcast_to(self.weight(alpha), self.dims)[self.active])) * self.cell_volume

    def grid_function(self, values: np.ndarray) -> GridFunction3D:
        lo, hi = self.grid_bounds
        values = np.asarray(values, dtype=float).reshape(self.dims)
        if self.mask is not None:
            values = np.where(self.mask, values, 0.0)
        return GridFunction3D(lo, hi, values, self.mask)

    def from_function(self, fn: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]) -> GridFunction3D:
        x1, x2, y = self.mesh()
        return self.grid_function(np.broadcast_to(fn(x1, x2, y), self.dims))

    def zeros(self) -> GridFunction3D:
        return self.grid_function(np.zeros(self.dims))

    def dilated(self, factor: float) -> "Domain":
        """The same box scaled by `factor` with the same number of unknowns."""
        if not factor > 0:
            raise DomainError(f"dilation factor must be positive, got {factor}")
        return Domain(
            tuple(factor * v for v in self.lo),
            tuple(factor * v for v in self.hi),
            self.dims,
            self.mask,
            name=self.name,
        )

    def refined(self, dims: Sequence[int]) -> "Domain":
        if self.mask is not None:
            raise DomainError("only box domains can be refined")
        return Domain(self.lo, self.hi, dims, name=self.name)

    def boundary_faces(self) -> List[BoundaryFace]:
        """The six faces of the box, for box domains only."""
        if self.mask is not None:
            raise DomainError("boundary faces are defined for box domains only")
        return [BoundaryFace(axis, side) for axis in range(3) for side in (-1, 1)]

    def boundary_cells(self) -> Tuple[np.ndarray, np.ndarray]:
        """
        Active cells with an inactive or outside neighbor, as an (m, 3) index
        array and the (m, 3) outward normals of the shared faces.
        """
        padded = np.pad(self.active, 1, constant_values=False)
        indices, normals = [], []
        for axis in range(3):
            for side in (-1, 1):
                neighbor = np.roll(padded, -side, axis=axis)[1:-1, 1:-1, 1:-1]
                hits = np.argwhere(self.active & ~neighbor)
                n = np.zeros((len(hits), 3))
                n[:, axis] = side
                indices.append(hits)
                normals.append(n)
        return np.concatenate(indices), np.concatenate(normals)
