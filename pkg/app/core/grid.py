# app/core/grid.py
"""
Scalar fields on uniform axis-aligned grids, their text file format, and the
slab-parallel reduction helpers shared by every voxel quadrature.
"""
import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, TextIO, Tuple, Union

import numpy as np

from app.core.config import GRID_FILE_DIGITS, GRID_FILE_HEADER, SLAB_LAYERS
from app.core.errors import DomainError, GridFormatError

logger = logging.getLogger(__name__)

Vector3 = Tuple[float, float, float]


@dataclass(frozen=True)
class GridFunction3D:
    """
    Values at cell centers of a uniform grid over the box [lo, hi].

    `values[i1, i2, i3]` belongs to the cell centered at
    lo + (i + 1/2) * h. Cells outside `mask` carry the value zero, which is
    the compact-support convention every operation relies on.
    """
    lo: Vector3
    hi: Vector3
    values: np.ndarray
    mask: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 3:
            raise DomainError(f"grid values must be 3-dimensional, got shape {values.shape}")
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != 3 or len(hi) != 3 or any(b <= a for a, b in zip(lo, hi)):
            raise DomainError(f"degenerate bounding box lo={lo} hi={hi}")
        if not np.all(np.isfinite(values)):
            raise DomainError("grid values must be finite")

        mask = None
        if self.mask is not None:
            mask = np.array(self.mask, dtype=bool)
            if mask.shape != values.shape:
                raise DomainError("mask shape does not match values")
            if np.any(values[~mask] != 0.0):
                raise DomainError("values must vanish on masked-out cells")
            mask.flags.writeable = False

        values.flags.writeable = False
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", mask)

    @classmethod
    def from_function(
        cls,
        fn: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray],
        lo: Sequence[float],
        hi: Sequence[float],
        dims: Sequence[int],
        mask: Optional[np.ndarray] = None,
    ) -> "GridFunction3D":
        probe = cls(lo, hi, np.zeros(tuple(dims)))
        x1, x2, y = probe.mesh()
        values = np.broadcast_to(fn(x1, x2, y), probe.dims).astype(float)
        if mask is not None:
            values = np.where(mask, values, 0.0)
        return cls(lo, hi, values, mask)

    @property
    def dims(self) -> Tuple[int, int, int]:
        return tuple(self.values.shape)

    @property
    def spacing(self) -> np.ndarray:
        return (np.array(self.hi) - np.array(self.lo)) / np.array(self.dims)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def active(self) -> np.ndarray:
        if self.mask is None:
            return np.ones(self.dims, dtype=bool)
        return self.mask

    def axes(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        h = self.spacing
        return tuple(
            self.lo[d] + (np.arange(self.dims[d]) + 0.5) * h[d] for d in range(3)
        )

    def mesh(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable center coordinates (x1, x2, y)."""
        a1, a2, a3 = self.axes()
        return a1[:, None, None], a2[None, :, None], a3[None, None, :]

    def weight(self, alpha: float) -> np.ndarray:
        """|x|^{2 alpha} at cell centers, shape (n1, n2, 1)."""
        x1, x2, _ = self.mesh()
        return np.hypot(x1, x2) ** (2.0 * alpha)

    def with_values(self, values: np.ndarray) -> "GridFunction3D":
        if self.mask is not None:
            values = np.where(self.mask, values, 0.0)
        return GridFunction3D(self.lo, self.hi, values, self.mask)

    def rescaled(self, lam: float, alpha: float) -> "GridFunction3D":
        """
        The same samples on the grid shrunk by (x, y) -> (x / lam, y / lam^{alpha+1}),
        i.e. the grid function of u(lam x, lam^{alpha+1} y).
        """
        factors = np.array([lam, lam, lam ** (alpha + 1.0)])
        return GridFunction3D(
            tuple(np.array(self.lo) / factors),
            tuple(np.array(self.hi) / factors),
            self.values,
            self.mask,
        )


def tree_reduce(parts: Sequence[float]) -> float:
    """Pairwise sum in a fixed tree shape."""
    parts = [float(p) for p in parts]
    if not parts:
        return 0.0
    while len(parts) > 1:
        paired = [parts[i] + parts[i + 1] for i in range(0, len(parts) - 1, 2)]
        if len(parts) % 2:
            paired.append(parts[-1])
        parts = paired
    return parts[0]


def slab_ranges(n_layers: int) -> List[Tuple[int, int]]:
    return [
        (k0, min(k0 + SLAB_LAYERS, n_layers)) for k0 in range(0, n_layers, SLAB_LAYERS)
    ]


def map_slabs(fn: Callable[[int, int], float], n_layers: int, threads: int = 1) -> float:
    """
    Evaluates fn(k0, k1) on the fixed slab partition of range(n_layers) and
    reduces the partial sums. The partition does not depend on `threads`, so
    the result is bit-identical for any worker count.
    """
    ranges = slab_ranges(n_layers)
    if threads > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda r: fn(*r), ranges))
    else:
        parts = [fn(k0, k1) for k0, k1 in ranges]
    return tree_reduce(parts)


# ---------------------------------------------------------------------------
# Text file format
# ---------------------------------------------------------------------------

def _format_number(value: float) -> str:
    return format(float(value), f".{GRID_FILE_DIGITS}g")


def write_grid(u: GridFunction3D, stream: TextIO) -> None:
    """
    Writes `u` in the versioned text format: header, dims, bbox
    (x1min x1max x2min x2max ymin ymax), then one line of n1 values per
    (x2, y) pair, x1 fastest, then x2, then y.
    """
    n1, n2, n3 = u.dims
    stream.write(GRID_FILE_HEADER + "\n")
    stream.write(f"{n1} {n2} {n3}\n")
    bbox = [u.lo[0], u.hi[0], u.lo[1], u.hi[1], u.lo[2], u.hi[2]]
    stream.write(" ".join(_format_number(v) for v in bbox) + "\n")
    for k in range(n3):
        for j in range(n2):
            stream.write(" ".join(_format_number(v) for v in u.values[:, j, k]) + "\n")


def dump_grid(u: GridFunction3D) -> str:
    buffer = io.StringIO()
    write_grid(u, buffer)
    return buffer.getvalue()


def save_grid(u: GridFunction3D, file_path: str) -> None:
    with open(file_path, "w", encoding="utf-8") as f:
        write_grid(u, f)


def _parse_float(token: str, line: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise GridFormatError(f"not a number: {token!r}", line)
    if not math.isfinite(value):
        raise GridFormatError(f"non-finite value {token!r}", line)
    return value


def parse_grid(text: str) -> GridFunction3D:
    """Parses the text format; errors carry the 1-based line number."""
    lines = text.splitlines()
    if not lines or lines[0].strip() != GRID_FILE_HEADER:
        raise GridFormatError(f"expected header {GRID_FILE_HEADER!r}", 1)

    if len(lines) < 3:
        raise GridFormatError("missing dims or bbox line", len(lines) + 1)

    dim_tokens = lines[1].split()
    if len(dim_tokens) != 3:
        raise GridFormatError("dims line must hold three integers", 2)
    try:
        dims = tuple(int(t) for t in dim_tokens)
    except ValueError:
        raise GridFormatError("dims must be integers", 2)
    if any(d <= 0 for d in dims):
        raise GridFormatError("dims must be positive", 2)

    bbox_tokens = lines[2].split()
    if len(bbox_tokens) != 6:
        raise GridFormatError("bbox line must hold six numbers", 3)
    bbox = [_parse_float(t, 3) for t in bbox_tokens]
    lo = (bbox[0], bbox[2], bbox[4])
    hi = (bbox[1], bbox[3], bbox[5])
    if any(b <= a for a, b in zip(lo, hi)):
        raise GridFormatError("degenerate bbox", 3)

    expected = dims[0] * dims[1] * dims[2]
    flat: List[float] = []
    for number, line in enumerate(lines[3:], start=4):
        for token in line.split():
            flat.append(_parse_float(token, number))
    if len(flat) != expected:
        raise GridFormatError(
            f"expected {expected} values, found {len(flat)}", len(lines)
        )

    values = np.array(flat).reshape(dims, order="F")
    return GridFunction3D(lo, hi, values)


def load_grid(source: Union[str, TextIO]) -> GridFunction3D:
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8") as f:
            return parse_grid(f.read())
    return parse_grid(source.read())
