"""Input validation helpers shared by the library functions and the estimator."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .exceptions import DimensionTooLarge

MAX_DIMENSION = 64


class Box(NamedTuple):
    """Axis-aligned rectangle ``[x0, x1] x [y0, y1]`` in the complex plane."""

    x0: float
    y0: float
    x1: float
    y1: float

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    @property
    def diameter(self) -> float:
        return float(np.hypot(self.width, self.height))

    def contains(self, z, pad: float = 0.0):
        z = np.asarray(z)
        return ((z.real >= self.x0 - pad) & (z.real <= self.x1 + pad)
                & (z.imag >= self.y0 - pad) & (z.imag <= self.y1 + pad))

    def inflate(self, margin: float) -> "Box":
        return Box(self.x0 - margin, self.y0 - margin, self.x1 + margin, self.y1 + margin)


def check_matrix(a, *, name: str = "a") -> np.ndarray:
    """Return ``a`` as a finite square complex128 array with ``1 <= n <= 64``."""
    arr = np.array(a, dtype=np.complex128, copy=True)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {arr.shape}")
    n = arr.shape[0]
    if n < 1:
        raise ValueError(f"{name} must be at least 1x1")
    if n > MAX_DIMENSION:
        raise DimensionTooLarge(f"{name} has dimension {n} > {MAX_DIMENSION}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    arr.setflags(write=False)
    return arr


def check_region(region) -> Box:
    if isinstance(region, Box):
        box = region
    else:
        vals = [float(v) for v in region]
        if len(vals) != 4:
            raise ValueError("region must be (x0, y0, x1, y1)")
        box = Box(*vals)
    if not (box.x1 > box.x0 and box.y1 > box.y0):
        raise ValueError(f"degenerate region {tuple(box)}")
    if not all(np.isfinite(box)):
        raise ValueError("region must be finite")
    return box


def check_grid(grid, minimum: int = 16) -> tuple[int, int]:
    if np.isscalar(grid):
        nx = ny = int(grid)
    else:
        nx, ny = (int(g) for g in grid)
    if nx < minimum or ny < minimum:
        raise ValueError(f"grid must be at least {minimum} per axis, got {(nx, ny)}")
    return nx, ny


def check_points(z) -> np.ndarray:
    """Accept complex points, or an ``(m, 2)`` real array of ``(x, y)`` rows."""
    arr = np.asarray(z)
    if np.iscomplexobj(arr):
        pts = arr.astype(np.complex128).ravel()
    elif arr.ndim == 2 and arr.shape[1] == 2:
        pts = arr[:, 0].astype(float) + 1j * arr[:, 1].astype(float)
    else:
        pts = arr.astype(np.complex128).ravel()
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    return pts
