"""Uniform Cartesian grids and centered finite differences.

Fields are stored grid-first: an array of shape ``(nx, ny, nz, *components)``.
An axis with a single point is suppressed: the field is constant along it and
every derivative in that direction vanishes. This gives 1D and 2D reductions
without separate code paths.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

BOUNDARY_MODES = ("periodic", "frozen")

# centered first-derivative stencils as antisymmetric pairs (offset, weight):
# d f ~ sum w (f[i+o] - f[i-o]) / h, exactly zero on constants
_STENCILS = {
    2: ((1, 0.5),),
    4: ((1, 8 / 12), (2, -1 / 12)),
}


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on the box ``[-L/2, L/2)`` per axis.

    ``boundary="frozen"`` keeps a band of ``order // 2`` points along each active
    face at its initial value; the band acts as the ghost region of the
    centered stencil.
    """

    points: tuple[int, int, int]
    extent: tuple[float, float, float]
    boundary: str = "periodic"
    order: int = 4

    def __post_init__(self):
        pts = tuple(int(n) for n in self.points)
        ext = tuple(float(e) for e in self.extent)
        if len(pts) != 3 or len(ext) != 3:
            raise ValidationError("grid", "points and extent need three entries")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "extent", ext)
        if self.boundary not in BOUNDARY_MODES:
            raise ValidationError("grid.boundary", f"must be one of {BOUNDARY_MODES}")
        if self.order not in _STENCILS:
            raise ValidationError("grid.order", "finite-difference order must be 2 or 4")
        for n, e in zip(pts, ext):
            if n < 1:
                raise ValidationError("grid.points", "must be positive")
            if n > 1 and n < 4:
                raise ValidationError("grid.points", "active axes need at least 4 points")
            if n > 1 and e <= 0:
                raise ValidationError("grid.extent", "must be positive on active axes")

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.points

    @property
    def active(self) -> tuple[int, ...]:
        return tuple(a for a in range(3) if self.points[a] > 1)

    @property
    def dim(self) -> int:
        return len(self.active)

    @property
    def spacing(self) -> tuple[float, float, float]:
        return tuple(e / n if n > 1 else 1.0 for n, e in zip(self.points, self.extent))

    @property
    def h(self) -> float:
        """Smallest spacing over active axes."""
        return min(self.spacing[a] for a in self.active) if self.active else 1.0

    @property
    def stencil_radius(self) -> int:
        return self.order // 2

    def axis_coords(self, axis: int) -> np.ndarray:
        n = self.points[axis]
        if n == 1:
            return np.zeros(1)
        return -0.5 * self.extent[axis] + self.spacing[axis] * np.arange(n)

    def coords(self) -> np.ndarray:
        """Coordinates as an array of shape ``(nx, ny, nz, 3)``."""
        axes = [self.axis_coords(a) for a in range(3)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def radius(self) -> np.ndarray:
        return np.linalg.norm(self.coords(), axis=-1)

    def refined(self, factor: int = 2) -> "GridSpec":
        pts = tuple(n * factor if n > 1 else 1 for n in self.points)
        return GridSpec(pts, self.extent, self.boundary, self.order)

    def diff(self, f: np.ndarray, axis: int) -> np.ndarray:
        """Centered derivative of a grid-first field along a spatial axis."""
        if self.points[axis] == 1:
            return np.zeros_like(f)
        out = np.zeros_like(f)
        for o, w in _STENCILS[self.order]:
            out += w * (np.roll(f, -o, axis=axis) - np.roll(f, o, axis=axis))
        return out / self.spacing[axis]

    def gradient(self, f: np.ndarray) -> np.ndarray:
        """All three spatial derivatives stacked at position ``3`` (after the grid axes)."""
        return np.stack([self.diff(f, a) for a in range(3)], axis=3)

    def interior_mask(self, extra: int = 0) -> np.ndarray:
        """Points at least ``stencil_radius + extra`` away from a frozen face.

        Periodic grids have no boundary, so every point is interior.
        """
        mask = np.ones(self.points, dtype=bool)
        if self.boundary == "periodic":
            return mask
        width = self.stencil_radius + extra
        for a in self.active:
            idx = np.arange(self.points[a])
            keep = (idx >= width) & (idx < self.points[a] - width)
            shape = [1, 1, 1]
            shape[a] = -1
            mask &= keep.reshape(shape)
        return mask

    def cell_volume(self) -> float:
        return float(np.prod([self.spacing[a] for a in self.active])) if self.active else 1.0
