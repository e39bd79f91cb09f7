"""Epanechnikov kernel estimate of a pattern's intensity on a raster."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import PointPattern, Window
from .errors import EmptyPattern


@dataclass(frozen=True)
class IntensityRaster:
    """Intensity at cell centres; ``values[i, j]`` is cell ``(x_i, y_j)``."""

    window: Window
    nx: int
    ny: int
    values: np.ndarray

    @property
    def cell_area(self) -> float:
        return self.window.area() / (self.nx * self.ny)

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        w = self.window
        xs = w.x_min + (np.arange(self.nx) + 0.5) * w.width / self.nx
        ys = w.y_min + (np.arange(self.ny) + 0.5) * w.height / self.ny
        return xs, ys

    def total_mass(self) -> float:
        return float(self.values.sum() * self.cell_area)

    def coefficient_of_variation(self) -> float:
        mean = self.values.mean()
        return float(self.values.std() / mean) if mean > 0 else 0.0


def default_bandwidth(pattern: PointPattern) -> float:
    """``4.5 / sqrt(n / A_W)``."""
    if pattern.n < 1:
        raise EmptyPattern("bandwidth needs at least one point")
    return 4.5 / math.sqrt(pattern.intensity())


def epanechnikov_intensity(pattern: PointPattern, bandwidth: float, nx: int = 256, ny: int = 128) -> IntensityRaster:
    """``lambda(x) = sum_i k_R(|x - x_i|) / (pi R^2)`` with
    ``k_R(d) = 2 (1 - d^2 / R^2)`` inside the disk of radius ``R``.

    No edge correction is applied.
    """
    if not bandwidth > 0:
        raise ValueError("bandwidth must be positive")
    if nx < 2 or ny < 2:
        raise ValueError("raster needs at least 2 cells per axis")
    raster = IntensityRaster(pattern.window, nx, ny, np.zeros((nx, ny)))
    xs, ys = raster.centers()
    r2 = bandwidth**2
    values = np.zeros((nx, ny))
    # loop over points, touching only cells within the kernel support
    for px, py in pattern.xy:
        i0, i1 = np.searchsorted(xs, [px - bandwidth, px + bandwidth], side="left")
        j0, j1 = np.searchsorted(ys, [py - bandwidth, py + bandwidth], side="left")
        j1 = min(j1 + 1, ny)
        i1 = min(i1 + 1, nx)
        dx2 = (xs[i0:i1] - px) ** 2
        dy2 = (ys[j0:j1] - py) ** 2
        d2 = dx2[:, None] + dy2[None, :]
        values[i0:i1, j0:j1] += np.where(d2 <= r2, 2.0 * (1.0 - d2 / r2), 0.0)
    values /= math.pi * r2
    return IntensityRaster(pattern.window, nx, ny, values)


def histogram_raster(hist, window: Window, nx: int = 256, ny: int = 128) -> IntensityRaster:
    """Sample a Knuth histogram's intensity at raster cell centres.

    Cells outside the histogram span get zero intensity.
    """
    probe = IntensityRaster(window, nx, ny, np.zeros((nx, ny)))
    xs, ys = probe.centers()
    span, grid = hist.grid.span, hist.grid
    inten = hist.intensity()
    ix = np.clip(np.floor((xs - span.x_min) * grid.m_x / span.width).astype(int), 0, grid.m_x - 1)
    iy = np.clip(np.floor((ys - span.y_min) * grid.m_y / span.height).astype(int), 0, grid.m_y - 1)
    values = inten[ix[:, None], iy[None, :]]
    inside = ((xs >= span.x_min) & (xs <= span.x_max))[:, None] & ((ys >= span.y_min) & (ys <= span.y_max))[None, :]
    return IntensityRaster(window, nx, ny, np.where(inside, values, 0.0))
