"""Domain types shared by all modules: points, windows, patterns, grids,
histograms and seeded random streams."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateSpan, EmptyPattern, OutOfSpan, OutOfWindow

_TWO_POW_M53 = 2.0 ** -53


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite coordinate in {self!r}")


@dataclass(frozen=True)
class Window:
    """Axis-aligned rectangle ``[x_min, x_max] x [y_min, y_max]``."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        bounds = (self.x_min, self.x_max, self.y_min, self.y_max)
        if not all(math.isfinite(v) for v in bounds):
            raise ValueError(f"non-finite window bounds {bounds}")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(f"window must have positive width and height, got {bounds}")

    @classmethod
    def from_size(cls, width: float, height: float) -> "Window":
        return cls(0.0, float(width), 0.0, float(height))

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> Point:
        return Point(0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))

    def contains(self, xy) -> np.ndarray:
        """Boolean mask of rows of ``xy`` lying in the closed window."""
        xy = np.atleast_2d(np.asarray(xy, dtype=float))
        return (
            (xy[:, 0] >= self.x_min)
            & (xy[:, 0] <= self.x_max)
            & (xy[:, 1] >= self.y_min)
            & (xy[:, 1] <= self.y_max)
        )

    def contains_window(self, other: "Window") -> bool:
        return (
            self.x_min <= other.x_min
            and other.x_max <= self.x_max
            and self.y_min <= other.y_min
            and other.y_max <= self.y_max
        )

    def transposed(self) -> "Window":
        return Window(self.y_min, self.y_max, self.x_min, self.x_max)


class PointPattern:
    """An ordered set of planar points observed in a rectangular window.

    Coordinates are held as a read-only ``(N, 2)`` float array in ``xy``;
    ``points`` gives the same data as :class:`Point` objects.
    """

    __slots__ = ("_xy", "window")

    def __init__(self, xy, window: Window):
        arr = np.array(xy, dtype=float).reshape(-1, 2)
        if not np.all(np.isfinite(arr)):
            raise ValueError("point coordinates must be finite")
        inside = window.contains(arr) if len(arr) else np.ones(0, dtype=bool)
        if not np.all(inside):
            bad = int(np.flatnonzero(~inside)[0])
            raise OutOfWindow(f"point {bad} at {tuple(arr[bad])} lies outside {window}")
        arr.setflags(write=False)
        self._xy = arr
        self.window = window

    @classmethod
    def from_points(cls, points: Iterable[Point], window: Window) -> "PointPattern":
        return cls([(p.x, p.y) for p in points], window)

    @property
    def xy(self) -> np.ndarray:
        return self._xy

    @property
    def x(self) -> np.ndarray:
        return self._xy[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self._xy[:, 1]

    @property
    def points(self) -> list[Point]:
        return [Point(float(a), float(b)) for a, b in self._xy]

    @property
    def n(self) -> int:
        return len(self._xy)

    def __len__(self) -> int:
        return len(self._xy)

    def intensity(self) -> float:
        """Homogeneous intensity estimate ``n / area``."""
        return self.n / self.window.area()

    def with_window(self, window: Window) -> "PointPattern":
        return PointPattern(self._xy, window)

    def transposed(self) -> "PointPattern":
        return PointPattern(self._xy[:, ::-1], self.window.transposed())

    def translated(self, dx: float, dy: float) -> "PointPattern":
        w = self.window
        return PointPattern(
            self._xy + (dx, dy), Window(w.x_min + dx, w.x_max + dx, w.y_min + dy, w.y_max + dy)
        )

    def scaled(self, s: float) -> "PointPattern":
        w = self.window
        return PointPattern(self._xy * s, Window(w.x_min * s, w.x_max * s, w.y_min * s, w.y_max * s))

    def __repr__(self):
        return f"PointPattern(n={self.n}, window={self.window})"


def merge_patterns(patterns: Sequence[PointPattern]) -> PointPattern:
    """Superpose patterns observed in the same window."""
    window = patterns[0].window
    if any(p.window != window for p in patterns):
        raise ValueError("patterns must share a window to be merged")
    return PointPattern(np.vstack([p.xy for p in patterns]), window)


@dataclass(frozen=True)
class BinGrid:
    """A regular ``m_x`` by ``m_y`` partition of ``span``."""

    m_x: int
    m_y: int
    span: Window

    def __post_init__(self):
        if int(self.m_x) != self.m_x or int(self.m_y) != self.m_y or self.m_x < 1 or self.m_y < 1:
            raise ValueError(f"bin counts must be positive integers, got {self.m_x}x{self.m_y}")

    @property
    def M(self) -> int:
        return self.m_x * self.m_y

    @property
    def a_x(self) -> float:
        return self.span.width / self.m_x

    @property
    def a_y(self) -> float:
        return self.span.height / self.m_y

    @property
    def bin_area(self) -> float:
        return self.a_x * self.a_y


def axis_bins(values: np.ndarray, lo: float, width: float, m: int) -> np.ndarray:
    """Bin index along one axis: half-open cells, the last one closed."""
    idx = np.floor((np.asarray(values, dtype=float) - lo) * (m / width)).astype(np.int64)
    return np.minimum(idx, m - 1)


def bin_cells(grid: BinGrid, xy) -> tuple[np.ndarray, np.ndarray]:
    """Per-point ``(ix, iy)`` cell indices; raises OutOfSpan for stray points."""
    xy = np.atleast_2d(np.asarray(xy, dtype=float))
    inside = grid.span.contains(xy)
    if not np.all(inside):
        bad = int(np.flatnonzero(~inside)[0])
        raise OutOfSpan(f"point {tuple(xy[bad])} lies outside span {grid.span}")
    s = grid.span
    return axis_bins(xy[:, 0], s.x_min, s.width, grid.m_x), axis_bins(xy[:, 1], s.y_min, s.height, grid.m_y)


def bin_index(grid: BinGrid, p: Point) -> int:
    """Flat index ``k = ix * m_y + iy`` of the bin containing ``p``.

    Interior edges belong to the higher-index bin; the maximal edges of the
    span belong to the last bin along that axis.
    """
    ix, iy = bin_cells(grid, [(p.x, p.y)])
    return int(ix[0] * grid.m_y + iy[0])


def bin_counts(grid: BinGrid, xy) -> np.ndarray:
    """Counts per bin as an ``(m_x, m_y)`` integer array."""
    ix, iy = bin_cells(grid, xy)
    flat = np.bincount(ix * grid.m_y + iy, minlength=grid.M)
    return flat.reshape(grid.m_x, grid.m_y)


def data_span(pattern: PointPattern) -> Window:
    """Tight bounding box of the points, the default binning span."""
    if pattern.n < 2:
        raise EmptyPattern(f"need at least 2 points for a data span, got {pattern.n}")
    lo = pattern.xy.min(axis=0)
    hi = pattern.xy.max(axis=0)
    if not (hi[0] > lo[0] and hi[1] > lo[1]):
        raise DegenerateSpan(f"points span a degenerate box {tuple(lo)}-{tuple(hi)}")
    return Window(float(lo[0]), float(hi[0]), float(lo[1]), float(hi[1]))


@dataclass(frozen=True)
class OptimalHistogram:
    """Posterior-mean histogram on a Knuth-optimal grid.

    ``counts``, ``heights_mean`` and ``heights_var`` are ``(m_x, m_y)`` arrays;
    heights are probability densities per unit area.
    """

    grid: BinGrid
    counts: np.ndarray
    heights_mean: np.ndarray
    heights_var: np.ndarray
    log_posterior: float

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    def intensity(self) -> np.ndarray:
        """Estimated intensity per bin (points per unit area)."""
        return self.heights_mean * self.n

    @property
    def binning_diameter(self) -> float:
        return 2.0 * math.sqrt(self.grid.bin_area / math.pi)


@dataclass(frozen=True)
class Histogram1D:
    m: int
    span: tuple[float, float]
    counts: np.ndarray
    heights: np.ndarray

    @property
    def width(self) -> float:
        return (self.span[1] - self.span[0]) / self.m

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(self.span[0], self.span[1], self.m + 1)

    def __call__(self, x) -> np.ndarray:
        """Evaluate the piecewise-constant density; zero outside the span."""
        x = np.asarray(x, dtype=float)
        lo, hi = self.span
        inside = (x >= lo) & (x <= hi)
        idx = axis_bins(np.where(inside, x, lo), lo, hi - lo, self.m)
        return np.where(inside, self.heights[idx], 0.0)


@dataclass
class RandomStream:
    """Seeded random stream with fixed sampling algorithms.

    Raw 64-bit words come from PCG64; every variate is derived from them by
    the methods below, so a seed pins the whole sequence independently of
    numpy's own distribution code.  Uniforms take the top 53 bits, normals
    use Box-Muller, Poisson variates use multiplicative inversion below mean
    30 and Hormann's PTRS rejection above.
    """

    seed: int
    _bitgen: np.random.PCG64 = field(init=False, repr=False)

    def __post_init__(self):
        self.seed = int(self.seed) % 2**64
        self._bitgen = np.random.PCG64(self.seed)

    def spawn(self, i: int) -> "RandomStream":
        """Derived stream ``i`` of an ensemble: seed ``base + i``."""
        return RandomStream(self.seed + int(i))

    def uniform(self, size=None, low: float = 0.0, high: float = 1.0):
        raw = self._bitgen.random_raw(size)
        u = (np.asarray(raw, dtype=np.uint64) >> np.uint64(11)) * _TWO_POW_M53
        if size is None:
            return low + (high - low) * float(u)
        return low + (high - low) * u

    def normal(self, size: int) -> np.ndarray:
        """Standard normal variates by the Box-Muller transform."""
        half = (int(size) + 1) // 2
        u1 = 1.0 - self.uniform(half)
        u2 = self.uniform(half)
        rad = np.sqrt(-2.0 * np.log(u1))
        z = np.concatenate([rad * np.cos(2 * np.pi * u2), rad * np.sin(2 * np.pi * u2)])
        return z[: int(size)]

    def integers(self, high: int, size: int) -> np.ndarray:
        """Uniform integers in ``[0, high)``."""
        return np.minimum((self.uniform(size) * high).astype(np.int64), high - 1)

    def poisson(self, lam: float) -> int:
        if lam < 0 or not math.isfinite(lam):
            raise ValueError(f"Poisson mean must be finite and >= 0, got {lam}")
        if lam == 0:
            return 0
        if lam < 30:
            limit = math.exp(-lam)
            k, prod = 0, self.uniform()
            while prod > limit:
                k += 1
                prod *= self.uniform()
            return k
        return self._poisson_ptrs(lam)

    def _poisson_ptrs(self, lam: float) -> int:
        slam = math.sqrt(lam)
        loglam = math.log(lam)
        b = 0.931 + 2.53 * slam
        a = -0.059 + 0.02483 * b
        invalpha = 1.1239 + 1.1328 / (b - 3.4)
        vr = 0.9277 - 3.6224 / (b - 2)
        while True:
            u = self.uniform() - 0.5
            v = self.uniform()
            us = 0.5 - abs(u)
            k = math.floor((2 * a / us + b) * u + lam + 0.43)
            if us >= 0.07 and v <= vr:
                return k
            if k < 0 or (us < 0.013 and v > us):
                continue
            if math.log(v) + math.log(invalpha) - math.log(a / (us * us) + b) <= (
                -lam + k * loglam - math.lgamma(k + 1)
            ):
                return k

    def poisson_many(self, lam: float, size: int) -> np.ndarray:
        return np.array([self.poisson(lam) for _ in range(int(size))], dtype=np.int64)
