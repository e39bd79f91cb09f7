"""Seeded simulators for the point processes used in the experiments.

Every generator draws only from the :class:`~knuthpp.core.RandomStream` it
is handed, so a seed fixes the output bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .core import Point, PointPattern, RandomStream, Window
from .errors import NoParents, OutOfWindow, PackingFailure, ShapeExceedsWindow, ThinningBound

POISSON_OFFSPRING = "poisson-offspring"


@dataclass(frozen=True)
class ThomasParams:
    rho: float
    sigma: float
    mu: float

    def __post_init__(self):
        if not (self.rho > 0 and self.sigma >= 0 and self.mu > 0):
            raise ValueError(f"invalid Thomas parameters {self}")


@dataclass(frozen=True)
class FixedN:
    """Condition a cluster process on exactly ``n`` offspring."""

    n: int


@dataclass(frozen=True)
class ClusterShape:
    kind: str
    size: float
    center: Point
    rotation: float = 0.0
    axis_ratio: float = 1.0

    KINDS = ("square-uniform", "disk-uniform", "gaussian")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown cluster kind {self.kind!r}")
        if not self.size > 0:
            raise ValueError("cluster size must be positive")
        if not 0 <= self.rotation < 360:
            raise ValueError("rotation must lie in [0, 360)")
        if self.axis_ratio < 1:
            raise ValueError("axis_ratio must be >= 1")


def uniform_points(window: Window, n: int, rng: RandomStream) -> np.ndarray:
    u = rng.uniform((int(n), 2))
    return np.column_stack(
        [window.x_min + window.width * u[:, 0], window.y_min + window.height * u[:, 1]]
    )


def gen_binomial(window: Window, n: int, rng: RandomStream) -> PointPattern:
    """Exactly ``n`` i.i.d. uniform points (CSR conditioned on its count)."""
    return PointPattern(uniform_points(window, n, rng), window)


def gen_csr(window: Window, lam: float, rng: RandomStream) -> PointPattern:
    if not lam > 0:
        raise ValueError("intensity must be positive")
    n = rng.poisson(lam * window.area())
    return gen_binomial(window, n, rng)


def gen_inhomogeneous_poisson(
    window: Window,
    lambda_fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
    lambda_max: float,
    rng: RandomStream,
) -> PointPattern:
    """Thinned CSR: ``lambda_fn(x, y)`` is evaluated on coordinate arrays."""
    base = gen_csr(window, lambda_max, rng)
    lam = np.asarray(lambda_fn(base.x, base.y), dtype=float) * np.ones(base.n)
    if np.any(lam > lambda_max) or np.any(lam < 0):
        raise ThinningBound(f"intensity outside [0, {lambda_max}] at a sampled point")
    keep = rng.uniform(base.n) * lambda_max < lam
    return PointPattern(base.xy[keep], window)


def linear_gradient(window: Window, lam_low: float, lam_high: float, axis: str = "y"):
    """Intensity rising linearly from ``lam_low`` to ``lam_high`` along an axis."""
    k = 1 if axis == "y" else 0
    lo = window.y_min if k else window.x_min
    extent = window.height if k else window.width

    def fn(x, y):
        t = ((y if k else x) - lo) / extent
        return lam_low + (lam_high - lam_low) * t

    return fn


def wrap_torus(xy: np.ndarray, window: Window) -> np.ndarray:
    """Fold coordinates back into the window with periodic boundaries."""
    out = np.empty_like(xy)
    out[:, 0] = window.x_min + np.mod(xy[:, 0] - window.x_min, window.width)
    out[:, 1] = window.y_min + np.mod(xy[:, 1] - window.y_min, window.height)
    # mod can round up to exactly the width for tiny negative inputs
    out[:, 0] = np.minimum(out[:, 0], window.x_max)
    out[:, 1] = np.minimum(out[:, 1], window.y_max)
    return out


def _parents_and_labels(window, rho, mu, mode, rng, parents):
    """Parent locations plus, per offspring, the index of its parent."""
    a0 = window.area()
    if isinstance(mode, FixedN):
        if mode.n < 1:
            raise ValueError("fixed-N mode needs n >= 1")
        if parents is None:
            n_par = int(math.floor(rho * a0 + 0.5))
            if n_par == 0:
                raise NoParents(f"rho * area = {rho * a0:.3g} rounds to zero parents")
            parents = uniform_points(window, n_par, rng)
        labels = rng.integers(len(parents), mode.n)
        return parents, labels
    if mode != POISSON_OFFSPRING:
        raise ValueError(f"unknown mode {mode!r}")
    if parents is None:
        parents = uniform_points(window, rng.poisson(rho * a0), rng)
    sizes = rng.poisson_many(mu, len(parents))
    return parents, np.repeat(np.arange(len(parents)), sizes)


def gen_thomas(
    window: Window,
    params: ThomasParams,
    mode: Union[str, FixedN] = POISSON_OFFSPRING,
    rng: Optional[RandomStream] = None,
    parents: Optional[np.ndarray] = None,
) -> PointPattern:
    """Modified Thomas process with toroidal wrapping of offspring.

    ``mode`` is ``"poisson-offspring"`` (Poisson(rho A) parents, Poisson(mu)
    offspring each) or ``FixedN(n)`` (``floor(rho A + 1/2)`` parents sharing
    exactly ``n`` offspring uniformly at random).  ``parents`` pins the
    parent locations instead of drawing them.
    """
    parents, labels = _parents_and_labels(window, params.rho, params.mu, mode, rng, parents)
    offsets = params.sigma * rng.normal(2 * len(labels)).reshape(2, -1).T
    xy = np.asarray(parents, dtype=float).reshape(-1, 2)[labels] + offsets
    return PointPattern(wrap_torus(xy, window), window)


def _uniform_disk(n: int, radius: float, rng: RandomStream) -> np.ndarray:
    r = radius * np.sqrt(rng.uniform(n))
    t = 2 * np.pi * rng.uniform(n)
    return np.column_stack([r * np.cos(t), r * np.sin(t)])


def gen_matern(
    window: Window,
    rho: float,
    disk_radius: float,
    mu: float,
    rng: RandomStream,
    mode: Union[str, FixedN] = POISSON_OFFSPRING,
    parents: Optional[np.ndarray] = None,
) -> PointPattern:
    """Matern cluster process: offspring uniform on a disk around each parent."""
    if not (rho > 0 and disk_radius > 0 and mu > 0):
        raise ValueError("rho, disk_radius and mu must be positive")
    parents, labels = _parents_and_labels(window, rho, mu, mode, rng, parents)
    xy = np.asarray(parents, dtype=float).reshape(-1, 2)[labels] + _uniform_disk(len(labels), disk_radius, rng)
    return PointPattern(wrap_torus(xy, window), window)


def gen_hardcore(
    window: Window,
    n_target: int,
    hardcore_radius: float,
    rng: RandomStream,
    max_attempts: int = 10**6,
) -> PointPattern:
    """Simple sequential inhibition: uniform proposals closer than the radius
    to an accepted point are rejected."""
    if n_target < 1 or hardcore_radius < 0:
        raise ValueError("need n_target >= 1 and hardcore_radius >= 0")
    pts = np.empty((n_target, 2))
    r2 = hardcore_radius**2
    placed = 0
    rejected = 0
    while placed < n_target:
        p = uniform_points(window, 1, rng)[0]
        d2 = ((pts[:placed] - p) ** 2).sum(axis=1)
        if placed and d2.min() < r2:
            rejected += 1
            if rejected >= max_attempts:
                raise PackingFailure(
                    f"{max_attempts} consecutive rejections after placing {placed} points"
                )
            continue
        pts[placed] = p
        placed += 1
        rejected = 0
    return PointPattern(pts, window)


def _rotation(angle_deg: float) -> np.ndarray:
    t = math.radians(angle_deg)
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, -s], [s, c]])


def _shape_extent(shape: ClusterShape) -> tuple[float, float]:
    """Half-extents along x and y of the shape's support after rotation."""
    sx, sy = shape.axis_ratio * shape.size, shape.size
    t = math.radians(shape.rotation)
    c, s = abs(math.cos(t)), abs(math.sin(t))
    if shape.kind == "square-uniform":
        hx, hy = sx / 2, sy / 2
        return hx * c + hy * s, hx * s + hy * c
    # rotated ellipse bounding box
    return math.hypot(sx * c, sy * s), math.hypot(sx * s, sy * c)


def gen_shaped_cluster(window: Window, shape: ClusterShape, n: int, rng: RandomStream) -> PointPattern:
    """``n`` points from a single cluster of the given shape.

    ``size`` is the side (square), radius (disk) or standard deviation
    (gaussian) along y; the x extent is ``axis_ratio`` times larger before
    rotation.  Gaussian draws outside the window are redrawn.
    """
    sx, sy = shape.axis_ratio * shape.size, shape.size
    rot = _rotation(shape.rotation)
    cx, cy = shape.center.x, shape.center.y
    if shape.kind != "gaussian":
        hx, hy = _shape_extent(shape)
        if cx - hx < window.x_min or cx + hx > window.x_max or cy - hy < window.y_min or cy + hy > window.y_max:
            raise ShapeExceedsWindow(f"{shape} does not fit in {window}")

    def draw(k):
        if shape.kind == "square-uniform":
            local = (rng.uniform((k, 2)) - 0.5) * (sx, sy)
        elif shape.kind == "disk-uniform":
            local = _uniform_disk(k, 1.0, rng) * (sx, sy)
        else:
            local = rng.normal(2 * k).reshape(2, -1).T * (sx, sy)
        return local @ rot.T + (cx, cy)

    xy = draw(n)
    for _ in range(1000):
        bad = ~window.contains(xy)
        if not bad.any():
            break
        xy[bad] = draw(int(bad.sum()))
    else:
        raise ShapeExceedsWindow(f"could not place {shape} inside {window}")
    return PointPattern(xy, window)


def rotate_pattern(pattern: PointPattern, angle_deg: float, pivot: Point) -> PointPattern:
    rot = _rotation(angle_deg)
    centre = np.array([pivot.x, pivot.y])
    xy = (pattern.xy - centre) @ rot.T + centre
    if not np.all(pattern.window.contains(xy)):
        raise OutOfWindow(f"rotation by {angle_deg} deg moves points outside {pattern.window}")
    return PointPattern(xy, pattern.window)


def extend_window_below(pattern: PointPattern, depth: Optional[float] = None) -> PointPattern:
    """Same points in a window enlarged by an empty box appended at the bottom."""
    w = pattern.window
    depth = w.height if depth is None else depth
    return pattern.with_window(Window(w.x_min, w.x_max, w.y_min - depth, w.y_max))


def ensemble_streams(base_seed: int, count: int) -> Sequence[RandomStream]:
    root = RandomStream(base_seed)
    return [root.spawn(i) for i in range(count)]


def synthetic_census(window: Window, n_species: int, seed: int) -> dict[str, PointPattern]:
    """A mixed-process multi-species census for end-to-end pipeline runs.

    Species ``sp000``, ``sp001``, ... cycle through CSR, fixed-N Thomas,
    Matern, hard-core and a y-gradient; abundances are log-uniform on
    ``[10, 4000]`` so that some fall outside the usual 20-3000 filter.
    Species ``i`` is drawn from stream ``seed + i``.
    """
    root = RandomStream(seed)
    a0 = window.area()
    out = {}
    for i in range(n_species):
        rng = root.spawn(i)
        n = int(round(math.exp(math.log(10) + rng.uniform() * math.log(400))))
        kind = i % 5
        if kind == 0:
            pat = gen_binomial(window, n, rng)
        elif kind == 1:
            rho = (2 + rng.integers(20, 1)[0]) / a0
            pat = gen_thomas(window, ThomasParams(rho, 5 + 30 * rng.uniform(), 1.0), FixedN(n), rng)
        elif kind == 2:
            rho = (2 + rng.integers(20, 1)[0]) / a0
            pat = gen_matern(window, rho, 10 + 40 * rng.uniform(), 1.0, rng, FixedN(n))
        elif kind == 3:
            radius = min(5.0, 0.5 * math.sqrt(a0 / n))
            pat = gen_hardcore(window, n, radius, rng)
        else:
            lam_hi = 1.6 * n / a0
            fn = linear_gradient(window, lam_hi / 4, lam_hi, "y")
            pat = gen_inhomogeneous_poisson(window, fn, lam_hi, rng)
        out[f"sp{i:03d}"] = pat
    return out
