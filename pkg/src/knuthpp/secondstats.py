"""Second-order summaries of a point pattern in a rectangular window.

Ripley's K uses the isotropic (arc-fraction) edge correction; the pair
correlation function is a kernel-smoothed ring estimator with the same
weights.  Monte Carlo envelopes come from binomial CSR simulations with the
observed point count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .core import PointPattern, RandomStream, Window
from .errors import GridTooShort, InsufficientSims, NegativeK, RangeTooLarge
from .generators import gen_binomial

KINDS = ("K", "L", "g", "K2", "Omega")


@dataclass(frozen=True)
class CurveEstimate:
    r_grid: np.ndarray
    values: np.ndarray
    statistic_kind: str

    def __post_init__(self):
        r = np.asarray(self.r_grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if r.shape != v.shape or r.ndim != 1:
            raise ValueError("r_grid and values must be 1-D arrays of equal length")
        if len(r) and (r[0] < 0 or np.any(np.diff(r) <= 0)):
            raise ValueError("r_grid must be non-negative and strictly increasing")
        if self.statistic_kind not in KINDS:
            raise ValueError(f"unknown statistic {self.statistic_kind!r}")
        object.__setattr__(self, "r_grid", r)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class EnvelopeBand:
    r_grid: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    theory: np.ndarray
    n_sims: int
    level: float
    statistic_kind: str = "K"

    def contains(self, values) -> np.ndarray:
        values = np.asarray(values)
        return (values >= self.lower) & (values <= self.upper)


def edge_weights(xy_i: np.ndarray, dist: np.ndarray, window: Window) -> np.ndarray:
    """Fraction of the circle centred at each ``xy_i`` with radius ``dist``
    that lies inside ``window``.

    Each window side closer than the radius cuts an arc of half-angle
    ``acos(e / r)``; arcs of adjacent sides overlap by the excess over a
    right angle when the shared corner lies inside the circle.
    """
    xy_i = np.atleast_2d(xy_i)
    r = np.asarray(dist, dtype=float)
    e = np.stack(
        [
            xy_i[:, 0] - window.x_min,
            xy_i[:, 1] - window.y_min,
            window.x_max - xy_i[:, 0],
            window.y_max - xy_i[:, 1],
        ]
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(r > 0, e / np.where(r > 0, r, 1.0), 1.0)
    alpha = np.arccos(np.clip(ratio, 0.0, 1.0))
    outside = 2.0 * alpha.sum(axis=0)
    for a, b in ((0, 1), (1, 2), (2, 3), (3, 0)):
        outside -= np.maximum(alpha[a] + alpha[b] - np.pi / 2, 0.0)
    return 1.0 - outside / (2.0 * np.pi)


def _check_range(window: Window, r_max: float) -> None:
    bound = 0.5 * min(window.width, window.height)
    if r_max > bound * (1 + 1e-12):
        raise RangeTooLarge(f"r = {r_max:.6g} exceeds half the shorter window side ({bound:.6g})")


def close_pairs(pattern: PointPattern, r_max: float):
    """Ordered pairs ``(i, j)``, ``i != j``, at distance ``<= r_max``, with
    their distances and edge weights ``w(s_i, s_j)``."""
    xy = pattern.xy
    tree = cKDTree(xy)
    pairs = tree.query_pairs(r_max, output_type="ndarray")
    if len(pairs) == 0:
        empty = np.zeros(0)
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), empty, empty
    i = np.concatenate([pairs[:, 0], pairs[:, 1]])
    j = np.concatenate([pairs[:, 1], pairs[:, 0]])
    d = np.hypot(*(xy[i] - xy[j]).T)
    w = edge_weights(xy[i], d, pattern.window)
    return i, j, d, w


def default_r_grid(pattern: PointPattern, n_points: int = 512, start: Optional[float] = None) -> np.ndarray:
    """Grid from the default smoothing bandwidth to half the shorter side."""
    start = default_pcf_bandwidth(pattern) if start is None else start
    stop = 0.5 * min(pattern.window.width, pattern.window.height)
    return np.linspace(start, stop, n_points)


def ripley_k(pattern: PointPattern, r_grid: Sequence[float]) -> CurveEstimate:
    """Edge-corrected K: ``A / n^2 * sum_{i != j} 1(d_ij <= r) / w_ij``."""
    r = np.asarray(r_grid, dtype=float)
    n = pattern.n
    if n < 2:
        raise ValueError("Ripley's K needs at least 2 points")
    _check_range(pattern.window, r.max())
    _, _, d, w = close_pairs(pattern, r.max())
    order = np.argsort(d, kind="stable")
    cum = np.concatenate([[0.0], np.cumsum(1.0 / w[order])])
    k = cum[np.searchsorted(d[order], r, side="right")]
    return CurveEstimate(r, pattern.window.area() / n**2 * k, "K")


def l_function(k: CurveEstimate) -> CurveEstimate:
    if k.statistic_kind != "K":
        raise ValueError("L is derived from a K curve")
    if np.any(k.values < 0):
        raise NegativeK("K estimate has negative values")
    return CurveEstimate(k.r_grid, np.sqrt(k.values / np.pi) - k.r_grid, "L")


def epanechnikov_1d(u, half_width: float) -> np.ndarray:
    """Unit-mass Epanechnikov kernel supported on ``[-half_width, half_width]``."""
    t = np.asarray(u, dtype=float) / half_width
    return np.where(np.abs(t) <= 1, 0.75 * (1 - t * t) / half_width, 0.0)


def default_pcf_bandwidth(pattern: PointPattern) -> float:
    return 0.15 / math.sqrt(pattern.intensity())


def pair_correlation(
    pattern: PointPattern, r_grid: Sequence[float], smoothing_bandwidth: Optional[float] = None
) -> CurveEstimate:
    """Kernel estimate of g: ``sum_{i != j} k_b(r - d_ij) / (2 pi r w_ij lambda n)``."""
    b = default_pcf_bandwidth(pattern) if smoothing_bandwidth is None else float(smoothing_bandwidth)
    r = np.asarray(r_grid, dtype=float)
    n = pattern.n
    if n < 2:
        raise ValueError("pair correlation needs at least 2 points")
    if not b > 0:
        raise ValueError("smoothing bandwidth must be positive")
    if r[0] < b * (1 - 1e-12):
        raise ValueError(f"r_grid must start at or above the bandwidth {b:.6g}")
    _check_range(pattern.window, r.max())
    _, _, d, w = close_pairs(pattern, r.max() + b)
    order = np.argsort(d, kind="stable")
    d, inv_w = d[order], 1.0 / w[order]
    lo = np.searchsorted(d, r - b, side="left")
    hi = np.searchsorted(d, r + b, side="right")
    g = np.empty_like(r)
    for k, (a, z) in enumerate(zip(lo, hi)):
        g[k] = (epanechnikov_1d(r[k] - d[a:z], b) * inv_w[a:z]).sum()
    g *= pattern.window.area() / (2 * np.pi * r * n * n)
    return CurveEstimate(r, g, "g")


def k2_index(g: CurveEstimate, smoothing_bandwidth: Optional[float] = None) -> CurveEstimate:
    """Derivative of g by windowed least-squares slopes.

    The window spans ``smoothing_bandwidth`` on each side of a grid point
    (default two grid steps, a 5-point window); only interior points with a
    full window are returned.
    """
    r, v = g.r_grid, g.values
    if len(r) < 5:
        raise GridTooShort(f"need at least 5 grid points, got {len(r)}")
    if smoothing_bandwidth is None:
        smoothing_bandwidth = 2 * float(np.median(np.diff(r)))
    h = float(smoothing_bandwidth)
    # slack absorbs rounding in grids built by linspace/arange
    lo = np.searchsorted(r, r - h * (1 + 1e-9), side="left")
    hi = np.searchsorted(r, r + h * (1 + 1e-9), side="right")
    full = (r - r[0] >= h * (1 - 1e-9)) & (r[-1] - r >= h * (1 - 1e-9))
    idx = np.flatnonzero(full & (hi - lo >= 3))
    if len(idx) == 0:
        raise GridTooShort("bandwidth leaves no interior grid points")
    slopes = np.empty(len(idx))
    for out, k in enumerate(idx):
        rr = r[lo[k] : hi[k]]
        vv = v[lo[k] : hi[k]]
        dr = rr - rr.mean()
        slopes[out] = (dr * (vv - vv.mean())).sum() / (dr * dr).sum()
    return CurveEstimate(r[idx], slopes, "K2")


def crossing_scale(curve: CurveEstimate, level: float = 1.0) -> Optional[float]:
    """First distance where the curve passes through ``level``.

    Crossings are located by linear interpolation; touching the level without
    changing side does not count.
    """
    r, d = curve.r_grid, curve.values - level
    if len(r) < 2:
        raise ValueError("need at least 2 grid points")
    nz = np.flatnonzero(d != 0)
    for a, b in zip(nz[:-1], nz[1:]):
        if np.sign(d[a]) != np.sign(d[b]):
            if b == a + 1:
                return float(r[a] + (r[b] - r[a]) * d[a] / (d[a] - d[b]))
            return float(r[a + 1])
    return None


def csr_theory(kind: str, r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if kind == "K":
        return np.pi * r**2
    if kind in ("L", "K2"):
        return np.zeros_like(r)
    if kind == "g":
        return np.ones_like(r)
    raise ValueError(f"no CSR envelope for statistic {kind!r}")


def compute_statistic(
    pattern: PointPattern, kind: str, r_grid, smoothing_bandwidth: Optional[float] = None,
    k2_bandwidth: Optional[float] = None,
) -> CurveEstimate:
    """Evaluate K, L, g or K2 of a pattern on ``r_grid``."""
    if kind == "K":
        return ripley_k(pattern, r_grid)
    if kind == "L":
        return l_function(ripley_k(pattern, r_grid))
    if kind == "g":
        return pair_correlation(pattern, r_grid, smoothing_bandwidth)
    if kind == "K2":
        return k2_index(pair_correlation(pattern, r_grid, smoothing_bandwidth), k2_bandwidth)
    raise ValueError(f"unknown statistic {kind!r}")


def envelope_rank(n_sims: int, level: float) -> int:
    """Order statistic used for a pointwise envelope at ``level``."""
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    k = int(math.floor((1 - level) * (n_sims + 1) / 2 + 1e-9))
    if k < 1:
        raise InsufficientSims(
            f"{n_sims} simulations cannot support level {level}; need >= {math.ceil(2 / (1 - level) - 1)}"
        )
    return k


def csr_envelope(
    pattern: PointPattern,
    statistic: str,
    r_grid,
    n_sims: int = 199,
    level: float = 0.99,
    rng: Optional[RandomStream] = None,
    smoothing_bandwidth: Optional[float] = None,
    k2_bandwidth: Optional[float] = None,
) -> EnvelopeBand:
    """Pointwise rank envelope of ``statistic`` under CSR with the same
    count and window; simulation ``i`` uses stream ``rng.seed + i``."""
    k = envelope_rank(n_sims, level)
    rng = RandomStream(0) if rng is None else rng
    if smoothing_bandwidth is None and statistic in ("g", "K2"):
        smoothing_bandwidth = default_pcf_bandwidth(pattern)
    sims = []
    r_out = None
    for i in range(n_sims):
        sim = gen_binomial(pattern.window, pattern.n, rng.spawn(i))
        curve = compute_statistic(sim, statistic, r_grid, smoothing_bandwidth, k2_bandwidth)
        r_out = curve.r_grid
        sims.append(curve.values)
    sims = np.sort(np.array(sims), axis=0)
    return EnvelopeBand(
        r_grid=r_out,
        lower=sims[k - 1],
        upper=sims[n_sims - k],
        theory=csr_theory(statistic, r_out),
        n_sims=n_sims,
        level=level,
        statistic_kind=statistic,
    )


def relative_neighbourhood_density(pattern: PointPattern, radius: float = 10.0) -> float:
    """Edge-corrected neighbour density within ``radius`` relative to the
    mean intensity: ``K(radius) / (pi radius^2)``."""
    if not radius > 0:
        raise ValueError("radius must be positive")
    k = ripley_k(pattern, [radius]).values[0]
    return float(k / (np.pi * radius**2))
