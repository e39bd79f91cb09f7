"""Minimum-contrast fitting of the modified Thomas process and the scalar
indices derived from Knuth grids (anisotropy, difference, equivalent radius).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from .core import OptimalHistogram, PointPattern, RandomStream
from .errors import DegenerateX, FitDiverged
from .generators import FixedN, ThomasParams, gen_thomas
from .secondstats import CurveEstimate, relative_neighbourhood_density, ripley_k

MAX_CLUSTER_DIAMETER = 500.0
MAX_CLUMP_AREA = 1e4


@dataclass(frozen=True)
class ThomasFit:
    rho_hat: float
    sigma_hat: float
    mu_hat: float
    contrast: float
    d_max: float
    n: int = 0
    area: float = 0.0

    @property
    def n_clusters(self) -> int:
        return int(math.floor(self.rho_hat * self.area + 0.5))

    @property
    def cluster_diameter(self) -> float:
        return self.sigma_hat * math.sqrt(2 * math.pi)

    @property
    def clump_area(self) -> float:
        """Mean clump area ``sigma^2 pi / 2``."""
        return self.sigma_hat**2 * math.pi / 2

    def params(self) -> ThomasParams:
        return ThomasParams(self.rho_hat, self.sigma_hat, self.mu_hat)


@dataclass(frozen=True)
class FilterResult:
    accept: bool
    failed: tuple[str, ...] = ()

    @property
    def reason(self) -> str:
        return ";".join(self.failed)


@dataclass(frozen=True)
class SpeciesIndices:
    bin_area: float
    equivalent_radius: float
    binning_diameter: float
    anisotropy: float
    omega: float
    abundance: int
    delta: Optional[float] = None
    delta_tail: Optional[str] = None


def theoretical_k_thomas(rho: float, sigma: float, r_grid) -> CurveEstimate:
    """``K(d) = pi d^2 + (1 - exp(-d^2 / (2 sigma)^2)) / rho``."""
    if not (rho > 0 and sigma > 0):
        raise ValueError("rho and sigma must be positive")
    d = np.asarray(r_grid, dtype=float)
    return CurveEstimate(d, np.pi * d**2 - np.expm1(-(d**2) / (2 * sigma) ** 2) / rho, "K")


def _contrast(k_hat4: np.ndarray, d: np.ndarray, rho: float, sigma: float) -> float:
    k_model = np.pi * d**2 - np.expm1(-(d**2) / (2 * sigma) ** 2) / rho
    return float(np.trapezoid((k_hat4 - k_model**0.25) ** 2, d))


def fit_thomas_curve(k_hat: CurveEstimate, n: int, area: float, d_min_sigma: Optional[float] = None) -> ThomasFit:
    """Fit ``(rho, sigma)`` to an empirical K curve sampled from 0 to ``d_max``.

    The quarter-power contrast is scanned on a 40 x 40 log grid, rho over
    ``[1/A, n/A]`` and sigma over ``[step, d_max/2]``, and then refined by a
    bounded Nelder-Mead search in log coordinates from the best cell.
    """
    d = k_hat.r_grid
    d_max = float(d[-1])
    step = float(d[1] - d[0]) if d_min_sigma is None else d_min_sigma
    k4 = np.maximum(k_hat.values, 0.0) ** 0.25
    log_rho = np.linspace(math.log(1.0 / area), math.log(n / area), 40)
    log_sig = np.linspace(math.log(step), math.log(d_max / 2), 40)
    scan = np.array([[_contrast(k4, d, math.exp(a), math.exp(b)) for b in log_sig] for a in log_rho])
    i, j = np.unravel_index(np.argmin(scan), scan.shape)
    bounds = [(log_rho[0], log_rho[-1]), (log_sig[0], log_sig[-1])]

    def objective(theta):
        return _contrast(k4, d, math.exp(theta[0]), math.exp(theta[1]))

    res = minimize(
        objective,
        x0=[log_rho[i], log_sig[j]],
        method="Nelder-Mead",
        bounds=bounds,
        options={"xatol": 1e-10, "fatol": 1e-16, "maxiter": 5000, "maxfev": 10000},
    )
    rho, sigma = math.exp(res.x[0]), math.exp(res.x[1])
    if not (np.all(np.isfinite(res.x)) and math.isfinite(res.fun)):
        raise FitDiverged(f"minimum-contrast refinement returned {res.x}, {res.fun}")
    if res.fun > scan[i, j]:
        rho, sigma, fun = math.exp(log_rho[i]), math.exp(log_sig[j]), scan[i, j]
    else:
        fun = res.fun
    parents = math.floor(rho * area + 0.5)
    return ThomasFit(
        rho_hat=rho,
        sigma_hat=sigma,
        mu_hat=n / parents if parents else math.inf,
        contrast=float(fun),
        d_max=d_max,
        n=n,
        area=area,
    )


def fit_thomas(pattern: PointPattern, d_max: float = 300.0, grid_step: float = 1.0) -> ThomasFit:
    """Minimum-contrast fit of a modified Thomas process to a pattern's K.

    ``d_max`` is capped at half the shorter window side, where the
    edge-corrected K estimator stays valid.
    """
    if pattern.n < 10:
        raise ValueError(f"fitting needs at least 10 points, got {pattern.n}")
    w = pattern.window
    d_max = min(d_max, 0.5 * min(w.width, w.height))
    d = np.arange(0.0, d_max + 0.5 * grid_step, grid_step)
    d = d[d <= d_max * (1 + 1e-12)]
    k_hat = ripley_k(pattern, d)
    return fit_thomas_curve(k_hat, pattern.n, w.area())


def species_filter(fit: ThomasFit, n: int, a0: float, max_clump_area: Optional[float] = None) -> FilterResult:
    """Keep a species when its fitted clusters are small and fewer than its
    individuals.

    ``"i"``: ``sigma sqrt(2 pi) < 500``; ``"ii"``: ``floor(rho A + 1/2) < n``.
    ``max_clump_area`` adds an optional ``"iii"``: ``sigma^2 pi / 2`` below it.
    """
    failed = []
    if not fit.sigma_hat * math.sqrt(2 * math.pi) < MAX_CLUSTER_DIAMETER:
        failed.append("i")
    if not math.floor(fit.rho_hat * a0 + 0.5) < n:
        failed.append("ii")
    if max_clump_area is not None and not fit.sigma_hat**2 * math.pi / 2 < max_clump_area:
        failed.append("iii")
    return FilterResult(not failed, tuple(failed))


def anisotropy_index(hist: OptimalHistogram) -> float:
    """``|a_y - a_x| / max(a_x, a_y)`` of the grid's bin sides."""
    return anisotropy_from_sides(hist.grid.a_x, hist.grid.a_y)


def anisotropy_from_sides(a_x: float, a_y: float) -> float:
    return abs(a_y - a_x) / max(a_x, a_y)


def difference_index(a_mtp: float, a_real: float) -> float:
    """``a(mTp) - a(real)``: positive when the fitted model looks coarser."""
    if not (a_mtp > 0 and a_real > 0):
        raise ValueError("bin areas must be positive")
    return a_mtp - a_real


def delta_tail(a_mtp: float, a_real: float) -> str:
    """``right``/``left`` when ``|delta|`` exceeds twice the smaller area,
    ``centre`` otherwise."""
    delta = difference_index(a_mtp, a_real)
    if abs(delta) > 2 * min(a_mtp, a_real):
        return "right" if delta > 0 else "left"
    return "centre"


def linear_regression(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float, float]:
    """Ordinary least squares; returns ``(slope, intercept, r_squared)``."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or len(x) < 3:
        raise ValueError("need at least 3 paired observations")
    dx = x - x.mean()
    sxx = (dx * dx).sum()
    if sxx == 0:
        raise DegenerateX("all x values are equal")
    slope = (dx * (y - y.mean())).sum() / sxx
    intercept = y.mean() - slope * x.mean()
    ss_res = ((y - slope * x - intercept) ** 2).sum()
    ss_tot = ((y - y.mean()) ** 2).sum()
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), float(r2)


def mtp_counterpart(pattern: PointPattern, fit: ThomasFit, rng: RandomStream) -> PointPattern:
    """A fixed-abundance mTp realization with the fitted parameters."""
    return gen_thomas(pattern.window, fit.params(), FixedN(pattern.n), rng)


def species_indices(
    pattern: PointPattern,
    hist: OptimalHistogram,
    omega_radius: float = 10.0,
    a_mtp: Optional[float] = None,
) -> SpeciesIndices:
    a = hist.grid.bin_area
    delta = tail = None
    if a_mtp is not None:
        delta = difference_index(a_mtp, a)
        tail = delta_tail(a_mtp, a)
    return SpeciesIndices(
        bin_area=a,
        equivalent_radius=math.sqrt(a / math.pi),
        binning_diameter=2 * math.sqrt(a / math.pi),
        anisotropy=anisotropy_index(hist),
        omega=relative_neighbourhood_density(pattern, omega_radius),
        abundance=pattern.n,
        delta=delta,
        delta_tail=tail,
    )
