"""Stone's cross-validation bin rule and histogram-to-density distances."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import Histogram1D, RandomStream, axis_bins
from .errors import BadNorm, DegenerateSpan, EmptyPattern
from .knuth import histogram_1d, optimal_binning_1d


@dataclass(frozen=True)
class StoneScore:
    m: int
    k_value: float


def stone_score(samples, m: int) -> StoneScore:
    """``(2/N - sum_k pi_k^2) / v`` for ``m`` bins starting at the minimum."""
    x = np.asarray(samples, dtype=float)
    lo, hi = x.min(), x.max()
    counts = np.bincount(axis_bins(x, lo, hi - lo, m), minlength=m)
    mass = counts / len(x)
    v = (hi - lo) / m
    return StoneScore(m, float((2.0 / len(x) - (mass**2).sum()) / v))


def stone_optimal_bins(samples, c: int = 100) -> tuple[int, list[StoneScore]]:
    """Bin count in ``[1, c]`` minimizing Stone's criterion (ties to fewer bins)."""
    x = np.asarray(samples, dtype=float)
    if len(x) < 2:
        raise EmptyPattern(f"need at least 2 samples, got {len(x)}")
    if not x.max() > x.min():
        raise DegenerateSpan("all samples are equal")
    scores = [stone_score(x, m) for m in range(1, c + 1)]
    best = min(scores, key=lambda s: (s.k_value, s.m))
    return best.m, scores


def histogram_density_distance(
    hist: Histogram1D, true_pdf: Callable[[np.ndarray], np.ndarray], p: int = 2, quadrature_step: float = 1e-3
) -> float:
    """L^p distance between a histogram and a density over the histogram span,
    by midpoint quadrature."""
    if p not in (1, 2):
        raise ValueError("p must be 1 or 2")
    if not quadrature_step > 0:
        raise ValueError("quadrature_step must be positive")
    mass = float(hist.heights.sum() * hist.width)
    if abs(mass - 1.0) > 1e-6:
        raise BadNorm(f"histogram integrates to {mass}, not 1")
    lo, hi = hist.span
    nodes = max(1, int(np.ceil((hi - lo) / quadrature_step - 1e-9)))
    step = (hi - lo) / nodes
    x = lo + (np.arange(nodes) + 0.5) * step
    diff = np.abs(hist(x) - np.asarray(true_pdf(x), dtype=float))
    return float((np.sum(diff**p) * step) ** (1.0 / p))


def standard_normal_pdf(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / np.sqrt(2 * np.pi)


@dataclass(frozen=True)
class BinningComparison:
    dataset: int
    knuth_m: int
    stone_m: int
    knuth_l1: float
    knuth_l2: float
    stone_l1: float
    stone_l2: float


def compare_on_sample(samples, true_pdf, dataset: int = 0, c: int = 100, quadrature_step: float = 1e-3) -> BinningComparison:
    """Knuth (posterior-mean heights) against Stone (relative frequencies)
    on one sample, both over the sample range."""
    knuth_hist, m_knuth, _ = optimal_binning_1d(samples, c)
    m_stone, _ = stone_optimal_bins(samples, c)
    stone_hist = histogram_1d(samples, m_stone, posterior_mean=False)
    return BinningComparison(
        dataset,
        m_knuth,
        m_stone,
        histogram_density_distance(knuth_hist, true_pdf, 1, quadrature_step),
        histogram_density_distance(knuth_hist, true_pdf, 2, quadrature_step),
        histogram_density_distance(stone_hist, true_pdf, 1, quadrature_step),
        histogram_density_distance(stone_hist, true_pdf, 2, quadrature_step),
    )


def gaussian_comparison_study(
    n_datasets: int = 50, n: int = 1000, seed: int = 0, c: int = 100, quadrature_step: float = 1e-3
) -> list[BinningComparison]:
    """Repeat the comparison on standard-normal samples; dataset ``i`` is
    drawn from stream ``seed + i``."""
    root = RandomStream(seed)
    return [
        compare_on_sample(root.spawn(i).normal(n), standard_normal_pdf, i, c, quadrature_step)
        for i in range(n_datasets)
    ]
