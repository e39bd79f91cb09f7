import math

import numpy as np
import pytest

from knuthpp.core import PointPattern, RandomStream, Window
from knuthpp.errors import EmptyPattern
from knuthpp.generators import gen_binomial
from knuthpp.kernel import default_bandwidth, epanechnikov_intensity, histogram_raster
from knuthpp.knuth import optimal_binning


def test_peak_value_and_support():
    w = Window(0, 100, 0, 100)
    # 101 x 101 raster puts a cell centre exactly on (50, 50)
    p = PointPattern([(50.0, 50.0)], Window(-0.5, 100.5, -0.5, 100.5))
    ras = epanechnikov_intensity(p, 10.0, 101, 101)
    xs, ys = ras.centers()
    i, j = int(np.argmin(np.abs(xs - 50))), int(np.argmin(np.abs(ys - 50)))
    assert ras.values[i, j] == pytest.approx(2 / (math.pi * 100))
    d = np.hypot(xs[:, None] - 50, ys[None, :] - 50)
    assert np.all(ras.values[d > 10] == 0)
    assert np.all(ras.values >= 0)
    assert w.area() > 0


def test_unit_mass_interior_point():
    p = PointPattern([(43.3, 57.9)], Window(0, 100, 0, 100))
    ras = epanechnikov_intensity(p, 8.0, 400, 400)
    assert ras.total_mass() == pytest.approx(1.0, abs=0.01)


def test_unit_mass_against_fine_quadrature():
    # the same kernel integrated on a much finer raster converges to exactly 1
    p = PointPattern([(20.0, 20.0)], Window(0, 40, 0, 40))
    coarse = epanechnikov_intensity(p, 5.0, 80, 80).total_mass()
    fine = epanechnikov_intensity(p, 5.0, 1600, 1600).total_mass()
    assert fine == pytest.approx(1.0, abs=1e-4)
    assert coarse == pytest.approx(fine, abs=0.01)


def test_mass_conservation_many_points():
    w = Window(0, 500, 0, 250)
    p = gen_binomial(w, 300, RandomStream(4))
    ras = epanechnikov_intensity(p, 5.0)
    assert ras.total_mass() == pytest.approx(300, rel=0.05)


def test_default_bandwidth():
    w = Window(0, 500, 0, 500)
    p = gen_binomial(w, 500, RandomStream(1))
    assert default_bandwidth(p) == pytest.approx(4.5 * math.sqrt(500))
    assert default_bandwidth(gen_binomial(Window(0, 10, 0, 10), 100, RandomStream(1))) == pytest.approx(4.5)
    wide = p.with_window(Window(0, 1000, 0, 500))
    assert default_bandwidth(wide) == pytest.approx(default_bandwidth(p) * math.sqrt(2))
    with pytest.raises(EmptyPattern):
        default_bandwidth(PointPattern(np.zeros((0, 2)), w))


def test_invalid_params():
    p = PointPattern([(1, 1)], Window(0, 2, 0, 2))
    with pytest.raises(ValueError):
        epanechnikov_intensity(p, 0.0)
    with pytest.raises(ValueError):
        epanechnikov_intensity(p, 1.0, 1, 5)


def test_kernel_noisier_than_knuth_on_csr():
    w = Window(0, 500, 0, 500)
    wins = 0
    for s in range(20):
        p = gen_binomial(w, 500, RandomStream(300 + s))
        hist, _ = optimal_binning(p)
        knuth = histogram_raster(hist, hist.grid.span, 64, 64)
        kern = epanechnikov_intensity(p, default_bandwidth(p), 64, 64)
        wins += knuth.coefficient_of_variation() <= kern.coefficient_of_variation()
    assert wins >= 18


def test_histogram_raster_constant_for_single_bin():
    w = Window(0, 10, 0, 10)
    p = PointPattern([(0, 0), (10, 10), (3, 7)], w)
    hist, _ = optimal_binning(p)
    ras = histogram_raster(hist, w, 8, 8)
    assert hist.grid.M == 1
    assert np.allclose(ras.values, 3 / 100)
