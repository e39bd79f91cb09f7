"""One check per acceptance criterion.

Criterion ``k`` draws its realizations from streams starting at
``k * 100000``; the bases were fixed before any of these runs.
"""

import csv
import json
import math
import time

import numpy as np
import pytest
from oracles import arc_fraction_oracle, brute_force_k, mp_log_posterior

from knuthpp.core import BinGrid, PointPattern, RandomStream, Window
from knuthpp.experiments import (
    W500,
    anisotropic_gaussian_study,
    cluster_regression,
    csr_stability,
    gradient_study,
    hardcore_study,
    isotropic_mtp_anisotropy,
    knuth_1d_study,
    mtp_clump_study,
    mtp_fit_study,
    mtp_pattern,
    virtual_aggregation,
)
from knuthpp.fitting import fit_thomas_curve, theoretical_k_thomas
from knuthpp.generators import synthetic_census
from knuthpp.io import parse_config_text, sha256_file, write_census_csv
from knuthpp.knuth import log_posterior
from knuthpp.pipeline import EXIT_PARTIAL, run_pipeline
from knuthpp.secondstats import ripley_k
from knuthpp.stone import gaussian_comparison_study


def base(criterion):
    return criterion * 100000


def test_criterion_01_posterior_oracle(report):
    rng = RandomStream(base(1))
    unit = Window(0.0, 1.0, 0.0, 1.0)
    cases = []
    for t in range(50):
        n = 1 + t % 8
        p = PointPattern(rng.uniform((n, 2)), unit)
        cases += [(p, BinGrid(mx, my, unit)) for mx in range(1, 5) for my in range(1, 5)]
    start = time.perf_counter()
    got = [log_posterior(p, g) for p, g in cases]
    elapsed = time.perf_counter() - start
    err = max(abs(v - mp_log_posterior(p.xy, g)) for v, (p, g) in zip(got, cases))
    report(1, err <= 1e-10 and elapsed < 1.0, f"max |error| {err:.2e} over {len(cases)} evaluations in {elapsed:.3f} s")


def test_criterion_02_csr_stability(report):
    start = time.perf_counter()
    grids = csr_stability(200, 1000, base(2))
    elapsed = time.perf_counter() - start
    frac = sum(g == (1, 1) for g in grids) / len(grids)
    report(2, frac >= 0.9 and elapsed < 60, f"1x1 in {frac:.1%} of 200 CSR samples ({elapsed:.1f} s)")


def test_criterion_03_knuth_1d(report):
    res = knuth_1d_study(100, 1000, base(3))
    u = np.mean(np.array(res["uniform"]) == 1)
    s = np.mean(np.array(res["four-step"]) == 4)
    g = np.mean((np.array(res["gaussian"]) >= 9) & (np.array(res["gaussian"]) <= 15))
    report(
        3, u >= 0.95 and s >= 0.8 and g >= 0.8,
        f"uniform M=1 {u:.0%}, four-step M=4 {s:.0%}, gaussian M in [9,15] {g:.0%} "
        f"(median {np.median(res['gaussian']):g})",
    )


def test_criterion_04_gradient(report):
    gy = gradient_study(100, "y", base_seed=base(4))
    gx = gradient_study(100, "x", base_seed=base(4) + 50000)
    fy = np.mean([mx == 1 and my >= 2 for mx, my in gy])
    fx = np.mean([my == 1 and mx >= 2 for mx, my in gx])
    report(4, fy >= 0.8 and fx >= 0.8, f"y-gradient 1 x >=2 in {fy:.0%}, x-gradient >=2 x 1 in {fx:.0%}")


def test_criterion_05_clump_size(report):
    runs = mtp_clump_study(50, base(5))
    diam = float(np.median([r.binning_diameter for r in runs]))
    cross = [r.g_crossing for r in runs if r.g_crossing is not None]
    med_cross = float(np.median(cross))
    ok = 20 <= diam <= 35 and 30 <= med_cross <= 45 and len(cross) == len(runs)
    report(5, ok, f"median binning diameter {diam:.1f}, median g crossing {med_cross:.1f} ({len(cross)}/50 cross)")


def test_criterion_06_regression(report):
    start = time.perf_counter()
    sq = cluster_regression("square-uniform", base_seed=base(6))
    disk = cluster_regression("disk-uniform", base_seed=base(6) + 20000)
    gau = cluster_regression("gaussian", base_seed=base(6) + 40000)
    elapsed = time.perf_counter() - start
    ok = 0.9 <= sq.slope <= 1.1 and sq.r2 >= 0.95 and disk.r2 >= 0.85 and gau.r2 >= 0.85 and elapsed < 300
    report(
        6, ok,
        f"square slope {sq.slope:.3f} R2 {sq.r2:.3f}; disk R2 {disk.r2:.3f}; gaussian R2 {gau.r2:.3f} ({elapsed:.0f} s)",
    )


def test_criterion_07_hardcore(report):
    runs = hardcore_study(50, 500, 10.0, base(7))
    frac = np.mean([r.grid == (1, 1) for r in runs])
    cross = float(np.median([r.g_crossing for r in runs if r.g_crossing is not None]))
    report(7, frac >= 0.8 and 8 <= cross <= 13, f"1x1 in {frac:.0%}, median g crossing {cross:.2f}")


def test_criterion_08_virtual_aggregation(report):
    # the first ten realizations of the criterion-5 ensemble
    runs = [virtual_aggregation(mtp_pattern(base(5) + i)) for i in range(10)]
    ok = all(
        v.frac_g_higher >= 0.9 and v.k2_gap < v.g_gap and v.grid_original == v.grid_extended for v in runs
    )
    worst = min(v.frac_g_higher for v in runs)
    ratio = max(v.k2_gap / v.g_gap for v in runs)
    report(
        8, ok,
        f"g(extended) > g(original) at >= {worst:.0%} of r > 5; max K2/g gap ratio {ratio:.3f}; "
        f"grids equal in {sum(v.grid_original == v.grid_extended for v in runs)}/10",
    )


def test_criterion_09_knuth_vs_stone(report):
    rows = gaussian_comparison_study(50, 1000, base(9))
    frac = np.mean([r.knuth_l2 <= r.stone_l2 for r in rows])
    ratio = np.mean([r.stone_l2 / r.knuth_l2 for r in rows])
    report(9, frac >= 0.8, f"Knuth L2 <= Stone L2 in {frac:.0%} of 50 (mean Stone/Knuth ratio {ratio:.3f})")


def test_criterion_10_edge_correction(report):
    rng = RandomStream(base(10))
    worst = 0.0
    for t in range(20):
        n = 5 + int(rng.integers(46, 1)[0])
        w = Window(0, 100, 0, 40 + 3 * t)
        xy = rng.uniform((n, 2)) * (w.width, w.height)
        r = np.linspace(0.5, 0.5 * min(w.width, w.height), 30)
        got = ripley_k(PointPattern(xy, w), r).values
        worst = max(worst, float(np.max(np.abs(got - brute_force_k(xy, w, r)))))
    assert arc_fraction_oracle(0, 0, 1, Window(0, 10, 0, 10)) == pytest.approx(0.25)
    report(10, worst <= 1e-9, f"max |K - brute force| {worst:.2e} over 20 patterns")


def test_criterion_11_fit_round_trip(report):
    d = np.arange(0.0, 250.0 + 0.5, 1.0)
    fit = fit_thomas_curve(theoretical_k_thomas(2e-4, 10.0, d), 500, W500.area())
    exact_rel = max(abs(fit.rho_hat / 2e-4 - 1), abs(fit.sigma_hat / 10 - 1))
    sig = float(np.median(mtp_fit_study(50, base(11))))
    ok = exact_rel <= 1e-3 and abs(sig - 10) <= 3
    report(11, ok, f"exact-K relative error {exact_rel:.1e}; median fitted sigma {sig:.2f} over 50 mTp samples")


def test_criterion_12_anisotropy(report):
    b = base(12)
    r0 = anisotropic_gaussian_study(0, base_seed=b)
    r90 = anisotropic_gaussian_study(90, base_seed=b)
    r45 = anisotropic_gaussian_study(45, base_seed=b)
    r135 = anisotropic_gaussian_study(135, base_seed=b)
    f0 = np.mean([r.a_x > r.a_y for r in r0])
    f90 = np.mean([r.a_y > r.a_x for r in r90])
    f45 = np.mean([r.index < 0.15 for r in r45])
    f135 = np.mean([r.index < 0.15 for r in r135])
    iso = float(np.median(isotropic_mtp_anisotropy(base_seed=b + 50000)))
    ok = min(f0, f90, f45, f135) >= 0.8 and iso < 0.2
    report(
        12, ok,
        f"a_x > a_y at 0 deg {f0:.0%}, a_y > a_x at 90 deg {f90:.0%}, I_an < 0.15 at 45 deg {f45:.0%} "
        f"and 135 deg {f135:.0%}; isotropic mTp median I_an {iso:.3f}",
    )


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_criterion_13_synthetic_census(report, tmp_path):
    w = Window(0, 1000, 0, 500)
    pats = synthetic_census(w, 50, base(13))
    pats["zz_collinear"] = PointPattern(np.column_stack([np.linspace(5, 995, 40), np.full(40, 250.0)]), w)
    write_census_csv(pats, tmp_path / "census.csv")
    text = (
        "input = census.csv\nwindow = 0,1000,0,500\nseed = 13\nanalyses = knuth, fit-thomas, indices, L\n"
        "r.n_points = 64\noutput_dir = {out}\nworkers = {workers}\n"
    )
    res_a = run_pipeline(parse_config_text(text.format(out="a", workers=1), base_dir=tmp_path))
    res_b = run_pipeline(parse_config_text(text.format(out="b", workers=2), base_dir=tmp_path))
    a, b = tmp_path / "a", tmp_path / "b"
    files_a = {p.relative_to(a).as_posix(): p.read_bytes() for p in a.rglob("*.csv")}
    files_b = {p.relative_to(b).as_posix(): p.read_bytes() for p in b.rglob("*.csv")}
    deterministic = files_a == files_b and len(files_a) > 0

    manifest = json.loads((a / "manifest.json").read_text())
    statuses = manifest["species"]
    isolated = (
        res_a.exit_code == EXIT_PARTIAL
        and statuses["zz_collinear"]["status"] == "failed"
        and any(f["species"] == "zz_collinear" for f in manifest["failures"])
    )
    in_range = [s for s, p in pats.items() if 20 <= p.n <= 3000 and s != "zz_collinear"]
    skipped = [s for s, p in pats.items() if not 20 <= p.n <= 3000]
    isolated &= all(statuses[s]["status"] == "ok" for s in in_range)
    isolated &= all(statuses[s]["status"] == "skipped" for s in skipped)

    idx = _rows(a / "indices.csv")
    fits = _rows(a / "fits.csv")
    schema = (
        list(idx[0])[:8] == ["species", "a", "equivalent_radius", "binning_diameter", "I_an", "delta", "omega", "abundance"]
        and list(fits[0]) == ["species", "rho", "sigma", "mu", "contrast", "accept", "reason"]
        and [r["species"] for r in idx] == sorted(in_range)
        and all(sha256_file(a / o["path"]) == o["sha256"] for o in manifest["outputs"])
    )
    accepted = sum(r["accept"] == "true" for r in fits)
    report(
        13, deterministic and isolated and schema and res_b.exit_code == res_a.exit_code,
        f"{len(in_range)} analysed, {len(skipped)} skipped, 1 isolated failure, {accepted} fits accepted; "
        f"outputs byte-identical across worker counts: {deterministic}",
    )
