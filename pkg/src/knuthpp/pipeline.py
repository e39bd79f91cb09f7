"""Batch orchestration: config -> per-species analyses -> CSV files + manifest.

Random streams are derived from the run seed so that every species, and
every simulation inside it, owns a fixed disjoint block of seeds:

* a generated input pattern uses ``seed`` itself;
* species ``i`` (position in the sorted species list) owns
  ``B_i = seed + (i + 1) * 2**24``;
* the CSR envelope of the ``s``-th statistic in ``envelope.statistics``
  starts at ``B_i + s * 2**20`` (simulation ``j`` at ``+ j``);
* mTp counterparts for the difference index start at ``B_i + 15 * 2**20``.

Results therefore do not depend on ``workers``.
"""

from __future__ import annotations

import datetime as _dt
import json
import platform
import re
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import scipy

from . import __version__
from .core import Point, PointPattern, RandomStream, Window
from .errors import ConfigError, InsufficientSims, PatternError
from .fitting import (
    ThomasFit,
    fit_thomas,
    mtp_counterpart,
    species_filter,
    species_indices,
)
from .generators import (
    ClusterShape,
    FixedN,
    POISSON_OFFSPRING,
    ThomasParams,
    gen_binomial,
    gen_csr,
    gen_hardcore,
    gen_inhomogeneous_poisson,
    gen_matern,
    gen_shaped_cluster,
    gen_thomas,
    linear_gradient,
)
from .io import (
    RunConfig,
    load_config,
    parse_window,
    read_census_csv,
    sha256_file,
    write_csv,
    write_curve_csv,
    write_histogram_csv,
    write_pattern_csv,
    write_raster_csv,
    write_surface_csv,
)
from .kernel import default_bandwidth, epanechnikov_intensity
from .knuth import KnuthSearchConfig, optimal_binning, optimal_binning_1d
from .secondstats import (
    compute_statistic,
    crossing_scale,
    csr_envelope,
    default_pcf_bandwidth,
    envelope_rank,
)
from .stone import stone_optimal_bins

SPECIES_BLOCK = 2**24
SUB_BLOCK = 2**20
DELTA_SUB_BLOCK = 15
DEFAULT_GENERATOR_WINDOW = "0,500,0,500"
SINGLE_PATTERN_ID = "pattern"

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL = 0, 1, 2

FITS_HEADER = ["species", "rho", "sigma", "mu", "contrast", "accept", "reason"]
INDICES_HEADER = [
    "species", "a", "equivalent_radius", "binning_diameter", "I_an", "delta",
    "omega", "abundance", "delta_tail", "m_x", "m_y", "g_crossing",
]
STONE_HEADER = ["species", "axis", "knuth_m", "stone_m"]


# --- generator specs -------------------------------------------------------

GENERATOR_KEYS = {
    "csr": {"lambda"},
    "binomial": {"n"},
    "inhomogeneous": {"lambda_low", "lambda_high", "axis"},
    "thomas": {"rho", "sigma", "mu", "n"},
    "matern": {"rho", "radius", "mu", "n"},
    "hardcore": {"n", "radius", "max_attempts"},
    "shaped-cluster": {"kind", "size", "n", "rotation", "axis_ratio", "center_x", "center_y"},
}
REQUIRED_KEYS = {
    "csr": {"lambda"},
    "binomial": {"n"},
    "inhomogeneous": {"lambda_low", "lambda_high"},
    "thomas": {"rho", "sigma", "mu"},
    "matern": {"rho", "radius", "mu"},
    "hardcore": {"n", "radius"},
    "shaped-cluster": {"kind", "size", "n"},
}


def build_generator(kind: str, params: dict, window: Window) -> Callable[[RandomStream], PointPattern]:
    """Validate a generator spec and return ``rng -> PointPattern``.

    Raises :class:`ConfigError` for unknown kinds, missing or unknown keys,
    and parameter values rejected by the generator's own checks.
    """
    if kind not in GENERATOR_KEYS:
        raise ConfigError(f"unknown generator {kind!r}; choose from {', '.join(GENERATOR_KEYS)}")
    keys = set(params)
    if keys - GENERATOR_KEYS[kind]:
        raise ConfigError(f"generator {kind!r} does not take {sorted(keys - GENERATOR_KEYS[kind])}")
    if REQUIRED_KEYS[kind] - keys:
        raise ConfigError(f"generator {kind!r} needs {sorted(REQUIRED_KEYS[kind] - keys)}")

    def num(key, default=None):
        if key not in params:
            return default
        try:
            return float(params[key])
        except ValueError:
            raise ConfigError(f"generator.{key} must be numeric, got {params[key]!r}")

    def count(key, default=None):
        v = num(key, default)
        if v is None:
            return None
        if v != int(v) or v < 1:
            raise ConfigError(f"generator.{key} must be a positive integer, got {params[key]!r}")
        return int(v)

    try:
        if kind == "csr":
            lam = num("lambda")
            if not lam > 0:
                raise ValueError("lambda must be positive")
            return lambda rng: gen_csr(window, lam, rng)
        if kind == "binomial":
            n = count("n")
            return lambda rng: gen_binomial(window, n, rng)
        if kind == "inhomogeneous":
            lo, hi = num("lambda_low"), num("lambda_high")
            axis = params.get("axis", "y")
            if axis not in ("x", "y"):
                raise ValueError("axis must be 'x' or 'y'")
            if not (lo >= 0 and hi >= 0 and max(lo, hi) > 0):
                raise ValueError("intensities must be non-negative and not both zero")
            fn = linear_gradient(window, lo, hi, axis)
            return lambda rng: gen_inhomogeneous_poisson(window, fn, max(lo, hi), rng)
        if kind == "thomas":
            tp = ThomasParams(num("rho"), num("sigma"), num("mu"))
            mode = FixedN(count("n")) if "n" in params else POISSON_OFFSPRING
            return lambda rng: gen_thomas(window, tp, mode, rng)
        if kind == "matern":
            rho, radius, mu = num("rho"), num("radius"), num("mu")
            if not (rho > 0 and radius > 0 and mu > 0):
                raise ValueError("rho, radius and mu must be positive")
            mode = FixedN(count("n")) if "n" in params else POISSON_OFFSPRING
            return lambda rng: gen_matern(window, rho, radius, mu, rng, mode)
        if kind == "hardcore":
            n, radius = count("n"), num("radius")
            attempts = count("max_attempts", 10**6)
            if radius < 0:
                raise ValueError("radius must be non-negative")
            return lambda rng: gen_hardcore(window, n, radius, rng, attempts)
        centre = Point(num("center_x", window.center.x), num("center_y", window.center.y))
        shape = ClusterShape(
            params["kind"], num("size"), centre, num("rotation", 0.0), num("axis_ratio", 1.0)
        )
        n = count("n")
        return lambda rng: gen_shaped_cluster(window, shape, n, rng)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"generator {kind!r}: {exc}") from exc


# --- per-species analysis --------------------------------------------------

@dataclass
class SpeciesOutcome:
    species: str
    abundance: int
    status: str = "ok"
    errors: list = field(default_factory=list)
    hist: object = None
    surface: object = None
    raster: object = None
    curves: dict = field(default_factory=dict)
    envelopes: dict = field(default_factory=dict)
    fit: Optional[ThomasFit] = None
    filter: object = None
    indices: object = None
    g_crossing: Optional[float] = None
    stone: list = field(default_factory=list)


def _record(outcome: SpeciesOutcome, step: str, exc: Exception) -> None:
    outcome.status = "failed"
    detail = f"{type(exc).__name__}: {exc}"
    if not isinstance(exc, (PatternError, ValueError)):
        detail += " | " + traceback.format_exc(limit=3).strip().splitlines()[-1]
    outcome.errors.append({"analysis": step, "error": detail})


def _r_grid(config: RunConfig, pattern: PointPattern) -> np.ndarray:
    lo = config.get_float("r.min")
    if lo is None:
        g_bw = config.get_float("g.bandwidth")
        lo = g_bw if g_bw is not None else default_pcf_bandwidth(pattern)
    hi = config.get_float("r.max", 0.5 * min(pattern.window.width, pattern.window.height))
    return np.linspace(lo, hi, config.get_int("r.n_points"))


def analyze_species(species: str, pattern: PointPattern, config: RunConfig, index: int) -> SpeciesOutcome:
    """Run every requested analysis on one pattern, isolating failures."""
    out = SpeciesOutcome(species, pattern.n)
    wanted = set(config.analyses)
    base = config.seed + (index + 1) * SPECIES_BLOCK
    g_bw = config.get_float("g.bandwidth")
    k2_bw = config.get_float("k2.bandwidth")

    if wanted & {"knuth", "indices"}:
        try:
            cfg = KnuthSearchConfig(config.get_int("knuth.c_x"), config.get_int("knuth.c_y"))
            out.hist, out.surface = optimal_binning(pattern, cfg)
        except Exception as exc:
            _record(out, "knuth", exc)

    if "kernel" in wanted:
        try:
            bw = config.get_float("kernel.bandwidth") or default_bandwidth(pattern)
            out.raster = epanechnikov_intensity(
                pattern, bw, config.get_int("kernel.nx"), config.get_int("kernel.ny")
            )
        except Exception as exc:
            _record(out, "kernel", exc)

    stats = [s for s in ("K", "L", "g", "K2") if s in wanted]
    env_stats = config.envelope_statistics if "envelope" in wanted else []
    stats += [s for s in env_stats if s not in stats]
    if "indices" in wanted and "g" not in stats:
        stats.append("g")
    for kind in stats:
        try:
            r = _r_grid(config, pattern)
            out.curves[kind] = compute_statistic(pattern, kind, r, g_bw, k2_bw)
        except Exception as exc:
            _record(out, kind, exc)
    if "g" in out.curves:
        out.g_crossing = crossing_scale(out.curves["g"])
    for s, kind in enumerate(env_stats):
        if kind not in out.curves:
            continue
        try:
            out.envelopes[kind] = csr_envelope(
                pattern,
                kind,
                _r_grid(config, pattern),
                n_sims=config.get_int("envelope.n_sims"),
                level=config.get_float("envelope.level"),
                rng=RandomStream(base + s * SUB_BLOCK),
                smoothing_bandwidth=g_bw,
                k2_bandwidth=k2_bw,
            )
        except Exception as exc:
            _record(out, f"envelope-{kind}", exc)

    if "fit-thomas" in wanted:
        try:
            out.fit = fit_thomas(pattern, config.get_float("fit.d_max"), config.get_float("fit.grid_step"))
            out.filter = species_filter(
                out.fit, pattern.n, pattern.window.area(), config.get_float("filter.max_clump_area")
            )
        except Exception as exc:
            _record(out, "fit-thomas", exc)

    if "indices" in wanted and out.hist is not None:
        try:
            a_mtp = None
            if out.fit is not None and out.filter.accept:
                root = RandomStream(base + DELTA_SUB_BLOCK * SUB_BLOCK)
                cfg = KnuthSearchConfig(config.get_int("knuth.c_x"), config.get_int("knuth.c_y"))
                areas = []
                for k in range(config.get_int("indices.delta_seeds")):
                    sim = mtp_counterpart(pattern, out.fit, root.spawn(k))
                    areas.append(optimal_binning(sim, cfg)[0].grid.bin_area)
                a_mtp = float(np.mean(areas))
            out.indices = species_indices(pattern, out.hist, config.get_float("indices.omega_radius"), a_mtp)
        except Exception as exc:
            _record(out, "indices", exc)

    if "stone-compare" in wanted:
        try:
            c = config.get_int("stone.c")
            for axis, values in (("x", pattern.x), ("y", pattern.y)):
                _, m_knuth, _ = optimal_binning_1d(values, c)
                m_stone, _ = stone_optimal_bins(values, c)
                out.stone.append((axis, m_knuth, m_stone))
        except Exception as exc:
            _record(out, "stone-compare", exc)
    return out


def _analyze_job(args):
    return analyze_species(*args)


# --- driver ----------------------------------------------------------------

_SAFE = re.compile(r"[^A-Za-z0-9_.-]")


def species_dirname(species: str) -> str:
    name = _SAFE.sub("_", species)
    return name if name not in ("", ".", "..") else f"_{name}"


def _write_species_files(outcome: SpeciesOutcome, directory: Path, config: RunConfig) -> list[Path]:
    written = []
    if outcome.hist is not None:
        written.append(write_histogram_csv(outcome.hist, directory / "histogram.csv"))
        written.append(write_surface_csv(outcome.surface, directory / "posterior_surface.csv"))
    if outcome.raster is not None:
        written.append(write_raster_csv(outcome.raster, directory / "raster.csv"))
    requested = set(config.analyses)
    if "envelope" in requested:
        requested |= set(config.envelope_statistics)
    for kind in ("K", "L", "g", "K2"):
        if kind in outcome.curves and kind in requested:
            written.append(
                write_curve_csv(outcome.curves[kind], directory / f"curve_{kind}.csv", outcome.envelopes.get(kind))
            )
    return written


def _fits_row(o: SpeciesOutcome):
    f = o.fit
    return [o.species, f.rho_hat, f.sigma_hat, f.mu_hat, f.contrast, o.filter.accept, o.filter.reason]


def _indices_row(o: SpeciesOutcome):
    ix, g = o.indices, o.hist.grid
    return [
        o.species, ix.bin_area, ix.equivalent_radius, ix.binning_diameter, ix.anisotropy, ix.delta,
        ix.omega, ix.abundance, ix.delta_tail, g.m_x, g.m_y, o.g_crossing,
    ]


def _load_patterns(config: RunConfig) -> tuple[dict[str, PointPattern], dict, bool]:
    """Input patterns keyed by species, skipped species, and whether the
    input is a multi-species census."""
    if "generator" in config.params:
        window = config.window or _parse_default_window()
        make = build_generator(config.params["generator"], config.generator_params(), window)
        try:
            pattern = make(RandomStream(config.seed))
        except (PatternError, ValueError) as exc:
            raise ConfigError(f"generator failed: {type(exc).__name__}: {exc}") from exc
        return {SINGLE_PATTERN_ID: pattern}, {}, False
    path = Path(config.params["input"])
    path = path if path.is_absolute() else config.base_dir / path
    try:
        table = read_census_csv(path, config.window)
    except OSError as exc:
        raise ConfigError(f"cannot read input {path}: {exc}") from exc
    except PatternError as exc:
        raise ConfigError(f"invalid input {path}: {exc}") from exc
    ids = table.species_ids()
    census = len(ids) > 1 or ids != [SINGLE_PATTERN_ID]
    lo, hi = config.get_int("filter.abundance_min"), config.get_int("filter.abundance_max")
    patterns, skipped = {}, {}
    for sid in ids:
        pat = table.pattern(sid)
        if census and not lo <= pat.n <= hi:
            skipped[sid] = pat.n
        else:
            patterns[sid] = pat
    return patterns, skipped, census


def _parse_default_window() -> Window:
    return parse_window(DEFAULT_GENERATOR_WINDOW)


def _validate(config: RunConfig) -> None:
    if "generator" in config.params:
        build_generator(config.params["generator"], config.generator_params(), config.window or _parse_default_window())
    checks = {
        "knuth.c_x": 1, "knuth.c_y": 1, "r.n_points": 5, "kernel.nx": 1, "kernel.ny": 1,
        "envelope.n_sims": 1, "indices.delta_seeds": 1, "stone.c": 1, "workers": 1,
    }
    for key, minimum in checks.items():
        if key in config.params and config.get_int(key) < minimum:
            raise ConfigError(f"{key} must be >= {minimum}")
    if config.get_int("envelope.n_sims") >= SUB_BLOCK:
        raise ConfigError(f"envelope.n_sims must be below {SUB_BLOCK}")
    if len(config.envelope_statistics) >= DELTA_SUB_BLOCK:
        raise ConfigError("too many envelope statistics")
    for key in ("fit.d_max", "fit.grid_step", "indices.omega_radius", "g.bandwidth", "k2.bandwidth",
                "kernel.bandwidth", "filter.max_clump_area"):
        v = config.get_float(key)
        if v is not None and not v > 0:
            raise ConfigError(f"{key} must be positive")
    if config.get_int("filter.abundance_min") > config.get_int("filter.abundance_max"):
        raise ConfigError("filter.abundance_min exceeds filter.abundance_max")
    if "envelope" in config.analyses:
        try:
            envelope_rank(config.get_int("envelope.n_sims"), config.get_float("envelope.level"))
        except InsufficientSims as exc:
            raise ConfigError(str(exc)) from exc


@dataclass
class RunResult:
    exit_code: int
    output_dir: Optional[Path]
    manifest: Optional[dict]
    message: str = ""


def run_pipeline(config: RunConfig, workers: Optional[int] = None) -> RunResult:
    """Execute a run; never raises for config or per-species problems.

    Exit codes: 0 success, 1 config error (nothing written), 2 one or more
    species or analyses failed (listed in the manifest).
    """
    try:
        _validate(config)
        patterns, skipped, census = _load_patterns(config)
    except ConfigError as exc:
        return RunResult(EXIT_CONFIG, None, None, str(exc))

    workers = workers or config.get_int("workers", 1)
    ids = sorted(set(patterns) | set(skipped))
    jobs = [(sid, patterns[sid], config, ids.index(sid)) for sid in ids if sid in patterns]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_analyze_job, jobs))
    else:
        outcomes = [analyze_species(*job) for job in jobs]

    out_dir = config.output_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if "generator" in config.params:
        written.append(write_pattern_csv(patterns[SINGLE_PATTERN_ID], out_dir / "pattern.csv"))
    for o in outcomes:
        target = out_dir / species_dirname(o.species) if census else out_dir
        written += _write_species_files(o, target, config)
    if "fit-thomas" in config.analyses:
        written.append(write_csv(out_dir / "fits.csv", FITS_HEADER, [_fits_row(o) for o in outcomes if o.fit]))
    if "indices" in config.analyses:
        written.append(
            write_csv(out_dir / "indices.csv", INDICES_HEADER, [_indices_row(o) for o in outcomes if o.indices])
        )
    if "stone-compare" in config.analyses:
        rows = [[o.species, *row] for o in outcomes for row in o.stone]
        written.append(write_csv(out_dir / "stone_compare.csv", STONE_HEADER, rows))

    failures = [{"species": o.species, **e} for o in outcomes for e in o.errors]
    manifest = {
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "tool": "knuthpp",
        "versions": {
            "knuthpp": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "config": config.as_dict(),
        "seed": config.seed,
        "stream_layout": {"species_block": SPECIES_BLOCK, "sub_block": SUB_BLOCK, "delta_sub_block": DELTA_SUB_BLOCK},
        "delta_convention": f"mean Knuth bin area over {config.get_int('indices.delta_seeds')} fitted-mTp realization(s)",
        "species": {
            **{o.species: {"status": o.status, "abundance": o.abundance} for o in outcomes},
            **{sid: {"status": "skipped", "abundance": n, "reason": "abundance filter"} for sid, n in skipped.items()},
        },
        "failures": failures,
        "outputs": [
            {"path": p.relative_to(out_dir).as_posix(), "sha256": sha256_file(p)} for p in written
        ],
    }
    manifest["species"] = dict(sorted(manifest["species"].items()))
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    code = EXIT_PARTIAL if failures else EXIT_OK
    return RunResult(code, out_dir, manifest, f"{len(failures)} failure(s)" if failures else "ok")


def run_config_file(path, output_dir=None, workers=None) -> RunResult:
    try:
        config = load_config(path)
    except ConfigError as exc:
        return RunResult(EXIT_CONFIG, None, None, str(exc))
    if output_dir is not None:
        config.params["output_dir"] = str(Path(output_dir).resolve())
    return run_pipeline(config, workers)
