"""CSV ingestion, result serialization and the flat key/value run config."""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import PointPattern, Window
from .errors import ConfigError, OutOfWindow, ParseError

FLOAT_FMT = "{:.17g}"


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return FLOAT_FMT.format(float(value))
    return str(value)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def parse_window(text: str) -> Window:
    """``"x_min,x_max,y_min,y_max"`` or ``"width x height"``."""
    text = text.strip()
    try:
        if "x" in text and "," not in text:
            w, h = (float(v) for v in text.split("x"))
            return Window.from_size(w, h)
        vals = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"cannot parse window {text!r}") from exc
    if len(vals) != 4:
        raise ConfigError(f"window needs 4 comma-separated bounds, got {text!r}")
    try:
        return Window(*vals)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


@dataclass
class CensusTable:
    """Rows of ``(species, x, y)`` sharing one observation window."""

    species: np.ndarray
    xy: np.ndarray
    window: Window

    def species_ids(self) -> list[str]:
        return sorted(set(self.species.tolist()))

    def abundance(self) -> dict[str, int]:
        ids, counts = np.unique(self.species, return_counts=True)
        return dict(zip(ids.tolist(), counts.tolist()))

    def pattern(self, species_id: str) -> PointPattern:
        return PointPattern(self.xy[self.species == species_id], self.window)

    def patterns(self) -> dict[str, PointPattern]:
        return {sid: self.pattern(sid) for sid in self.species_ids()}


def read_census_csv(path, window: Optional[Window] = None, default_species: str = "pattern") -> CensusTable:
    """Read a ``species,x,y`` (or ``x,y``) CSV file.

    Without an explicit ``window`` the tight bounding box of all rows is used.
    """
    species, coords = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip().lower() for h in next(reader)]
        except StopIteration:
            raise ParseError("empty file", line=1)
        if header == ["species", "x", "y"]:
            has_species = True
        elif header == ["x", "y"]:
            has_species = False
        else:
            raise ParseError(f"expected header 'species,x,y' or 'x,y', got {','.join(header)!r}", line=1)
        width = 3 if has_species else 2
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != width:
                raise ParseError(f"expected {width} fields, got {len(row)}", line=lineno)
            sid = row[0].strip() if has_species else default_species
            if not sid:
                raise ParseError("empty species id", line=lineno)
            try:
                x, y = float(row[-2]), float(row[-1])
            except ValueError:
                raise ParseError(f"non-numeric coordinate in {row!r}", line=lineno)
            if not (np.isfinite(x) and np.isfinite(y)):
                raise ParseError(f"non-finite coordinate in {row!r}", line=lineno)
            species.append(sid)
            coords.append((x, y))
    xy = np.array(coords, dtype=float).reshape(-1, 2)
    if window is None:
        if len(xy) == 0:
            raise ParseError("no data rows and no window given", line=2)
        lo, hi = xy.min(axis=0), xy.max(axis=0)
        window = Window(lo[0], hi[0] if hi[0] > lo[0] else lo[0] + 1.0, lo[1], hi[1] if hi[1] > lo[1] else lo[1] + 1.0)
    else:
        inside = window.contains(xy) if len(xy) else np.ones(0, dtype=bool)
        if not inside.all():
            k = int(np.flatnonzero(~inside)[0])
            raise OutOfWindow(f"row {k + 2} ({species[k]}, {xy[k, 0]}, {xy[k, 1]}) lies outside {window}")
    return CensusTable(np.array(species, dtype=object), xy, window)


def write_pattern_csv(pattern: PointPattern, path, species: Optional[str] = None) -> Path:
    """Write coordinates with 17 significant digits (bit-exact round trip)."""
    if species is None:
        return write_csv(path, ["x", "y"], pattern.xy.tolist())
    return write_csv(path, ["species", "x", "y"], ([species, x, y] for x, y in pattern.xy.tolist()))


def write_census_csv(patterns: dict, path) -> Path:
    """Write ``{species: PointPattern}`` as one ``species,x,y`` table, species sorted."""
    rows = ([sid, x, y] for sid in sorted(patterns) for x, y in patterns[sid].xy.tolist())
    return write_csv(path, ["species", "x", "y"], rows)


def read_pattern_csv(path, window: Optional[Window] = None) -> PointPattern:
    table = read_census_csv(path, window)
    return PointPattern(table.xy, table.window)


def write_histogram_csv(hist, path) -> Path:
    g = hist.grid
    rows = (
        (ix, iy, hist.counts[ix, iy], hist.heights_mean[ix, iy], hist.heights_var[ix, iy])
        for ix in range(g.m_x)
        for iy in range(g.m_y)
    )
    return write_csv(path, ["bin_x", "bin_y", "count", "mu", "sigma2"], rows)


def write_surface_csv(surface, path) -> Path:
    cx, cy = surface.values.shape
    rows = ((mx + 1, my + 1, surface.values[mx, my]) for mx in range(cx) for my in range(cy))
    return write_csv(path, ["m_x", "m_y", "log_posterior"], rows)


def write_curve_csv(curve, path, envelope=None) -> Path:
    if envelope is None:
        return write_csv(path, ["r", "value"], zip(curve.r_grid, curve.values))
    return write_csv(
        path,
        ["r", "value", "lower", "upper", "theory"],
        zip(curve.r_grid, curve.values, envelope.lower, envelope.upper, envelope.theory),
    )


def write_raster_csv(raster, path) -> Path:
    xs, ys = raster.centers()
    rows = ((xs[i], ys[j], raster.values[i, j]) for i in range(raster.nx) for j in range(raster.ny))
    return write_csv(path, ["x", "y", "intensity"], rows)


# --- run configuration -----------------------------------------------------

ANALYSES = ("knuth", "kernel", "K", "L", "g", "K2", "envelope", "fit-thomas", "indices", "stone-compare")
GENERATORS = ("csr", "binomial", "inhomogeneous", "thomas", "matern", "hardcore", "shaped-cluster")

DEFAULTS = {
    "seed": "0",
    "output_dir": "output",
    "knuth.c_x": "50",
    "knuth.c_y": "50",
    "r.n_points": "512",
    "kernel.nx": "256",
    "kernel.ny": "128",
    "envelope.statistics": "g",
    "envelope.n_sims": "199",
    "envelope.level": "0.99",
    "fit.d_max": "300",
    "fit.grid_step": "1",
    "filter.abundance_min": "20",
    "filter.abundance_max": "3000",
    "indices.omega_radius": "10",
    "indices.delta_seeds": "1",
    "stone.c": "100",
}

KNOWN_KEYS = set(DEFAULTS) | {
    "input",
    "window",
    "generator",
    "analyses",
    "r.min",
    "r.max",
    "g.bandwidth",
    "k2.bandwidth",
    "kernel.bandwidth",
    "filter.max_clump_area",
    "workers",
}
TEXT_KEYS = {"input", "window", "output_dir", "envelope.statistics"}


@dataclass
class RunConfig:
    """Declarative description of one analysis run.

    ``params`` holds every key of the config file (defaults filled in);
    typed accessors below validate on use.
    """

    analyses: list[str]
    params: dict[str, str] = field(default_factory=dict)
    base_dir: Path = Path(".")

    def __post_init__(self):
        if not self.analyses:
            raise ConfigError("at least one analysis is required")
        unknown = [a for a in self.analyses if a not in ANALYSES]
        if unknown:
            raise ConfigError(f"unknown analyses {unknown}; choose from {', '.join(ANALYSES)}")
        merged = dict(DEFAULTS)
        merged.update(self.params)
        self.params = merged
        bad = [k for k in self.params if k not in KNOWN_KEYS and not k.startswith("generator.")]
        if bad:
            raise ConfigError(f"unknown config keys {sorted(bad)}")
        if ("input" in self.params) == ("generator" in self.params):
            raise ConfigError("exactly one of 'input' or 'generator' must be set")
        if "generator" in self.params and self.params["generator"] not in GENERATORS:
            raise ConfigError(f"unknown generator {self.params['generator']!r}")
        # generator keys are checked by the pipeline; everything else here is numeric
        for key in self.params:
            if key not in TEXT_KEYS and not key.startswith("generator"):
                self.get_float(key)
        for stat in self.envelope_statistics:
            if stat not in ("K", "L", "g", "K2"):
                raise ConfigError(f"no CSR envelope for statistic {stat!r}")
        if "window" in self.params:
            parse_window(self.params["window"])
        level = self.get_float("envelope.level")
        if not 0 < level < 1:
            raise ConfigError("envelope.level must lie in (0, 1)")

    def get_float(self, key: str, default=None) -> Optional[float]:
        if key not in self.params:
            return default
        try:
            return float(self.params[key])
        except ValueError:
            raise ConfigError(f"{key} must be numeric, got {self.params[key]!r}")

    def get_int(self, key: str, default=None) -> Optional[int]:
        v = self.get_float(key)
        if v is None:
            return default
        if v != int(v):
            raise ConfigError(f"{key} must be an integer, got {self.params[key]!r}")
        return int(v)

    @property
    def seed(self) -> int:
        return self.get_int("seed")

    @property
    def output_dir(self) -> Path:
        out = Path(self.params["output_dir"])
        return out if out.is_absolute() else self.base_dir / out

    @property
    def window(self) -> Optional[Window]:
        return parse_window(self.params["window"]) if "window" in self.params else None

    @property
    def envelope_statistics(self) -> list[str]:
        return [s.strip() for s in self.params["envelope.statistics"].split(",") if s.strip()]

    def generator_params(self) -> dict[str, str]:
        return {k.split(".", 1)[1]: v for k, v in self.params.items() if k.startswith("generator.")}

    def as_dict(self) -> dict:
        return {"analyses": list(self.analyses), **dict(sorted(self.params.items()))}


def parse_config_text(text: str, base_dir=".") -> RunConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    params = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in params:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        params[key] = value
    analyses = [a.strip() for a in params.pop("analyses", "").split(",") if a.strip()]
    return RunConfig(analyses=analyses, params=params, base_dir=Path(base_dir))


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, base_dir=path.parent)
