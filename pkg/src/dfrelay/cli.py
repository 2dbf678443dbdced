"""Command-line front end: ``dfrelay {dist,capacity,cutoff,validate}``.

Tables go to stdout (or ``--out``) as CSV with a schema comment line, or
as JSON. Settings come from flags, then an optional flat ``key = value``
config file, then built-in defaults, in that order of precedence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .capacity import (
    capacity_opra,
    capacity_ora,
    capacity_tifr,
    cutoff_equation,
    opra_cutoff,
    optimize_tifr_cutoff,
    quadrature_expectation,
)
from .distribution import (
    MinSnrDistribution,
    RicianHop,
    SeriesControl,
    db_to_linear,
    linear_to_db,
    reference_min_survival,
)
from .errors import DomainError, NumericalError
from .montecarlo import estimate_capacity, estimate_min_cdf

SCHEMA_VERSION = 1
EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3
SCHEMES = ("ora", "opra", "tifr")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Sweep:
    start: float
    stop: float
    points: int
    db: bool = False

    @classmethod
    def parse(cls, text: str) -> "Sweep":
        parts = str(text).split(":")
        if len(parts) not in (3, 4):
            raise ConfigError(f"sweep must look like start:stop:points[:db], got {text!r}")
        try:
            start, stop, points = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError as exc:
            raise ConfigError(f"bad sweep {text!r}: {exc}") from None
        if points < 2:
            raise ConfigError("sweep needs at least 2 points")
        if len(parts) == 4 and parts[3].lower() not in ("db", "lin", "linear"):
            raise ConfigError(f"sweep unit must be 'db' or 'lin', got {parts[3]!r}")
        return cls(start, stop, points, len(parts) == 4 and parts[3].lower() == "db")

    def values(self) -> np.ndarray:
        """Sweep values in linear units."""
        grid = np.linspace(self.start, self.stop, self.points)
        return 10.0 ** (grid / 10.0) if self.db else grid

    def labels(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.points)


@dataclass(frozen=True)
class RunConfig:
    kx: float = 3.0
    ky: float = 5.0
    snr_x: float | None = None
    snr_y: float | None = None
    snr_x_db: float | None = None
    snr_y_db: float | None = None
    snr_ratio: float = 1.0
    scheme: str = "all"
    sweep: Sweep | None = None
    beta0: float | None = None
    terms: int = 512
    tol: float = 1e-12
    compare_terms: tuple[int, ...] = ()
    mc_samples: int = 0
    seed: int = 1
    format: str = "csv"
    out: str | None = None
    bandwidth: float = 1.0
    jobs: int = 1

    def hop_snr(self, which: str) -> float:
        lin, db = getattr(self, f"snr_{which}"), getattr(self, f"snr_{which}_db")
        if lin is not None and db is not None:
            raise ConfigError(f"give only one of --snr-{which} and --snr-{which}-db")
        if db is not None:
            return db_to_linear(db)
        return 5.0 if lin is None else float(lin)

    def schemes(self) -> tuple[str, ...]:
        chosen = [s.strip().lower() for s in self.scheme.split(",")]
        if "all" in chosen:
            return SCHEMES
        bad = [s for s in chosen if s not in SCHEMES]
        if bad:
            raise ConfigError(f"unknown scheme(s) {bad}; choose from ora, opra, tifr, all")
        return tuple(s for s in SCHEMES if s in chosen)

    def control(self) -> SeriesControl:
        return SeriesControl(self.tol, self.terms)

    def distribution(self, snr_x: float | None = None, snr_y: float | None = None) -> MinSnrDistribution:
        snr_x = self.hop_snr("x") if snr_x is None else snr_x
        snr_y = self.hop_snr("y") if snr_y is None else snr_y
        return MinSnrDistribution(RicianHop(self.kx, snr_x), RicianHop(self.ky, snr_y), self.control())

    def validate(self) -> "RunConfig":
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.format!r}")
        if self.mc_samples < 0:
            raise ConfigError("mc-samples must be >= 0")
        if not self.snr_ratio > 0:
            raise ConfigError("snr-ratio must be positive")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        try:
            self.control()
            self.distribution()
            self.schemes()
        except DomainError as exc:
            raise ConfigError(str(exc)) from None
        return self


_CONVERTERS = {
    "kx": float, "ky": float, "snr_x": float, "snr_y": float, "snr_x_db": float,
    "snr_y_db": float, "snr_ratio": float, "scheme": str, "sweep": Sweep.parse,
    "beta0": float, "terms": int, "tol": float, "mc_samples": int, "seed": int,
    "format": str, "out": str, "bandwidth": float, "jobs": int,
    "compare_terms": lambda s: tuple(int(t) for t in str(s).split(",") if t.strip()),
}


def read_config_file(path: str) -> dict:
    """Parse a flat ``key = value`` file; keys mirror the long flag names."""
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key not in _CONVERTERS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def build_config(args: argparse.Namespace) -> RunConfig:
    merged = {}
    if getattr(args, "config", None):
        merged.update(read_config_file(args.config))
    for f in fields(RunConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            merged[f.name] = value
    kwargs = {}
    for key, value in merged.items():
        try:
            kwargs[key] = _CONVERTERS[key](value) if isinstance(value, str) else value
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {value!r} ({exc})") from None
    return RunConfig(**kwargs).validate()


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def _fmt(value):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return None
    if isinstance(value, (float, np.floating)):
        return float(f"{float(value):.12g}")
    return value


def render_table(command: str, columns: list[str], rows: list[dict], fmt: str) -> str:
    schema = f"dfrelay-{command}/{SCHEMA_VERSION}"
    clean = [{c: _fmt(row.get(c)) for c in columns} for row in rows]
    if fmt == "json":
        return json.dumps({"schema": schema, "columns": columns, "rows": clean}, indent=2) + "\n"
    buf = io.StringIO()
    buf.write(f"# schema={schema} version={__version__}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in clean:
        writer.writerow(["" if row[c] is None else (f"{row[c]:.12g}" if isinstance(row[c], float) else row[c])
                         for c in columns])
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_dist(cfg: RunConfig) -> tuple[list[str], list[dict]]:
    dist = cfg.distribution()
    sweep = cfg.sweep or Sweep(0.0, 20.0, 101)
    grid = sweep.values()
    columns = ["gamma", "cdf_analytic", "pdf_analytic", "cdf_mc", "mc_stderr"]
    cdf = dist.cdf(grid)
    pdf = dist.pdf(grid)
    mc = estimate_min_cdf(dist, grid, cfg.seed, cfg.mc_samples) if cfg.mc_samples else None
    extra = {}
    for terms in cfg.compare_terms:
        truncated = replace(dist, control=SeriesControl(cfg.tol, terms))
        extra[f"cdf_terms_{terms}"] = truncated.cdf(grid)
    columns += list(extra)
    rows = []
    for i, g in enumerate(grid):
        row = {"gamma": g, "cdf_analytic": cdf[i], "pdf_analytic": pdf[i]}
        if mc:
            row["cdf_mc"], row["mc_stderr"] = mc[i].value, mc[i].standard_error
        for name, values in extra.items():
            row[name] = values[i]
        rows.append(row)
    return columns, rows


CAPACITY_COLUMNS = [
    "snr_db", "snr_x", "snr_y", "c_ora", "c_opra", "gamma0", "c_tifr_opt", "beta0_opt",
    "p_out", "c_mc", "c_mc_stderr", "status",
]


def _sweep_points(cfg: RunConfig) -> list[tuple[float, float]]:
    if cfg.sweep is None:
        return [(cfg.hop_snr("x"), cfg.hop_snr("y"))]
    return [(v, v / cfg.snr_ratio) for v in cfg.sweep.values()]


def _capacity_row(cfg: RunConfig, snr_x: float, snr_y: float) -> dict:
    row = {"snr_db": linear_to_db(snr_x), "snr_x": snr_x, "snr_y": snr_y, "status": "ok"}
    schemes = cfg.schemes()
    b = cfg.bandwidth
    try:
        dist = cfg.distribution(snr_x, snr_y)
        if "ora" in schemes:
            row["c_ora"] = b * capacity_ora(dist, cross_check=False).capacity
        if "opra" in schemes:
            res = capacity_opra(dist, cross_check=False)
            row["c_opra"], row["gamma0"] = b * res.capacity, res.cutoff
        if "tifr" in schemes:
            if cfg.beta0 is None:
                res = optimize_tifr_cutoff(dist, cross_check=False)
            else:
                res = capacity_tifr(dist, cfg.beta0, cross_check=False)
            row["c_tifr_opt"], row["beta0_opt"], row["p_out"] = (
                b * res.capacity, res.cutoff, res.outage_probability)
        if cfg.mc_samples:
            est = estimate_capacity(dist, "ORA", cfg.seed, cfg.mc_samples)
            row["c_mc"], row["c_mc_stderr"] = b * est.value, b * est.standard_error
    except (NumericalError, DomainError) as exc:
        row["status"] = f"error: {exc}"
    return row


def _map_rows(func, cfg, points):
    if cfg.jobs > 1 and len(points) > 1:
        with ProcessPoolExecutor(cfg.jobs) as pool:
            return list(pool.map(func, [cfg] * len(points), *zip(*points)))
    return [func(cfg, x, y) for x, y in points]


def cmd_capacity(cfg: RunConfig) -> tuple[list[str], list[dict]]:
    return CAPACITY_COLUMNS, _map_rows(_capacity_row, cfg, _sweep_points(cfg))


CUTOFF_COLUMNS = ["snr_db", "snr_x", "snr_y", "gamma0", "cutoff_residual", "beta0_opt", "p_out", "status"]


def cutoff_residual_quadrature(dist: MinSnrDistribution, gamma0: float) -> float:
    """Left side minus one of the cutoff condition, by direct quadrature."""
    value, _ = quadrature_expectation(dist, lambda g: 1.0 / gamma0 - 1.0 / g, lower=gamma0)
    return value - 1.0


def _cutoff_row(cfg: RunConfig, snr_x: float, snr_y: float) -> dict:
    row = {"snr_db": linear_to_db(snr_x), "snr_x": snr_x, "snr_y": snr_y, "status": "ok"}
    try:
        dist = cfg.distribution(snr_x, snr_y)
        g0 = opra_cutoff(dist)
        row["gamma0"], row["cutoff_residual"] = g0, cutoff_residual_quadrature(dist, g0)
        res = optimize_tifr_cutoff(dist, cross_check=False)
        row["beta0_opt"], row["p_out"] = res.cutoff, res.outage_probability
    except (NumericalError, DomainError) as exc:
        row["status"] = f"error: {exc}"
    return row


def cmd_cutoff(cfg: RunConfig) -> tuple[list[str], list[dict]]:
    return CUTOFF_COLUMNS, _map_rows(_cutoff_row, cfg, _sweep_points(cfg))


VALIDATE_COLUMNS = ["check", "analytic", "reference", "statistic", "threshold", "passed"]
BACKEND_TOLERANCE = 1e-6
Z_LIMIT = 3.0


def cmd_validate(cfg: RunConfig) -> tuple[list[str], list[dict], bool]:
    """Analytic results against quadrature (relative gap) and Monte Carlo (z-score)."""
    if cfg.mc_samples and cfg.mc_samples < 100_000:
        raise ConfigError("validate needs mc-samples >= 100000")
    n = cfg.mc_samples or 1_000_000
    dist = cfg.distribution()
    rows = []

    def backend(name, analytic, reference):
        gap = abs(analytic - reference) / max(abs(reference), 1e-300)
        rows.append({"check": f"backend:{name}", "analytic": analytic, "reference": reference,
                     "statistic": gap, "threshold": BACKEND_TOLERANCE,
                     "passed": bool(gap <= BACKEND_TOLERANCE)})

    def monte_carlo(name, analytic, est):
        z = est.z_score(analytic)
        rows.append({"check": f"mc:{name}", "analytic": analytic, "reference": est.value,
                     "statistic": z, "threshold": Z_LIMIT, "passed": bool(abs(z) <= Z_LIMIT)})

    scale = min(dist.hop_x.mean_snr, dist.hop_y.mean_snr)
    grid = scale * np.array([0.1, 0.25, 0.5, 1.0, 2.0])
    for g in grid:
        backend(f"survival@{g:.6g}", dist.survival(g), reference_min_survival(dist, g))

    ora = capacity_ora(dist, backend="series", cross_check=False).capacity
    ora_q = capacity_ora(dist, backend="quadrature", cross_check=False).capacity
    backend("ora", ora, ora_q)
    opra = capacity_opra(dist, cross_check=False)
    backend("opra", opra.capacity, capacity_opra(dist, backend="quadrature", cross_check=False).capacity)
    tifr = optimize_tifr_cutoff(dist, cross_check=False)
    backend("tifr", tifr.capacity,
            capacity_tifr(dist, tifr.cutoff, backend="quadrature", cross_check=False).capacity)
    residual = cutoff_residual_quadrature(dist, opra.cutoff)
    rows.append({"check": "cutoff:residual", "analytic": opra.cutoff, "reference": residual,
                 "statistic": abs(residual), "threshold": 1e-8, "passed": bool(abs(residual) <= 1e-8)})

    for g, est in zip(grid, estimate_min_cdf(dist, grid, cfg.seed, n)):
        monte_carlo(f"cdf@{g:.6g}", dist.cdf(g), est)
    monte_carlo("ora", ora, estimate_capacity(dist, "ORA", cfg.seed, n))
    monte_carlo("opra", opra.capacity, estimate_capacity(dist, "OPRA", cfg.seed, n, cutoff=opra.cutoff))
    monte_carlo("tifr", tifr.capacity, estimate_capacity(dist, "TIFR", cfg.seed, n, cutoff=tifr.cutoff))
    return VALIDATE_COLUMNS, rows, all(r["passed"] for r in rows)


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value file; flags override it")
    common.add_argument("--kx", type=float, help="K factor of the source-relay hop")
    common.add_argument("--ky", type=float, help="K factor of the relay-destination hop")
    common.add_argument("--snr-x", dest="snr_x", type=float, help="mean SNR of hop x (linear)")
    common.add_argument("--snr-y", dest="snr_y", type=float, help="mean SNR of hop y (linear)")
    common.add_argument("--snr-x-db", dest="snr_x_db", type=float, help="mean SNR of hop x (dB)")
    common.add_argument("--snr-y-db", dest="snr_y_db", type=float, help="mean SNR of hop y (dB)")
    common.add_argument("--snr-ratio", dest="snr_ratio", type=float,
                        help="in sweeps, mean SNR of hop y is the swept value divided by this")
    common.add_argument("--sweep", help="start:stop:points[:db]")
    common.add_argument("--scheme", help="ora|opra|tifr|all, comma separated")
    common.add_argument("--beta0", type=float, help="fixed TIFR cutoff (default: optimize over (0, 1])")
    common.add_argument("--terms", type=int, help="maximum series terms per hop")
    common.add_argument("--tol", type=float, help="series truncation tolerance")
    common.add_argument("--compare-terms", dest="compare_terms",
                        help="comma-separated term caps for extra CDF columns (dist)")
    common.add_argument("--mc-samples", dest="mc_samples", type=int, help="Monte Carlo samples (0 = off)")
    common.add_argument("--seed", type=int, help="Monte Carlo seed")
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--bandwidth", type=float, help="scale capacities by this bandwidth (Hz)")
    common.add_argument("--jobs", type=int, help="worker processes for sweeps")

    parser = argparse.ArgumentParser(
        prog="dfrelay",
        description="Dual-hop decode-and-forward capacity over dissimilar Rician fading.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("dist", parents=[common], help="CDF/PDF table of the weaker-hop SNR")
    sub.add_parser("capacity", parents=[common], help="capacity sweep for ORA/OPRA/TIFR")
    sub.add_parser("cutoff", parents=[common], help="OPRA cutoff and optimized TIFR cutoff")
    sub.add_parser("validate", parents=[common], help="analytic vs quadrature and Monte Carlo report")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = build_config(args)
        if args.command == "validate":
            columns, rows, ok = cmd_validate(cfg)
            _emit(render_table("validate", columns, rows, cfg.format), cfg.out)
            return EXIT_OK if ok else EXIT_VALIDATION
        command = {"dist": cmd_dist, "capacity": cmd_capacity, "cutoff": cmd_cutoff}[args.command]
        columns, rows = command(cfg)
        _emit(render_table(args.command, columns, rows, cfg.format), cfg.out)
    except ConfigError as exc:
        print(f"dfrelay: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"dfrelay: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
