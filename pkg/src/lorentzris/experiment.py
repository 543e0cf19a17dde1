"""Monte Carlo harness comparing the wideband design with flat benchmarks.

Every (SNR, N, trial) cell draws one channel realization and runs all four
methods on it:

``proposed``         BCD + PDD design of the Lorentzian parameters.
``flat_benchmark``   the frequency-flat optimizer, rated by its own model.
``flat_lorentzian``  the flat design realized by passive Lorentzian elements
                     matched at the center bin.
``baseline_flat``    the flat design applied identically on every bin
                     (what a narrowband design expects; not achievable).

Per-cell seeds come from ``SeedSequence([seed, snr_index, n_index, trial])``
so any cell can be replayed alone.  User positions come from
``default_rng([seed])`` and are shared by all cells.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

import numpy as np

from .baseline import FlatOptions, baseline_flat_rate, flat_to_lorentzian, optimize_flat
from .bcd import BCDConfig, run_bcd
from .channel import Dims, Geometry, sample_taps, taps_to_frequency
from .lorentzian import FrequencyGrid, ParamBounds, evaluate_response
from .pdd import PDDOptions
from .rate import sum_rate

log = logging.getLogger(__name__)

METHODS = ("proposed", "flat_benchmark", "flat_lorentzian", "baseline_flat")
ROW_COLUMNS = (
    "method",
    "snr_db",
    "n_elements",
    "trial",
    "rate_bps_hz",
    "pdd_violation",
    "outer_iters",
    "converged",
    "channel_digest",
)
AGG_COLUMNS = ("method", "snr_db", "n_elements", "trials", "mean_rate_bps_hz", "stderr_bps_hz", "converged_fraction")
SNR_COLUMNS = ("method", "n_elements", "snr_db", "mean_rate_bps_hz", "stderr_bps_hz")
N_COLUMNS = ("method", "snr_db", "n_elements", "mean_rate_bps_hz", "stderr_bps_hz")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    n_users: int = 2
    n_rx: int = 4
    n_elements: tuple = (8,)
    n_bins: int = 8
    n_taps: int = 4
    snr_db: tuple = (0.0, 5.0, 10.0, 15.0)
    trials: int = 20
    seed: int = 0
    bs_position: tuple = (0.0, 0.0)
    ris_position: tuple = (15.0, 12.5)
    ut_center: tuple = (15.0, 17.5)
    ut_radius: float = 3.0
    alpha_ris: float = 2.2
    alpha_direct: float = 3.0
    f_min: float = 1e-6
    omega_max: float = 2 * np.pi
    kappa_max: float = 100.0
    bcd_eps: float = 1e-3
    bcd_max_iter: int = 20
    eps_in: float = 1e-4
    eps_out: float = 1e-5
    mu: float = 0.85
    rho0: float = 1.0
    pdd_max_outer: int = 300
    flat_max_iter: int = 500
    flat_eps: float = 1e-6
    workers: int = 1
    out_dir: str = "results"
    verbose: bool = field(default=False, compare=False)

    def __post_init__(self):
        for name in ("n_elements", "snr_db", "bs_position", "ris_position", "ut_center"):
            val = getattr(self, name)
            if np.isscalar(val):
                val = (val,)
            object.__setattr__(self, name, tuple(val))
        object.__setattr__(self, "n_elements", tuple(int(n) for n in self.n_elements))
        object.__setattr__(self, "snr_db", tuple(float(s) for s in self.snr_db))
        counts = (self.n_users, self.n_rx, self.n_bins, self.n_taps, self.trials, self.workers)
        if min(counts) < 1 or min(self.n_elements, default=0) < 1:
            raise ConfigError("all counts must be >= 1")
        if not self.snr_db:
            raise ConfigError("snr_db must be non-empty")
        if min(self.bcd_eps, self.eps_in, self.eps_out, self.rho0, self.flat_eps) <= 0:
            raise ConfigError("tolerances and rho0 must be positive")
        if not 0 < self.mu < 1:
            raise ConfigError("mu must lie in (0, 1)")
        if len(self.bs_position) != 2 or len(self.ris_position) != 2 or len(self.ut_center) != 2:
            raise ConfigError("positions must be 2-D")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**d)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError:
            raise
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a JSON object")
        return cls.from_dict(data)

    @classmethod
    def profile(cls, name: str) -> "ExperimentConfig":
        try:
            text = resources.files("lorentzris.configs").joinpath(f"{name}.json").read_text()
        except FileNotFoundError as exc:
            raise ConfigError(f"unknown profile {name!r}") from exc
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("verbose")
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    def bounds(self) -> ParamBounds:
        return ParamBounds(f_min=self.f_min, omega_max=self.omega_max, kappa_max=self.kappa_max)

    def bcd_config(self, seed) -> BCDConfig:
        pdd = PDDOptions(
            rho0=self.rho0,
            mu=self.mu,
            eps_in=self.eps_in,
            eps_out=self.eps_out,
            max_outer=self.pdd_max_outer,
            bounds=self.bounds(),
        )
        return BCDConfig(eps=self.bcd_eps, max_iter=self.bcd_max_iter, pdd=pdd, seed=seed)

    def geometry(self) -> Geometry:
        rng = np.random.default_rng([self.seed])
        return Geometry.random_users(
            self.n_users,
            rng,
            center=self.ut_center,
            radius=self.ut_radius,
            bs=self.bs_position,
            ris=self.ris_position,
            alpha_ris=self.alpha_ris,
            alpha_direct=self.alpha_direct,
        )


def trial_seed(seed: int, snr_index: int, n_index: int, trial: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, snr_index, n_index, trial])


def evaluate_methods(freq, grid: FrequencyGrid, config: ExperimentConfig, init_seed, flat_seed) -> dict:
    """Run all four methods on one channel set; returns {method: fields}."""
    bcd = run_bcd(freq, grid, config.bcd_config(init_seed))
    flat = optimize_flat(freq, FlatOptions(max_iter=config.flat_max_iter, eps=config.flat_eps, seed=flat_seed))
    flat_params = flat_to_lorentzian(flat, grid, bounds=config.bounds(), passive=True)
    flat_fields = {"pdd_violation": float("nan"), "outer_iters": flat.iterations, "converged": flat.converged}
    return {
        "proposed": {
            "rate_bps_hz": float(bcd.rate.bits),
            "pdd_violation": float(bcd.pdd_violation),
            "outer_iters": bcd.iterations,
            "converged": bool(bcd.converged and bcd.pdd_converged),
        },
        "flat_benchmark": dict(flat_fields, rate_bps_hz=float(sum_rate(freq, flat.profile(freq.n_bins)).bits)),
        "flat_lorentzian": dict(
            flat_fields, rate_bps_hz=float(sum_rate(freq, evaluate_response(flat_params, grid)).bits)
        ),
        "baseline_flat": dict(flat_fields, rate_bps_hz=float(baseline_flat_rate(freq, flat).bits)),
    }


def trial_channels(config: ExperimentConfig, snr_index: int, n_index: int, trial: int):
    """(channels, grid, init seed, flat seed) for one cell."""
    ch_seed, init_seed, flat_seed = trial_seed(config.seed, snr_index, n_index, trial).spawn(3)
    grid = FrequencyGrid.dft(config.n_bins)
    dims = Dims(config.n_rx, config.n_elements[n_index], config.n_users, config.n_taps)
    taps = sample_taps(config.geometry(), dims, ch_seed)
    freq = taps_to_frequency(taps, grid, 10 ** (-config.snr_db[snr_index] / 10))
    return freq, grid, init_seed, flat_seed


def run_trial(config: ExperimentConfig, snr_index: int, n_index: int, trial: int) -> list[dict]:
    """All four methods on one channel draw; returns rows in METHODS order."""
    freq, grid, init_seed, flat_seed = trial_channels(config, snr_index, n_index, trial)
    results = evaluate_methods(freq, grid, config, init_seed, flat_seed)
    common = {
        "snr_db": config.snr_db[snr_index],
        "n_elements": config.n_elements[n_index],
        "trial": trial,
        "channel_digest": freq.digest(),
    }
    rows = [dict(common, method=m, **results[m]) for m in METHODS]
    if config.verbose:
        log.info(json.dumps({**{k: common[k] for k in ("snr_db", "n_elements", "trial")},
                             "rates": {m: round(results[m]["rate_bps_hz"], 4) for m in METHODS}}))
    return rows


def _run_cell(args):
    return run_trial(*args)


def run_experiment(config: ExperimentConfig) -> list[dict]:
    """Rows ordered by (SNR index, N index, trial, method)."""
    cells = [
        (config, si, ni, t)
        for si in range(len(config.snr_db))
        for ni in range(len(config.n_elements))
        for t in range(config.trials)
    ]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_run_cell, cells))
    else:
        results = [_run_cell(c) for c in cells]
    return [row for cell_rows in results for row in cell_rows]


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def write_csv(path: Path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])


def aggregate(rows: list[dict]) -> list[dict]:
    groups: dict = {}
    for row in rows:
        groups.setdefault((row["method"], row["snr_db"], row["n_elements"]), []).append(row)
    out = []
    order = {m: i for i, m in enumerate(METHODS)}
    for key in sorted(groups, key=lambda k: (order.get(k[0], len(order)), k[2], k[1])):
        vals = np.array([r["rate_bps_hz"] for r in groups[key]])
        stderr = float(np.std(vals, ddof=1) / np.sqrt(vals.size)) if vals.size > 1 else 0.0
        out.append({
            "method": key[0],
            "snr_db": key[1],
            "n_elements": key[2],
            "trials": int(vals.size),
            "mean_rate_bps_hz": float(np.mean(vals)),
            "stderr_bps_hz": stderr,
            "converged_fraction": float(np.mean([r["converged"] for r in groups[key]])),
        })
    return out


def save_results(rows: list[dict], config: ExperimentConfig, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "results.csv", ROW_COLUMNS, rows)
    write_csv(out / "aggregate.csv", AGG_COLUMNS, aggregate(rows))
    (out / "config.json").write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n")
    manifest = {"created": time.strftime("%Y-%m-%dT%H:%M:%S%z"), "rows": len(rows)}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return out


def read_aggregate(in_dir) -> list[dict]:
    path = Path(in_dir) / "aggregate.csv"
    if not path.exists():
        raise FileNotFoundError(f"no aggregate table at {path}")
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        r["snr_db"] = float(r["snr_db"])
        r["n_elements"] = int(r["n_elements"])
        r["mean_rate_bps_hz"] = float(r["mean_rate_bps_hz"])
        r["stderr_bps_hz"] = float(r["stderr_bps_hz"])
    return rows


def emit_plot_data(in_dir, out_dir) -> tuple[Path, Path]:
    """Write rate_vs_snr.csv and rate_vs_n.csv from the aggregate table.

    Values are copied from the aggregate as-is.
    """
    agg = read_aggregate(in_dir)
    order = {m: i for i, m in enumerate(METHODS)}
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    by_snr = sorted(agg, key=lambda r: (order.get(r["method"], 99), r["n_elements"], r["snr_db"]))
    by_n = sorted(agg, key=lambda r: (order.get(r["method"], 99), r["snr_db"], r["n_elements"]))
    snr_path, n_path = out / "rate_vs_snr.csv", out / "rate_vs_n.csv"
    write_csv(snr_path, SNR_COLUMNS, by_snr)
    write_csv(n_path, N_COLUMNS, by_n)
    return snr_path, n_path
