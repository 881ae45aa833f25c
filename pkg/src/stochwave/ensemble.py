"""Reproducible Monte Carlo ensembles: execution, reduction, persistence.

Paths are independent work units.  Path k draws its noise from a
counter-based stream keyed by ``(master_seed, k)``, so the ensemble output is
a pure function of the configuration and the master seed no matter how the
paths are scheduled.  Aggregation walks the paths in index order with
compensated (Kahan) summation, which makes the reduction deterministic and
independent of completion order.

Paths that stop early stay in the blow-up statistics but drop out of the
energy means from their stopping time on; the number of live paths at each
grid time is part of the output.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dynamics import (
    STATUS_COMPLETED,
    TRAJECTORY_COLUMNS,
    SimConfig,
    StopInfo,
    TrajectoryRecord,
    read_trajectory_csv,
    simulate_path,
)

__all__ = [
    "EnsembleConfig",
    "EnsembleStats",
    "EnsembleResult",
    "SupEnergyEstimate",
    "run_ensemble",
    "aggregate_records",
    "estimate_blowup_probability",
    "sup_energy_estimate",
    "save_run",
    "load_run_records",
]

WORKERS_ENV_VAR = "STOCHWAVE_WORKERS"

_SERIES_NAMES = TRAJECTORY_COLUMNS[1:]


@dataclass(frozen=True)
class EnsembleConfig:
    """Monte Carlo run: base simulation, path count, master seed, record stride."""

    base: SimConfig
    paths: int
    master_seed: int = 0
    record_stride: int = 1

    def __post_init__(self):
        if self.paths < 1:
            raise ValueError(f"path count must be >= 1, got {self.paths}")
        if self.record_stride < 1:
            raise ValueError(f"record_stride must be >= 1, got {self.record_stride}")


@dataclass
class EnsembleStats:
    """Per-grid-time means and standard errors over live paths.

    ``alive[j]`` counts the paths contributing at grid time j; means and
    standard errors are NaN once no path is live.  ``blowup_fraction`` is the
    nondecreasing fraction of paths stopped by each grid time.
    """

    t: np.ndarray
    alive: np.ndarray
    blowup_fraction: np.ndarray
    means: dict[str, np.ndarray]
    ses: dict[str, np.ndarray]
    path_max_e: np.ndarray
    path_stops: list[StopInfo]
    paths: int


@dataclass
class EnsembleResult:
    stats: EnsembleStats
    records: list[TrajectoryRecord]
    config: EnsembleConfig


@dataclass(frozen=True)
class SupEnergyEstimate:
    """Sample mean over completed paths of the per-path maximum total energy."""

    value: float
    stderr: float
    n_used: int
    n_excluded: int


def _kahan_add(acc: np.ndarray, comp: np.ndarray, x: np.ndarray) -> None:
    n = x.shape[0]
    y = x - comp[:n]
    t = acc[:n] + y
    comp[:n] = (t - acc[:n]) - y
    acc[:n] = t


def aggregate_records(records: list[TrajectoryRecord], dt: float, record_stride: int) -> EnsembleStats:
    """Deterministic reduction of per-path records onto the common time grid."""
    n_t = max(rec.aligned_rows for rec in records)
    t = np.arange(n_t) * (dt * record_stride)
    counts = np.zeros(n_t, dtype=int)
    acc = {name: np.zeros(n_t) for name in _SERIES_NAMES}
    comp = {name: np.zeros(n_t) for name in _SERIES_NAMES}
    for rec in records:
        n = rec.n_live_rows
        counts[:n] += 1
        for name in _SERIES_NAMES:
            _kahan_add(acc[name], comp[name], rec.series[name][:n])
    with np.errstate(invalid="ignore", divide="ignore"):
        means = {name: np.where(counts > 0, acc[name] / counts, np.nan) for name in _SERIES_NAMES}

    acc2 = {name: np.zeros(n_t) for name in _SERIES_NAMES}
    comp2 = {name: np.zeros(n_t) for name in _SERIES_NAMES}
    for rec in records:
        n = rec.n_live_rows
        for name in _SERIES_NAMES:
            d = rec.series[name][:n] - means[name][:n]
            _kahan_add(acc2[name], comp2[name], d * d)
    ses = {}
    with np.errstate(invalid="ignore", divide="ignore"):
        for name in _SERIES_NAMES:
            var = np.where(counts > 1, acc2[name] / np.maximum(counts - 1, 1), 0.0)
            ses[name] = np.where(counts > 0, np.sqrt(var / np.maximum(counts, 1)), np.nan)

    r = len(records)
    stop_times = np.array(
        [rec.stop.time if rec.stop.status != STATUS_COMPLETED else np.inf for rec in records]
    )
    blowup_fraction = np.array([(stop_times <= tk).sum() / r for tk in t])
    return EnsembleStats(
        t=t,
        alive=counts,
        blowup_fraction=blowup_fraction,
        means=means,
        ses=ses,
        path_max_e=np.array([rec.max_e_total for rec in records]),
        path_stops=[rec.stop for rec in records],
        paths=r,
    )


def _run_one(args) -> TrajectoryRecord:
    cfg, master_seed, k, stride = args
    return simulate_path(cfg, master_seed, path_index=k, record_stride=stride)


def resolve_workers(workers: int | None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get(WORKERS_ENV_VAR)
    if env:
        return max(1, int(env))
    return 1


def run_ensemble(
    cfg: EnsembleConfig,
    workers: int | None = None,
    out_dir=None,
    config_payload: dict | None = None,
) -> EnsembleResult:
    """Run the paths, reduce deterministically, and optionally persist.

    ``workers`` defaults to the STOCHWAVE_WORKERS environment variable, then
    to serial execution.  The output is identical for every worker count.
    When ``out_dir`` is given, per-path CSVs and the aggregate are written
    there together with ``config.json`` (built from ``config_payload`` when
    provided).
    """
    workers = resolve_workers(workers)
    tasks = [(cfg.base, cfg.master_seed, k, cfg.record_stride) for k in range(cfg.paths)]
    if workers > 1 and cfg.paths > 1:
        with ProcessPoolExecutor(max_workers=min(workers, cfg.paths)) as ex:
            records = list(ex.map(_run_one, tasks))
    else:
        records = [_run_one(task) for task in tasks]
    stats = aggregate_records(records, cfg.base.dt, cfg.record_stride)
    result = EnsembleResult(stats=stats, records=records, config=cfg)
    if out_dir is not None:
        save_run(result, out_dir, config_payload)
    return result


def estimate_blowup_probability(stats: EnsembleStats, T: float) -> tuple[float, float]:
    """Blow-up fraction by time T with its 95% normal-approximation half width."""
    idx = int(np.searchsorted(stats.t, T, side="right")) - 1
    phat = float(stats.blowup_fraction[max(idx, 0)]) if stats.t.size else 0.0
    half = 1.96 * math.sqrt(phat * (1.0 - phat) / stats.paths)
    return phat, half


def sup_energy_estimate(stats: EnsembleStats) -> SupEnergyEstimate:
    """Mean over completed paths of the running maximum of the total energy.

    Paths that stopped early are excluded (the energy bound is a theorem only
    in the dissipation-dominated regime) and counted in ``n_excluded``.
    """
    completed = np.array([s.status == STATUS_COMPLETED for s in stats.path_stops])
    values = stats.path_max_e[completed]
    n = int(values.size)
    if n == 0:
        return SupEnergyEstimate(math.nan, math.nan, 0, stats.paths)
    mean = float(np.mean(values))
    stderr = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return SupEnergyEstimate(mean, stderr, n, stats.paths - n)


# -- persistence -------------------------------------------------------------


def _write_aggregate_csv(path, stats: EnsembleStats) -> None:
    names = list(_SERIES_NAMES)
    with open(path, "w", newline="") as fh:
        fh.write("# stochwave aggregate v1\n")
        fh.write(f"# paths={stats.paths}\n")
        header = ["t", "alive", "blowup_fraction"]
        for name in names:
            header += [f"mean_{name}", f"se_{name}"]
        fh.write(",".join(header) + "\n")
        for j in range(stats.t.size):
            row = [repr(float(stats.t[j])), str(int(stats.alive[j])), repr(float(stats.blowup_fraction[j]))]
            for name in names:
                row += [repr(float(stats.means[name][j])), repr(float(stats.ses[name][j]))]
            fh.write(",".join(row) + "\n")


def save_run(result: EnsembleResult, out_dir, config_payload: dict | None = None) -> None:
    """Write config.json, per-path CSVs, and the aggregate CSV to a run directory."""
    import json
    from pathlib import Path

    out = Path(out_dir)
    try:
        (out / "paths").mkdir(parents=True, exist_ok=True)
        payload = dict(config_payload) if config_payload is not None else {}
        payload.setdefault("code_version", _code_version())
        with open(out / "config.json", "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        for rec in result.records:
            rec.to_csv(out / "paths" / f"path_{rec.path_index:05d}.csv")
        _write_aggregate_csv(out / "aggregate.csv", result.stats)
    except OSError as exc:
        raise RuntimeError(f"failed to persist run to {out}: {exc}") from exc


def load_run_records(run_dir) -> list[TrajectoryRecord]:
    """Read back every per-path CSV of a persisted run, in path order."""
    from pathlib import Path

    paths_dir = Path(run_dir) / "paths"
    files = sorted(paths_dir.glob("path_*.csv"))
    if not files:
        raise FileNotFoundError(f"no per-path CSVs under {paths_dir}")
    return [read_trajectory_csv(f) for f in files]


def _code_version() -> str:
    from . import __version__

    return __version__
