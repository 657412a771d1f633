"""Seeded replicate execution, aggregation, bound audits and result files."""

from __future__ import annotations

import csv
import io
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .baselines import run_mergerucb, run_selfsparring
from .core import EnvDiagnostics, PreferenceMatrix, RegretLedger, RunConfig
from .environments import atomic_write_text, build_environment
from .errors import InvalidParameterError, ReplicateError
from .mergedts import run as run_mergedts
from .mergedts import theorem_bound

log = logging.getLogger(__name__)

RUNNERS = {
    "MergeDTS": run_mergedts,
    "MergeRUCB": run_mergerucb,
    "SelfSparring": run_selfsparring,
}


def checkpoint_schedule(t_horizon: int, n_points: int) -> list[int]:
    """Roughly geometric steps from max(1, ceil(T / 1e4)) up to T inclusive.

    Rounded points that collide are pushed up by one, so short horizons
    saturate to every step rather than losing points.
    """
    if n_points < 1 or t_horizon < 1:
        raise InvalidParameterError("horizon and checkpoint count must be positive")
    if n_points == 1:
        return [int(t_horizon)]
    if t_horizon < n_points:
        raise InvalidParameterError("horizon must be at least the number of checkpoints")
    start = max(1, math.ceil(t_horizon / 1e4))
    n = min(n_points, t_horizon - start + 1)
    raw = np.geomspace(start, t_horizon, n)
    out: list[int] = []
    for idx, x in enumerate(raw):
        v = max(int(round(x)), out[-1] + 1 if out else start)
        v = min(v, t_horizon - (n - 1 - idx))
        out.append(v)
    out[-1] = int(t_horizon)
    return out


def default_threads() -> int:
    env = os.environ.get("DUELBENCH_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_single(config: RunConfig, env: PreferenceMatrix, replicate: int = 0, schedule=None) -> RegretLedger:
    if schedule is None:
        schedule = checkpoint_schedule(config.horizon, config.checkpoint_count)
    seed = (config.base_seed + replicate) % 2**64
    return RUNNERS[config.algorithm](config, env, seed=seed, schedule=schedule)


def run_replicates(
    config: RunConfig,
    env: Optional[PreferenceMatrix] = None,
    threads: Optional[int] = None,
    schedule: Optional[Sequence[int]] = None,
) -> list[RegretLedger]:
    """Replicate r uses seed base_seed + r; results come back in replicate order.

    ``schedule`` overrides the geometric checkpoint schedule; it must end at
    the horizon.
    """
    if env is None:
        env = build_environment(config.env)
    if schedule is None:
        schedule = checkpoint_schedule(config.horizon, config.checkpoint_count)
    elif int(schedule[-1]) != config.horizon:
        raise InvalidParameterError("a custom schedule must end at the horizon")
    threads = default_threads() if threads is None else max(1, threads)

    def one(r: int) -> RegretLedger:
        try:
            return run_single(config, env, r, schedule)
        except Exception as exc:  # noqa: BLE001 - re-raised with the replicate index
            raise ReplicateError(r, exc) from exc

    if threads == 1 or config.replicates == 1:
        return [one(r) for r in range(config.replicates)]
    with ThreadPoolExecutor(max_workers=min(threads, config.replicates)) as pool:
        return list(pool.map(one, range(config.replicates)))


@dataclass(frozen=True)
class AggregateSeries:
    checkpoints: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    n: int

    @property
    def final_mean(self) -> float:
        return float(self.mean[-1])

    @property
    def final_stderr(self) -> float:
        return float(self.stderr[-1])


def aggregate(ledgers: Sequence[RegretLedger]) -> AggregateSeries:
    """Per-checkpoint mean and standard error (n - 1 denominator; 0 for one ledger)."""
    if not ledgers:
        raise InvalidParameterError("need at least one ledger")
    steps = ledgers[0].steps
    for lg in ledgers[1:]:
        if not np.array_equal(lg.steps, steps):
            raise InvalidParameterError("ledgers do not share a checkpoint schedule")
    data = np.vstack([lg.cum_regret for lg in ledgers])
    n = len(ledgers)
    mean = data.mean(axis=0)
    if n == 1:
        se = np.zeros_like(mean)
    else:
        se = data.std(axis=0, ddof=1) / math.sqrt(n)
    return AggregateSeries(steps.copy(), mean, se, n)


@dataclass
class BoundReport:
    applicable: bool
    bound: Optional[float] = None
    expected_bound: Optional[float] = None
    below: list[bool] = field(default_factory=list)
    violations: int = 0
    allowed: int = 0
    passed: bool = False
    message: str = ""


def bound_audit(config: RunConfig, ledgers: Sequence[RegretLedger], diag: EnvDiagnostics) -> BoundReport:
    """Check each ledger's final regret against the high-probability bound.

    Passing tolerates up to ceil(eps * n) + 1 violations.
    """
    finals = [lg.final_regret for lg in ledgers]
    n = len(finals)
    if not config.alpha > 0.5:
        return BoundReport(False, message=f"bound not applicable: alpha={config.alpha:g} <= 0.5")
    eps = config.failure_probability
    allowed = math.ceil(eps * n) + 1
    if diag.k == 1:
        below = [f == 0.0 for f in finals]
        v = below.count(False)
        return BoundReport(True, 0.0, 1.0, below, v, allowed, v <= allowed, "single ranker: regret is zero")
    if diag.delta_min is None:
        return BoundReport(False, message="bound not applicable: no distinguishable pair")
    bound = theorem_bound(config.alpha, config.batch_size, diag.k, config.horizon, eps, diag.delta_min)
    below = [f < bound for f in finals]
    v = below.count(False)
    ok = v <= allowed
    return BoundReport(
        True,
        bound,
        bound + 1.0,
        below,
        v,
        allowed,
        ok,
        f"{v} of {n} replicates at or above the bound {bound:.6g} (allowed {allowed})",
    )


# ---------------------------------------------------------------------------
# CSV formats


def results_csv_text(ledgers: Sequence[RegretLedger]) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["replicate", "step", "cum_regret"])
    for r, lg in enumerate(ledgers):
        for s, c in zip(lg.steps, lg.cum_regret):
            wr.writerow([r, int(s), repr(float(c))])
    return buf.getvalue()


def write_results_csv(ledgers: Sequence[RegretLedger], path) -> None:
    atomic_write_text(path, results_csv_text(ledgers))


def read_results_csv(path) -> list[RegretLedger]:
    rows: dict[int, list[tuple[int, float]]] = {}
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        if rd.fieldnames != ["replicate", "step", "cum_regret"]:
            raise InvalidParameterError(f"{path}: unexpected header {rd.fieldnames}")
        for row in rd:
            rows.setdefault(int(row["replicate"]), []).append((int(row["step"]), float(row["cum_regret"])))
    ledgers = []
    for r in sorted(rows):
        pts = rows[r]
        steps = [s for s, _ in pts]
        ledgers.append(RegretLedger(steps, [c for _, c in pts], steps[-1]))
    return ledgers


def aggregate_csv_text(series: AggregateSeries) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["step", "mean", "stderr", "n"])
    for s, m, e in zip(series.checkpoints, series.mean, series.stderr):
        wr.writerow([int(s), repr(float(m)), repr(float(e)), series.n])
    return buf.getvalue()


def write_aggregate_csv(series: AggregateSeries, path) -> None:
    atomic_write_text(path, aggregate_csv_text(series))


def timed_replicates(config: RunConfig, env=None, threads=None) -> tuple[list[RegretLedger], float]:
    """run_replicates plus aggregate steps per second of wall time."""
    t0 = time.perf_counter()
    ledgers = run_replicates(config, env, threads)
    dt = time.perf_counter() - t0
    return ledgers, config.horizon * config.replicates / dt if dt > 0 else float("inf")
