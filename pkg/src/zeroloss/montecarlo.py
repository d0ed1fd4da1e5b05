"""Repeated train/test trials on the disk problem and their summary statistics."""

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np

from .errors import NoRecords, PreconditionError, UpdateBudgetExceeded
from .geometry import DiskProblem, FeatureMap, estimate_true_error, sample_points
from .perceptron import TrainConfig, train

MASK64 = (1 << 64) - 1

STATUS_OK = "ok"
STATUS_BUDGET = "update_budget_exceeded"

RECORD_FIELDS = ("n", "trial_index", "trial_seed", "test_error", "updates", "status")


def splitmix64(x: int) -> int:
    """One SplitMix64 step: add the golden-ratio increment, then avalanche."""
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def trial_seed(master_seed: int, n: int, trial_index: int) -> int:
    s = splitmix64(master_seed & MASK64)
    s = splitmix64(s ^ (n & MASK64))
    return splitmix64(s ^ (trial_index & MASK64))


@dataclass(frozen=True)
class ExperimentConfig:
    n_values: Sequence[int]
    trials_per_n: int = 10000
    test_count: int = 100000
    feature_map: FeatureMap = field(default_factory=FeatureMap.identity)
    master_seed: int = 0
    epsilons: Sequence[float] = (0.05, 0.1)
    quantiles: Sequence[float] = (0.25, 0.5, 0.75)
    max_updates: int = 1_000_000

    def __post_init__(self):
        if not self.n_values or any(n < 1 for n in self.n_values):
            raise PreconditionError("n_values must be a non-empty list of integers >= 1")
        if self.trials_per_n < 1:
            raise PreconditionError("trials_per_n must be >= 1")
        if self.test_count < 1:
            raise PreconditionError("test_count must be >= 1")
        _check_open_unit("epsilons", self.epsilons)
        _check_open_unit("quantiles", self.quantiles)
        if any(b <= a for a, b in zip(self.epsilons, self.epsilons[1:])):
            raise PreconditionError("epsilons must be strictly increasing")


def _check_open_unit(name, values):
    if any(not 0.0 < v < 1.0 for v in values):
        raise PreconditionError(f"{name} must lie in (0, 1)")


@dataclass(frozen=True)
class TrialRecord:
    n: int
    trial_index: int
    trial_seed: int
    test_error: float
    updates: int
    status: str = STATUS_OK

    @property
    def ok(self):
        return self.status == STATUS_OK


@dataclass(frozen=True)
class SummaryRow:
    n: int
    trials: int
    failed: int
    mean: float
    std: float
    quantile_values: Dict[float, float]
    exceed_fractions: Dict[float, float]


def run_trial(config: ExperimentConfig, problem: DiskProblem, n: int, index: int) -> TrialRecord:
    seed = trial_seed(config.master_seed, n, index)
    rng = np.random.default_rng(seed)
    pts = sample_points(problem, n, rng)
    tcfg = TrainConfig(
        seed=int(rng.integers(0, 2**63)),
        feature_map=config.feature_map,
        max_updates=config.max_updates,
    )
    try:
        result = train(pts, tcfg)
    except UpdateBudgetExceeded as exc:
        return TrialRecord(n, index, seed, math.nan, exc.updates, STATUS_BUDGET)
    err = estimate_true_error(result.hypothesis, problem, config.test_count, rng)
    return TrialRecord(n, index, seed, err, result.updates, STATUS_OK)


def run_experiment(config: ExperimentConfig, problem: DiskProblem = DiskProblem(), threads: int = 1) -> List[TrialRecord]:
    """Run every (n, trial) pair; output is sorted by (n, trial_index).

    Each trial draws everything from its own generator seeded by
    ``trial_seed(master_seed, n, i)``, so ``threads`` never changes the result.
    """
    keys = [(n, i) for n in sorted(set(config.n_values)) for i in range(config.trials_per_n)]
    if threads <= 1:
        records = [run_trial(config, problem, n, i) for n, i in keys]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(lambda k: run_trial(config, problem, *k), keys))
    return sorted(records, key=lambda r: (r.n, r.trial_index))


def quantile(values, q: float) -> float:
    """Linear interpolation between order statistics at h = (N - 1) q + 1."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise NoRecords("no values")
    return float(np.quantile(v, q, method="linear"))


def exceed_fraction(values, epsilon: float) -> float:
    v = np.asarray(values, dtype=float)
    return float(np.count_nonzero(v >= epsilon)) / v.size


def summarize(records, epsilons=(0.05, 0.1), quantiles=(0.25, 0.5, 0.75)) -> List[SummaryRow]:
    """Per-n statistics over successful trials.

    Failed trials are counted in ``failed`` but excluded from every statistic.
    ``std`` is the population standard deviation.
    """
    by_n: Dict[int, list] = {}
    failed: Dict[int, int] = {}
    for r in records:
        by_n.setdefault(r.n, [])
        failed.setdefault(r.n, 0)
        if r.ok:
            by_n[r.n].append(r.test_error)
        else:
            failed[r.n] += 1
    rows = []
    for n in sorted(by_n):
        errs = sorted(by_n[n])
        if not errs:
            raise NoRecords(f"no successful trials for n={n}")
        arr = np.asarray(errs)
        rows.append(
            SummaryRow(
                n=n,
                trials=len(errs),
                failed=failed[n],
                mean=math.fsum(errs) / len(errs),
                std=float(np.std(arr)),
                quantile_values={q: quantile(arr, q) for q in quantiles},
                exceed_fractions={e: exceed_fraction(arr, e) for e in epsilons},
            )
        )
    return rows


def tight_R(rows: Sequence[SummaryRow], epsilon: float, form: str = "exponential") -> float:
    """Smallest R for which the fraction bound holds at every summarised n."""
    best = 0.0
    for row in rows:
        frac = row.exceed_fractions[epsilon]
        decay = -epsilon * row.n if form == "exponential" else row.n * math.log1p(-epsilon)
        best = max(best, frac * math.exp(-decay))
    return best


def _fmt(x) -> str:
    if isinstance(x, float):
        return "" if math.isnan(x) else repr(x)
    return str(x)


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_FIELDS)
    for r in records:
        w.writerow([_fmt(getattr(r, f)) for f in RECORD_FIELDS])
    return buf.getvalue()


def records_from_csv(text: str) -> List[TrialRecord]:
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        err = row["test_error"]
        out.append(
            TrialRecord(
                int(row["n"]),
                int(row["trial_index"]),
                int(row["trial_seed"]),
                float(err) if err else math.nan,
                int(row["updates"]),
                row["status"],
            )
        )
    return out


def summary_to_csv(rows: Sequence[SummaryRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if not rows:
        return ""
    qs = list(rows[0].quantile_values)
    es = list(rows[0].exceed_fractions)
    w.writerow(["n", "trials", "failed", "mean", "std"] + [f"q{q:g}" for q in qs] + [f"exceed_{e:g}" for e in es])
    for r in rows:
        w.writerow(
            [r.n, r.trials, r.failed, _fmt(r.mean), _fmt(r.std)]
            + [_fmt(r.quantile_values[q]) for q in qs]
            + [_fmt(r.exceed_fractions[e]) for e in es]
        )
    return buf.getvalue()


def summary_to_json(rows: Sequence[SummaryRow]) -> list:
    return [
        {
            "n": r.n,
            "trials": r.trials,
            "failed": r.failed,
            "mean": r.mean,
            "std": r.std,
            "quantiles": {f"{q:g}": v for q, v in r.quantile_values.items()},
            "exceed_fractions": {f"{e:g}": v for e, v in r.exceed_fractions.items()},
        }
        for r in rows
    ]
