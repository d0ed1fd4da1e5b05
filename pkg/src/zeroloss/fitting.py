"""Least-squares fit of the two-parameter learning curve

    mean_error(n) = e_min + (e0 - e_min) / (1 + n / eta)

to (n, mean test error) records.  For fixed eta the model is linear in
(e_min, e0), so those are solved exactly and only eta is searched: a
logarithmic grid followed by golden-section refinement.
"""

import csv
import io
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .docmodel import learning_curve
from .errors import Degenerate, DuplicateNError, InsufficientData, ParseError, PreconditionError, RangeError

log = logging.getLogger(__name__)

ETA_RANGE = (1e-2, 1e6)
GRID_PER_DECADE = 200
GOLDEN_RTOL = 1e-12
REFERENCE_N_GRID = (10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000, 15000, 20000, 25000, 30000, 40000, 50000, 60000)

# (dataset, architecture, e0, e_min, eta) as tabulated for the over-parameterized experiments
REFERENCE_FITS = (
    ("MNIST", "ResNet018", 0.9, 0.0035, 65.0),
    ("MNIST", "ResNet101", 0.9, 0.003, 60.0),
    ("CIFAR-10", "MLP3", 0.9, 0.363, 4700.0),
    ("CIFAR-10", "MLP8", 0.9, 0.360, 6000.0),
    ("CIFAR-10", "ResNet018", 0.9, 0.095, 4000.0),
    ("CIFAR-10", "ResNet101", 0.9, 0.067, 3700.0),
)


@dataclass(frozen=True)
class CurvePoint:
    n: int
    mean_error: float
    std_error: Optional[float] = None


@dataclass
class CurveFit:
    e_min: float
    eta: float
    e0: float
    e0_fixed: bool
    rss: float
    weighted: bool
    per_point_residuals: List[float] = field(default_factory=list)

    def predict(self, n):
        return learning_curve(n, self.e_min, self.eta, self.e0)

    def to_dict(self):
        return asdict(self)


def e0_for_classes(classes: int) -> float:
    """Error of random guessing among ``classes`` balanced classes."""
    if classes < 2:
        raise PreconditionError("need at least two classes")
    return (classes - 1) / classes


def parse_curve_csv(source) -> List[CurvePoint]:
    """Read ``n,mean_error[,std_error]`` records from a path or file object.

    Other columns are ignored.  Rows come back sorted by n.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        try:
            with open(source, encoding="utf-8", newline="") as fh:
                text = fh.read()
        except OSError as exc:
            raise ParseError(f"cannot read {source}: {exc}") from exc
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ParseError("empty file", 1) from None
    if header[:2] != ["n", "mean_error"]:
        raise ParseError("header must start with n,mean_error", 1)
    std_col = header.index("std_error") if "std_error" in header else None

    points = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) < len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", lineno)
        try:
            n_val = float(row[0])
            mean = float(row[1])
            std = float(row[std_col]) if std_col is not None and row[std_col].strip() else None
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
        if n_val != int(n_val) or n_val < 0:
            raise RangeError(f"n must be a non-negative integer, got {row[0]!r}", lineno)
        if not 0.0 <= mean <= 1.0:
            raise RangeError(f"mean_error {mean} outside [0, 1]", lineno)
        if std is not None and not std >= 0:
            raise RangeError(f"std_error {std} is negative", lineno)
        n = int(n_val)
        if n in points:
            raise DuplicateNError(f"duplicate n={n}", lineno)
        points[n] = CurvePoint(n, mean, std)
    return [points[k] for k in sorted(points)]


def curve_to_csv(points: Sequence[CurvePoint]) -> str:
    has_std = any(p.std_error is not None for p in points)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "mean_error", "std_error"] if has_std else ["n", "mean_error"])
    for p in points:
        row = [p.n, repr(float(p.mean_error))]
        if has_std:
            row.append("" if p.std_error is None else repr(float(p.std_error)))
        w.writerow(row)
    return buf.getvalue()


def synthetic_curve(e_min, eta, e0, n_grid=REFERENCE_N_GRID, noise=0.0, seed=None, std=None) -> List[CurvePoint]:
    """Points on the model curve, optionally with additive Gaussian noise."""
    rng = np.random.default_rng(seed)
    n_arr = np.asarray(n_grid, dtype=float)
    y = learning_curve(n_arr, e_min, eta, e0)
    if noise:
        y = y + rng.normal(0.0, noise, size=n_arr.size)
    y = np.clip(y, 0.0, 1.0)
    return [CurvePoint(int(n), float(v), std) for n, v in zip(n_grid, y)]


class _Problem:
    """Weighted data plus the profiled inner solve at fixed eta."""

    def __init__(self, points, e0_fixed):
        self.n = np.array([p.n for p in points], dtype=float)
        self.y = np.array([p.mean_error for p in points], dtype=float)
        stds = [p.std_error for p in points]
        self.weighted = all(s is not None and s > 0 for s in stds)
        if not self.weighted and any(s is not None for s in stds):
            log.warning("std_error missing or zero on some rows; fitting unweighted")
        self.w = np.array([1.0 / s**2 for s in stds]) if self.weighted else np.ones_like(self.y)
        self.e0_fixed = e0_fixed

    def _sse(self, c, e_min, e0):
        """Rows of ``c`` are grid points; e_min, e0 are per-row parameters."""
        r = e0[:, None] * c + e_min[:, None] * (1.0 - c) - self.y
        return (self.w * r * r).sum(axis=1)

    def _best_emin(self, c, e0):
        d = 1.0 - c
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (self.w * d * (self.y - e0[:, None] * c)).sum(1) / (self.w * d * d).sum(1)
        return np.nan_to_num(out)

    def _best_e0(self, c, e_min):
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (self.w * c * (self.y - e_min[:, None] * (1.0 - c))).sum(1) / (self.w * c * c).sum(1)
        return np.nan_to_num(out)

    def solve_many(self, etas):
        """Optimal (e_min, e0, sse) per eta, subject to 0 <= e_min <= e0 <= 1."""
        etas = np.atleast_1d(np.asarray(etas, dtype=float))
        c = 1.0 / (1.0 + self.n[None, :] / etas[:, None])
        ones = np.ones(etas.size)
        if self.e0_fixed is not None:
            e0 = self.e0_fixed * ones
            e_min = np.minimum(np.clip(self._best_emin(c, e0), 0.0, 1.0), e0)
            return e_min, e0, self._sse(c, e_min, e0)

        d = 1.0 - c
        w, y = self.w, self.y
        saa, sab, sbb = (w * d * d).sum(1), (w * d * c).sum(1), (w * c * c).sum(1)
        say, sby = (w * d * y).sum(1), (w * c * y).sum(1)
        det = saa * sbb - sab * sab
        with np.errstate(divide="ignore", invalid="ignore"):
            e_min = (sbb * say - sab * sby) / det
            e0 = (saa * sby - sab * say) / det
        sse = self._sse(c, e_min, e0)
        feasible = np.isfinite(sse) & (e_min >= 0) & (e_min <= e0) & (e0 <= 1)
        if feasible.all():
            return e_min, e0, sse
        # an edge of the feasible triangle is active; try each edge's optimum
        cands = []
        for v in (0.0, 1.0):
            f0 = v * ones
            cands.append((np.minimum(np.clip(self._best_emin(c, f0), 0, 1), f0), f0))
            fm = v * ones
            cands.append((fm, np.maximum(np.clip(self._best_e0(c, fm), 0, 1), fm)))
        flat = np.clip(np.sum(w * y) / np.sum(w), 0.0, 1.0) * ones
        cands.append((flat, flat))
        cand_sse = np.array([self._sse(c, a, b) for a, b in cands])
        k = np.argmin(cand_sse, axis=0)
        idx = np.arange(etas.size)
        ce_min = np.array([a for a, _ in cands])[k, idx]
        ce0 = np.array([b for _, b in cands])[k, idx]
        csse = cand_sse[k, idx]
        return (
            np.where(feasible, e_min, ce_min),
            np.where(feasible, e0, ce0),
            np.where(feasible, sse, csse),
        )

    def solve(self, eta):
        """Scalar solve; the unconstrained case goes through lstsq for accuracy."""
        if self.e0_fixed is None:
            c = 1.0 / (1.0 + self.n / eta)
            sw = np.sqrt(self.w)
            A = np.column_stack((1.0 - c, c)) * sw[:, None]
            (e_min, e0), *_ = np.linalg.lstsq(A, self.y * sw, rcond=None)
            if 0.0 <= e_min <= e0 <= 1.0:
                sse = self._sse(c[None, :], np.array([e_min]), np.array([e0]))[0]
                return float(e_min), float(e0), float(sse)
        e_min, e0, sse = self.solve_many([eta])
        return float(e_min[0]), float(e0[0]), float(sse[0])

    def objective(self, log_eta):
        return self.solve(math.exp(log_eta))[2]


def _golden(f, a, b, rtol):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while abs(b - a) > rtol * max(1.0, abs(a) + abs(b)) / 2:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def fit_curve(points: Sequence[CurvePoint], e0_fixed: Optional[float] = None) -> CurveFit:
    """Weighted least-squares fit; weights 1/std^2 only when every std is positive."""
    points = sorted(points, key=lambda p: p.n)
    distinct = len({p.n for p in points})
    need = 2 if e0_fixed is not None else 3
    if len(points) < need:
        raise InsufficientData(f"need at least {need} points, got {len(points)}")
    if distinct == 1:
        raise Degenerate("all points share the same n")
    if distinct < need:
        raise InsufficientData(f"need at least {need} distinct n values, got {distinct}")
    if e0_fixed is not None and not 0.0 <= e0_fixed <= 1.0:
        raise PreconditionError("e0_fixed must lie in [0, 1]")

    prob = _Problem(points, e0_fixed)
    lo, hi = (math.log(v) for v in ETA_RANGE)
    count = int(round((hi - lo) / math.log(10) * GRID_PER_DECADE)) + 1
    grid = np.linspace(lo, hi, count)
    vals = prob.solve_many(np.exp(grid))[2]
    k = int(np.argmin(vals))  # first minimum, i.e. ties go to the smaller eta
    a = grid[max(k - 1, 0)]
    b = grid[min(k + 1, count - 1)]
    log_eta, best = _golden(prob.objective, a, b, GOLDEN_RTOL)
    if vals[k] < best:
        log_eta, best = grid[k], vals[k]
    eta = math.exp(log_eta)
    e_min, e0, rss = prob.solve(eta)
    model = learning_curve(prob.n, e_min, eta, e0)
    resid = (prob.y - model).tolist()
    return CurveFit(e_min, eta, e0, e0_fixed is not None, rss, prob.weighted, resid)


def fit_report(fit: CurveFit, points: Sequence[CurvePoint], grid: Sequence[int]):
    """(JSON-ready dict, fitted-curve CSV text).

    The CSV carries ``n,mean_error`` with the model values, so it can be read
    back by parse_curve_csv, plus ``log_n`` and ``log_deviation`` =
    log(model - e_min) for a double-logarithmic view.
    """
    report = {
        "parameters": {"e_min": fit.e_min, "eta": fit.eta, "e0": fit.e0, "e0_fixed": fit.e0_fixed},
        "rss": fit.rss,
        "weighted": fit.weighted,
        "points": [
            {"n": p.n, "mean_error": p.mean_error, "std_error": p.std_error, "residual": r}
            for p, r in zip(sorted(points, key=lambda p: p.n), fit.per_point_residuals)
        ],
    }
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "mean_error", "log_n", "log_deviation"])
    for n in sorted(set(int(v) for v in grid)):
        m = fit.predict(n)
        dev = m - fit.e_min
        w.writerow([n, repr(float(m)), repr(math.log(n)) if n > 0 else "", repr(math.log(dev)) if dev > 0 else ""])
    return report, buf.getvalue()
