"""Exact enumeration over finite input spaces and finite hypothesis tables.

A training set of n i.i.d. draws is summarised by its *support*, the set of
distinct inputs it contains: whether a hypothesis has zero training error
depends on nothing else.  Both enumeration modes therefore reduce to a
probability weight per support, computed two independent ways:

* ``exhaustive`` sums the product probability of every ordered n-tuple;
* ``support`` uses inclusion-exclusion,
  Pr(support = T) = sum over U subset of T of (-1)^(|T|-|U|) p(U)^n.
"""

import json
import math
from dataclasses import asdict, dataclass
from importlib import resources
from typing import List

import numpy as np

from .errors import BudgetExceeded, EmptyMinimaSet, IndexOutOfRange, ParseError, PreconditionError

EXHAUSTIVE_LIMIT = 10**7
SUPPORT_LIMIT = 10**6
MAX_INPUTS = 62
PROB_TOL = 1e-12


@dataclass(frozen=True)
class FiniteProblem:
    probs: np.ndarray
    labels: np.ndarray
    hypotheses: np.ndarray
    class_count: int = 2

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        y = np.asarray(self.labels, dtype=np.int64)
        hyp = np.asarray(self.hypotheses, dtype=np.int64)
        if p.ndim != 1 or p.size == 0:
            raise PreconditionError("need at least one input")
        if y.shape != p.shape:
            raise PreconditionError("labels and probabilities differ in length")
        if np.any(p <= 0):
            raise PreconditionError("input probabilities must be positive")
        if abs(math.fsum(p) - 1.0) > PROB_TOL:
            raise PreconditionError(f"probabilities sum to {math.fsum(p)!r}, not 1")
        if hyp.ndim != 2 or hyp.shape[0] == 0 or hyp.shape[1] != p.size:
            raise PreconditionError("hypotheses must be a non-empty table with one prediction per input")
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "hypotheses", hyp)

    @property
    def m(self) -> int:
        return self.probs.size

    @property
    def correct(self) -> np.ndarray:
        """Boolean table: hypothesis h is right on input i."""
        return self.hypotheses == self.labels[None, :]

    @property
    def errors(self) -> np.ndarray:
        wrong = ~self.correct
        return np.array([math.fsum(self.probs[row]) for row in wrong])

    @property
    def e_min(self) -> float:
        return float(self.errors.min())


@dataclass(frozen=True)
class EnumerationReport:
    n: int
    epsilon: float
    mode: str
    lhs_mean_ratio: float
    rhs_ratio_of_means: float
    covariance_term: float
    mean_minima_count: float
    mean_bad_count: float
    formula_bad_count: float
    conditioning_probability: float = 1.0

    def to_dict(self):
        return asdict(self)


def load_problem(source) -> FiniteProblem:
    """Build a FiniteProblem from a JSON path, JSON text or parsed dict."""
    if isinstance(source, dict):
        data = source
    else:
        text = str(source)
        if not text.lstrip().startswith("{"):
            try:
                with open(text, encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as exc:
                raise ParseError(f"cannot read problem file: {exc}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed JSON: {exc.msg}", exc.lineno) from exc
    try:
        inputs = data["inputs"]
        probs = [float(item["p"]) for item in inputs]
        labels = [int(item["label"]) for item in inputs]
        hyps = [[int(v) for v in row] for row in data["hypotheses"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"invalid problem structure: {exc!r}") from exc
    classes = data.get("class_count")
    if classes is None:
        classes = len(set(labels) | {v for row in hyps for v in row})
    return FiniteProblem(np.array(probs), np.array(labels), np.array(hyps), int(classes))


def dump_problem(problem: FiniteProblem) -> dict:
    return {
        "class_count": problem.class_count,
        "inputs": [{"p": float(p), "label": int(y)} for p, y in zip(problem.probs, problem.labels)],
        "hypotheses": problem.hypotheses.tolist(),
    }


def bundled_problem_names() -> List[str]:
    root = resources.files("zeroloss") / "data" / "finite"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def bundled_problem(name: str) -> FiniteProblem:
    path = resources.files("zeroloss") / "data" / "finite" / f"{name}.json"
    if not path.is_file():
        raise PreconditionError(f"no bundled problem named {name!r}")
    return load_problem(path.read_text(encoding="utf-8"))


def exact_error(problem: FiniteProblem, h: int) -> float:
    if not 0 <= h < problem.hypotheses.shape[0]:
        raise IndexOutOfRange(f"hypothesis index {h} out of range")
    wrong = problem.hypotheses[h] != problem.labels
    return math.fsum(problem.probs[wrong])


def global_minima(problem: FiniteProblem, support) -> set:
    """Rows with zero training error on any sample whose distinct inputs are ``support``."""
    idx = sorted(set(int(i) for i in support))
    if not idx:
        raise PreconditionError("support must be non-empty")
    if idx[0] < 0 or idx[-1] >= problem.m:
        raise IndexOutOfRange("support index out of range")
    ok = problem.correct[:, idx].all(axis=1)
    return set(int(h) for h in np.flatnonzero(ok))


def _mask_members(mask: int, m: int):
    return [i for i in range(m) if mask >> i & 1]


def _weights_exhaustive(problem: FiniteProblem, n: int) -> dict:
    m = problem.m
    if m**n > EXHAUSTIVE_LIMIT:
        raise BudgetExceeded(f"exhaustive mode needs m^n <= {EXHAUSTIVE_LIMIT}, got {m}^{n}")
    if m > MAX_INPUTS:
        raise BudgetExceeded(f"at most {MAX_INPUTS} inputs supported")
    # grow the tuple table one draw at a time: probability product and support bitmask
    prob = np.ones(1)
    mask = np.zeros(1, dtype=np.int64)
    bits = np.left_shift(np.int64(1), np.arange(m, dtype=np.int64))
    for _ in range(n):
        prob = (prob[:, None] * problem.probs[None, :]).ravel()
        mask = (mask[:, None] | bits[None, :]).ravel()
    keys, inverse = np.unique(mask, return_inverse=True)
    order = np.argsort(inverse, kind="stable")
    bounds = np.searchsorted(inverse[order], np.arange(keys.size + 1))
    sorted_prob = prob[order]
    return {
        int(key): math.fsum(sorted_prob[bounds[k]:bounds[k + 1]]) for k, key in enumerate(keys)
    }


def _weights_support(problem: FiniteProblem, n: int) -> np.ndarray:
    m = problem.m
    if (1 << m) > SUPPORT_LIMIT:
        raise BudgetExceeded(f"support mode needs 2^m <= {SUPPORT_LIMIT}, got m={m}")
    size = 1 << m
    mass = np.zeros(size)
    for i in range(m):
        bit = 1 << i
        idx = np.arange(size)
        sel = (idx & bit) != 0
        mass[sel] += problem.probs[i]
    f = mass**n
    # Moebius inversion over the subset lattice
    for i in range(m):
        bit = 1 << i
        idx = np.arange(size)
        sel = (idx & bit) != 0
        f[sel] -= f[idx[sel] ^ bit]
    return f


def support_weights(problem: FiniteProblem, n: int, mode: str = "support"):
    """Pr(support of an n-sample = T), indexed by bitmask T.

    Exhaustive mode returns a dict holding only supports that occur; support
    mode returns a dense array over all 2^m masks.
    """
    if n < 1:
        raise PreconditionError("n must be >= 1")
    if mode == "exhaustive":
        return _weights_exhaustive(problem, n)
    if mode == "support":
        return _weights_support(problem, n)
    raise PreconditionError(f"unknown mode {mode!r}")


def exact_report(
    problem: FiniteProblem,
    n: int,
    epsilon: float,
    mode: str = "support",
    condition_nonempty: bool = False,
) -> EnumerationReport:
    """Exact averages over all training sets of size ``n``.

    Raises EmptyMinimaSet when some reachable support admits no zero-error
    hypothesis, unless ``condition_nonempty`` asks for averages conditioned on
    a non-empty minima set.  ``formula_bad_count`` is always unconditional,
    so it matches ``mean_bad_count`` only when no support was dropped.
    """
    weights = support_weights(problem, n, mode)
    items = weights.items() if isinstance(weights, dict) else enumerate(weights)
    m = problem.m
    correct = problem.correct
    errs = problem.errors
    bad = errs >= epsilon

    rows = []
    dropped = []
    for mask, w in items:
        size = bin(mask).count("1")
        # reachability is combinatorial; numerically tiny weights of larger supports are exact zeros
        if size == 0 or size > n:
            continue
        members = _mask_members(mask, m)
        ok = correct[:, members].all(axis=1)
        h_count = int(np.count_nonzero(ok))
        if h_count == 0:
            if not condition_nonempty:
                raise EmptyMinimaSet(f"no hypothesis fits support {members}")
            dropped.append(float(w))
            continue
        rows.append((float(w), h_count, int(np.count_nonzero(ok & bad))))

    total = math.fsum(w for w, _, _ in rows)
    if total <= 0:
        raise EmptyMinimaSet("every reachable support has an empty minima set")
    ws = [w / total for w, _, _ in rows]
    mean_h = math.fsum(w * h for w, (_, h, _) in zip(ws, rows))
    mean_bad = math.fsum(w * b for w, (_, _, b) in zip(ws, rows))
    lhs = math.fsum(w * b / h for w, (_, h, b) in zip(ws, rows))
    cov = math.fsum(w * (b / h - lhs) * (h - mean_h) for w, (_, h, b) in zip(ws, rows))
    formula = math.fsum((1.0 - errs[bad]) ** n)
    return EnumerationReport(
        n=n,
        epsilon=epsilon,
        mode=mode,
        lhs_mean_ratio=lhs,
        rhs_ratio_of_means=mean_bad / mean_h,
        covariance_term=cov,
        mean_minima_count=mean_h,
        mean_bad_count=mean_bad,
        formula_bad_count=formula,
        conditioning_probability=total,
    )

