"""Separable toy problem: a uniform disk with two thin excluded sectors.

The true class boundary is a diameter at ``separator_angle``.  Two sectors of
half-width ``gap_halfwidth`` centred on that diameter carry no probability
mass, so the classes are linearly separable by every line through the origin
whose direction falls inside both gaps.
"""

from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from .errors import InvalidCount, InvalidDegree, PreconditionError, UnsupportedPoint

_CHUNK = 1 << 16


@dataclass(frozen=True)
class DiskProblem:
    gap_halfwidth: float = 1.8
    separator_angle: float = 0.0
    radius: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.gap_halfwidth < 90.0:
            raise PreconditionError("gap_halfwidth must lie in (0, 90) degrees")
        if not self.radius > 0.0:
            raise PreconditionError("radius must be positive")

    @property
    def arc_length(self) -> float:
        """Angular width of one class region, in degrees."""
        return 180.0 - 2.0 * self.gap_halfwidth

    @property
    def support_measure(self) -> float:
        return 360.0 - 4.0 * self.gap_halfwidth

    def positive_arc(self):
        """(start, length) of the +1 region, counterclockwise, in degrees."""
        return self.separator_angle + self.gap_halfwidth, self.arc_length

    def negative_arc(self):
        return self.separator_angle + 180.0 + self.gap_halfwidth, self.arc_length

    def relative_angle(self, x, y):
        """Angle of (x, y) measured from the separator, mapped into [0, 360)."""
        ang = np.degrees(np.arctan2(y, x)) - self.separator_angle
        return np.mod(ang, 360.0)

    def is_supported(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        rel = self.relative_angle(x, y)
        g = self.gap_halfwidth
        in_disk = x * x + y * y <= self.radius**2
        in_gap = (rel < g) | (rel > 360.0 - g) | (np.abs(rel - 180.0) < g)
        return in_disk & ~in_gap & ((x != 0) | (y != 0))


class LabeledPoint(NamedTuple):
    x: float
    y: float
    label: int


@dataclass(frozen=True)
class LabeledPoints:
    """Array-backed batch of labelled points; iterates as LabeledPoint."""

    xy: np.ndarray
    labels: np.ndarray

    def __len__(self):
        return len(self.labels)

    def __iter__(self) -> Iterator[LabeledPoint]:
        for (x, y), lab in zip(self.xy, self.labels):
            yield LabeledPoint(float(x), float(y), int(lab))

    def __getitem__(self, i):
        x, y = self.xy[i]
        return LabeledPoint(float(x), float(y), int(self.labels[i]))

    @classmethod
    def from_points(cls, points):
        pts = list(points)
        xy = np.array([(p[0], p[1]) for p in pts], dtype=float).reshape(-1, 2)
        labels = np.array([p[2] for p in pts], dtype=np.int64)
        return cls(xy, labels)


def _sample_polar(problem: DiskProblem, count: int, rng: np.random.Generator):
    u = rng.random(count)
    v = rng.random(count)
    arc = problem.arc_length
    # map u onto the union of the two allowed arcs without rejection
    t = u * (2.0 * arc)
    negative = t >= arc
    ang = problem.separator_angle + problem.gap_halfwidth + t + np.where(negative, 180.0 - arc, 0.0)
    r = problem.radius * np.sqrt(v)
    labels = np.where(negative, -1, 1).astype(np.int64)
    return ang, r, labels


def _sample_arrays(problem: DiskProblem, count: int, rng: np.random.Generator):
    ang, r, labels = _sample_polar(problem, count, rng)
    rad = np.radians(ang)
    xy = np.column_stack((r * np.cos(rad), r * np.sin(rad)))
    return xy, labels


def sample_points(problem: DiskProblem, count: int, seed) -> LabeledPoints:
    """Draw ``count`` i.i.d. uniform points from the supported region.

    ``seed`` may be an integer or a ``numpy.random.Generator``.
    """
    if count < 0:
        raise InvalidCount("count must be non-negative")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    xy, labels = _sample_arrays(problem, count, rng)
    return LabeledPoints(xy, labels)


def true_label(problem: DiskProblem, x: float, y: float) -> int:
    if not bool(problem.is_supported(x, y)):
        raise UnsupportedPoint(f"point ({x}, {y}) is outside the supported region")
    rel = float(problem.relative_angle(x, y))
    return 1 if rel < 180.0 else -1


@dataclass(frozen=True)
class FeatureMap:
    kind: str = "identity"
    degree: int = 1

    def __post_init__(self):
        if self.kind not in ("identity", "polynomial"):
            raise PreconditionError(f"unknown feature map kind {self.kind!r}")
        if self.degree < 1:
            raise InvalidDegree("degree must be >= 1")
        if self.kind == "identity" and self.degree != 1:
            raise PreconditionError("identity map has degree 1")

    @classmethod
    def identity(cls):
        return cls("identity", 1)

    @classmethod
    def polynomial(cls, degree):
        if degree < 1:
            raise InvalidDegree("degree must be >= 1")
        return cls("polynomial", degree)

    @property
    def output_dim(self) -> int:
        d = self.degree
        return d * (d + 3) // 2

    @property
    def name(self) -> str:
        return "linear" if self.kind == "identity" else f"poly{self.degree}"

    def __call__(self, xy):
        xy = np.asarray(xy, dtype=float)
        if self.kind == "identity":
            return xy.copy()
        return poly_features_batch(xy, self.degree)


def poly_features(x: float, y: float, degree: int) -> np.ndarray:
    """Monomials x^i y^j with 1 <= i + j <= degree.

    Within each total degree the power of x descends: (x, y, x^2, xy, y^2, ...).
    """
    if degree < 1:
        raise InvalidDegree("degree must be >= 1")
    return poly_features_batch(np.array([[x, y]], dtype=float), degree)[0]


def poly_features_batch(xy, degree: int) -> np.ndarray:
    if degree < 1:
        raise InvalidDegree("degree must be >= 1")
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    x, y = xy[:, 0], xy[:, 1]
    xp = [np.ones_like(x)]
    yp = [np.ones_like(y)]
    for _ in range(degree):
        xp.append(xp[-1] * x)
        yp.append(yp[-1] * y)
    cols = [xp[k - j] * yp[j] for k in range(1, degree + 1) for j in range(k + 1)]
    return np.column_stack(cols)


@dataclass(frozen=True)
class Hypothesis:
    weights: np.ndarray
    feature_map: FeatureMap = FeatureMap()

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        if w.shape[0] != self.feature_map.output_dim:
            raise PreconditionError(
                f"weights have dimension {w.shape[0]}, feature map expects {self.feature_map.output_dim}"
            )
        object.__setattr__(self, "weights", w)

    def scores(self, xy) -> np.ndarray:
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        if self.feature_map.kind == "identity":
            return xy @ self.weights
        # stream the monomials so large test sets never build the full feature matrix
        x, y = xy[:, 0], xy[:, 1]
        d = self.feature_map.degree
        xp = [np.ones_like(x)]
        yp = [np.ones_like(y)]
        for _ in range(d):
            xp.append(xp[-1] * x)
            yp.append(yp[-1] * y)
        out = np.zeros_like(x)
        k = 0
        for deg in range(1, d + 1):
            for j in range(deg + 1):
                out += self.weights[k] * (xp[deg - j] * yp[j])
                k += 1
        return out

    def predict(self, xy) -> np.ndarray:
        return np.where(self.scores(xy) >= 0.0, 1, -1)


def linear_hypothesis(boundary_angle: float, positive_side_sign: int = 1) -> Hypothesis:
    """Identity-map hypothesis whose boundary is the line through the origin at
    ``boundary_angle`` degrees; with sign +1 the counterclockwise side is +1."""
    a = np.radians(boundary_angle + 90.0)
    w = positive_side_sign * np.array([np.cos(a), np.sin(a)])
    return Hypothesis(w, FeatureMap.identity())


def _arc_overlap(a0, alen, b0, blen):
    total = 0.0
    a0 = a0 % 360.0
    b0 = b0 % 360.0
    for shift in (-360.0, 0.0, 360.0):
        lo = max(a0, b0 + shift)
        hi = min(a0 + alen, b0 + shift + blen)
        if hi > lo:
            total += hi - lo
    return total


def linear_true_error(problem: DiskProblem, boundary_angle: float, positive_side_sign: int = 1) -> float:
    """Exact true error of the diameter classifier from ``linear_hypothesis``.

    Regions are wedges, so the error is an angular measure ratio and does not
    depend on the radius.
    """
    if positive_side_sign not in (-1, 1):
        raise PreconditionError("positive_side_sign must be -1 or +1")
    pos_start = boundary_angle if positive_side_sign == 1 else boundary_angle + 180.0
    neg_start = pos_start + 180.0
    wrong = _arc_overlap(pos_start, 180.0, *problem.negative_arc())
    wrong += _arc_overlap(neg_start, 180.0, *problem.positive_arc())
    return min(1.0, max(0.0, wrong / problem.support_measure))


def hypothesis_angle(h: Hypothesis):
    """Recover (boundary_angle, sign) for an identity-map hypothesis."""
    if h.feature_map.kind != "identity":
        raise PreconditionError("only identity-map hypotheses have a boundary angle")
    normal = np.degrees(np.arctan2(h.weights[1], h.weights[0]))
    return float(normal - 90.0), 1


def estimate_true_error(h: Hypothesis, problem: DiskProblem, test_count: int, seed) -> float:
    """Misclassification rate on a fresh sample of ``test_count`` points."""
    if test_count < 1:
        raise InvalidCount("test_count must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    identity = h.feature_map.kind == "identity"
    if identity:
        # w.x = r |w| cos(theta - phi_w): the sign needs only the angle
        phi_w = np.degrees(np.arctan2(h.weights[1], h.weights[0]))
        zero_w = not np.any(h.weights)
    wrong = 0
    remaining = test_count
    while remaining:
        m = min(remaining, _CHUNK)
        if identity:
            ang, _, labels = _sample_polar(problem, m, rng)
            d = np.mod(ang - phi_w, 360.0)
            pred = np.where(zero_w | (d <= 90.0) | (d >= 270.0), 1, -1)
        else:
            xy, labels = _sample_arrays(problem, m, rng)
            pred = h.predict(xy)
        wrong += int(np.count_nonzero(pred != labels))
        remaining -= m
    return wrong / test_count
