"""Perceptron ERM: sweep, update on mistakes, stop at zero training error."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import EmptyTrainingSet, PreconditionError, UpdateBudgetExceeded
from .geometry import FeatureMap, Hypothesis, LabeledPoints


@dataclass(frozen=True)
class TrainConfig:
    seed: int = 0
    feature_map: FeatureMap = field(default_factory=FeatureMap.identity)
    max_updates: int = 1_000_000
    initial_weights: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.max_updates < 1:
            raise PreconditionError("max_updates must be >= 1")


@dataclass(frozen=True)
class TrainResult:
    hypothesis: Hypothesis
    updates: int
    sweeps: int
    training_error: float
    initial_weights: np.ndarray


def random_unit_vector(dim: int, rng: np.random.Generator) -> np.ndarray:
    w = rng.standard_normal(dim)
    return w / np.linalg.norm(w)


def _mistakes(features, labels, w):
    s = features @ w
    return ((labels > 0) & (s < 0)) | ((labels < 0) & (s >= 0))


def train(points, config: TrainConfig) -> TrainResult:
    """Run the perceptron until a full sweep makes no update.

    ``points`` is a LabeledPoints batch or any iterable of (x, y, label).
    Raises UpdateBudgetExceeded if ``config.max_updates`` is reached first.
    """
    if not isinstance(points, LabeledPoints):
        points = LabeledPoints.from_points(points)
    if len(points) == 0:
        raise EmptyTrainingSet("training set is empty")
    labels = np.asarray(points.labels)
    if not np.all((labels == 1) | (labels == -1)):
        raise PreconditionError("labels must be -1 or +1")

    fmap = config.feature_map
    feats = fmap(points.xy)
    if config.initial_weights is not None:
        w0 = np.asarray(config.initial_weights, dtype=float).copy()
        if w0.shape != (fmap.output_dim,):
            raise PreconditionError("initial_weights has the wrong dimension")
    else:
        w0 = random_unit_vector(fmap.output_dim, np.random.default_rng(config.seed))

    w = w0.copy()
    n = len(labels)
    updates = 0
    sweeps = 0
    while True:
        sweeps += 1
        pos = 0
        updated = False
        # each step finds the next mistake after ``pos`` under the current w,
        # which is exactly what a point-by-point sweep would visit
        while pos < n:
            bad = np.flatnonzero(_mistakes(feats[pos:], labels[pos:], w))
            if bad.size == 0:
                break
            i = pos + int(bad[0])
            if updates >= config.max_updates:
                raise UpdateBudgetExceeded(
                    f"no separating weights after {updates} updates", weights=w, updates=updates
                )
            w = w + labels[i] * feats[i]
            updates += 1
            updated = True
            pos = i + 1
        if not updated:
            break

    err = float(np.count_nonzero(_mistakes(feats, labels, w))) / n
    return TrainResult(Hypothesis(w, fmap), updates, sweeps, err, w0)
