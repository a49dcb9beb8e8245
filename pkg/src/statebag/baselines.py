"""Whole-video functional baseline: squash a track into one 49-element vector
of the same summary statistics used per segment, and classify it directly.

Because the statistics are computed over the entire video, the baseline sees
only per-channel marginals; it cannot distinguish classes that differ in how
states co-occur but match in every channel's whole-video statistics. The
functional vectors are z-scored (parameters fit on the training split) before
classification so the RBF kernel operates at a sane scale across channels of
mixed units.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codebook import Standardizer, fit_standardizer
from .errors import TrackTooShort
from .ordinal import OrdinalLabels, OrdinalModel, predict_batch, train_ordinal
from .segfeat import DEFAULT_BLINK_THRESHOLD, segment_feature_matrix
from .tracks import FeatureTrack


def functional_features(track: FeatureTrack, blink_threshold: float = DEFAULT_BLINK_THRESHOLD) -> np.ndarray:
    """The 49-element feature vector of the whole track taken as one segment."""
    n = len(track)
    if n < 3:
        raise TrackTooShort(f"{track.video_id}: functional features need >= 3 frames")
    if not track.valid.all():
        raise ValueError(f"{track.video_id}: track has invalid frames; repair it first")
    return segment_feature_matrix(track.channels, segment_len=n,
                                  blink_threshold=blink_threshold)[0]


@dataclass
class BaselineModel:
    """Functional-feature classifier: input standardizer + ordinal model."""

    standardizer: Standardizer
    model: OrdinalModel


def train_baseline(x, labels: OrdinalLabels, backend: str = "rbf", lam: float = 1.0,
                   gamma: float = 0.01, seed: int = 0) -> BaselineModel:
    """Train the ordinal backend on z-scored whole-video functional vectors."""
    x = np.asarray(x, dtype=np.float64)
    standardizer = fit_standardizer(x)
    model = train_ordinal(standardizer.transform(x), labels, backend=backend,
                          lam=lam, gamma=gamma, seed=seed)
    return BaselineModel(standardizer=standardizer, model=model)


def predict_baseline(baseline: BaselineModel, x):
    """Level probabilities and predicted levels for functional vectors."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    return predict_batch(baseline.model, baseline.standardizer.transform(x))
