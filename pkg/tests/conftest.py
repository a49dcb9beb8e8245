"""Shared fixtures and independent reference implementations.

The naive oracles here deliberately use plain Python loops (no shared code
with the library) so they stay an independent check on the vectorized paths.
"""

import math

import numpy as np
import pytest

from statebag.tracks import CHANNELS, FeatureTrack


def naive_mean(xs):
    return sum(xs) / len(xs)


def naive_std(xs):
    m = naive_mean(xs)
    return math.sqrt(sum((x - m) ** 2 for x in xs) / len(xs))


def naive_diff(xs):
    return [xs[i + 1] - xs[i] for i in range(len(xs) - 1)]


def naive_blink_count(au, threshold):
    """Run-collapsed count of interior peaks above threshold."""
    n = len(au)
    count = 0
    i = 0
    while i < n:
        if au[i] > threshold:
            j = i
            while j < n and au[j] > threshold:
                j += 1
            has_peak = any(
                0 < t < n - 1 and au[t] >= au[t - 1] and au[t] >= au[t + 1]
                for t in range(i, j)
            )
            if has_peak:
                count += 1
            i = j
        else:
            i += 1
    return count


def naive_segment_features(segment, blink_threshold=0.5):
    """Loop-based reference for the 49-element segment feature vector."""
    segment = [list(map(float, row)) for row in segment]
    col = lambda j: [row[j] for row in segment]
    out = []
    out += [naive_mean(col(0)), naive_std(col(0))]
    out += [naive_mean(col(1)), naive_std(col(1))]
    out.append(naive_blink_count(col(2), blink_threshold) / len(segment))
    for j in range(3, len(CHANNELS)):
        vel = naive_diff(col(j))
        acc = naive_diff(vel)
        out += [naive_mean(vel), naive_std(vel), naive_mean(acc), naive_std(acc)]
    return np.array(out)


def make_track(channels, video_id="t0", fps=24.0, valid=None):
    channels = np.asarray(channels, dtype=np.float64)
    n = channels.shape[0]
    return FeatureTrack(
        video_id=video_id,
        fps=fps,
        frame_index=np.arange(n, dtype=np.int64),
        channels=channels,
        valid=np.ones(n, dtype=bool) if valid is None else np.asarray(valid, dtype=bool),
    )


def random_channels(rng, n):
    """Random but range-legal channel matrix."""
    channels = rng.normal(size=(n, len(CHANNELS)))
    channels[:, 0] = np.clip(channels[:, 0] * 0.4, -1, 1)   # valence
    channels[:, 1] = np.clip(channels[:, 1] * 0.4, -1, 1)   # arousal
    channels[:, 2] = np.abs(channels[:, 2])                 # au45 >= 0
    return channels


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
