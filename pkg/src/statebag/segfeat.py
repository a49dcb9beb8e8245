"""Equal-length segmentation and the 49-slot per-segment feature vector.

Slot layout (all statistics are population form, i.e. divide by n):

    0-1    valence mean, std
    2-3    arousal mean, std
    4      blink rate (run-collapsed AU45 peaks / segment length)
    5...   four slots per positional channel, in channel order
           gaze_x, gaze_y, head_x, head_y, head_z, head_pitch, head_yaw,
           head_roll, wrist_x, wrist_y, wrist_z:
           velocity mean, velocity std, acceleration mean, acceleration std

Velocity is the per-frame first difference of the raw series; acceleration is
the first difference of the velocity series. No smoothing and no fps scaling
is applied. Total length: 4 + 1 + 11 * 4 = 49.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SegmentTooShort, SeriesTooShort, TrackTooShort
from .tracks import CHANNEL_INDEX, CHANNELS, FeatureTrack

N_FEATURES = 49

#: Channels whose dynamics (not values) enter the feature vector.
POSITIONAL_CHANNELS = CHANNELS[3:]

DEFAULT_BLINK_THRESHOLD = 0.5


def feature_slots(channel: str) -> list[int]:
    """Slot indices of the feature vector fed by ``channel``."""
    if channel == "valence":
        return [0, 1]
    if channel == "arousal":
        return [2, 3]
    if channel == "au45":
        return [4]
    pos = POSITIONAL_CHANNELS.index(channel)
    base = 5 + 4 * pos
    return [base, base + 1, base + 2, base + 3]


@dataclass(frozen=True)
class SegmentationConfig:
    """Fixed-length segmentation; trailing partial segments are dropped."""

    segment_len: int = 200

    def __post_init__(self):
        if self.segment_len < 3:  # acceleration needs >= 3 samples
            raise ValueError("segment_len must be >= 3")


def segment_track(track: FeatureTrack, cfg: SegmentationConfig) -> list[np.ndarray]:
    """Cut a fully valid track into ``floor(n / segment_len)`` contiguous slices.

    Each slice is a ``(segment_len, 14)`` view of the channel matrix, in
    temporal order; the trailing remainder is dropped.
    """
    if not track.valid.all():
        raise ValueError(f"{track.video_id}: track has invalid frames; repair it first")
    n = len(track)
    size = cfg.segment_len
    if n < size:
        raise TrackTooShort(f"{track.video_id}: {n} frames < segment_len {size}")
    count = n // size
    return [track.channels[i * size:(i + 1) * size] for i in range(count)]


def diff_series(x) -> np.ndarray:
    """Per-frame first difference; apply twice for acceleration."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] < 2:
        raise SeriesTooShort("difference needs at least 2 samples")
    return np.diff(x, axis=-1)


def _peak_counts(au: np.ndarray, threshold: float) -> np.ndarray:
    """Run-collapsed peak counts per row of ``au`` (shape ``(rows, n)``).

    A peak is an interior sample above ``threshold`` that is >= both
    neighbours; each maximal above-threshold run counts at most once.
    """
    rows, n = au.shape
    above = au > threshold
    cand = np.zeros_like(above)
    if n >= 3:
        mid = au[:, 1:-1]
        cand[:, 1:-1] = above[:, 1:-1] & (mid >= au[:, :-2]) & (mid >= au[:, 2:])
    run_start = above.copy()
    run_start[:, 1:] &= ~above[:, :-1]
    run_id = np.cumsum(run_start, axis=1)  # >= 1 inside runs
    marks = np.where(cand, run_id, 0)
    seen = np.maximum.accumulate(marks, axis=1)
    prev_seen = np.zeros_like(seen)
    prev_seen[:, 1:] = seen[:, :-1]
    first_in_run = cand & (marks > prev_seen)
    return first_in_run.sum(axis=1)


def blink_rate(au45, threshold: float = DEFAULT_BLINK_THRESHOLD) -> float:
    """Run-collapsed peaks above ``threshold`` divided by the series length."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    au = np.asarray(au45, dtype=np.float64)
    if au.ndim != 1 or au.size < 1:
        raise SeriesTooShort("blink_rate needs a non-empty 1-d series")
    return float(_peak_counts(au[None, :], threshold)[0]) / au.size


def _feature_block(segments: np.ndarray, blink_threshold: float) -> np.ndarray:
    """Feature matrix for stacked segments, shape ``(S, seg_len, 14) -> (S, 49)``."""
    s, _, _ = segments.shape
    out = np.empty((s, N_FEATURES), dtype=np.float64)
    val = segments[:, :, CHANNEL_INDEX["valence"]]
    aro = segments[:, :, CHANNEL_INDEX["arousal"]]
    out[:, 0] = val.mean(axis=1)
    out[:, 1] = val.std(axis=1)
    out[:, 2] = aro.mean(axis=1)
    out[:, 3] = aro.std(axis=1)
    au = segments[:, :, CHANNEL_INDEX["au45"]]
    out[:, 4] = _peak_counts(au, blink_threshold) / segments.shape[1]
    col = 5
    for name in POSITIONAL_CHANNELS:
        series = segments[:, :, CHANNEL_INDEX[name]]
        vel = np.diff(series, axis=1)
        acc = np.diff(vel, axis=1)
        out[:, col] = vel.mean(axis=1)
        out[:, col + 1] = vel.std(axis=1)
        out[:, col + 2] = acc.mean(axis=1)
        out[:, col + 3] = acc.std(axis=1)
        col += 4
    return out


def compute_segment_features(segment, blink_threshold: float = DEFAULT_BLINK_THRESHOLD) -> np.ndarray:
    """49-element feature vector of one ``(seg_len, 14)`` frame slice."""
    seg = np.asarray(segment, dtype=np.float64)
    if seg.ndim != 2 or seg.shape[1] != len(CHANNELS):
        raise ValueError(f"segment must be (n, {len(CHANNELS)})")
    if seg.shape[0] < 3:
        raise SegmentTooShort("segment features need at least 3 frames")
    return _feature_block(seg[None], blink_threshold)[0]


def segment_feature_matrix(channels: np.ndarray, segment_len: int,
                           blink_threshold: float = DEFAULT_BLINK_THRESHOLD) -> np.ndarray:
    """Features of every full segment of a channel matrix, shape ``(S, 49)``.

    Vectorized equivalent of segmenting and calling
    ``compute_segment_features`` per slice.
    """
    if segment_len < 3:
        raise ValueError("segment_len must be >= 3")
    n = channels.shape[0]
    count = n // segment_len
    if count < 1:
        raise TrackTooShort(f"{n} frames < segment_len {segment_len}")
    stacked = channels[:count * segment_len].reshape(count, segment_len, channels.shape[1])
    return _feature_block(stacked, blink_threshold)
