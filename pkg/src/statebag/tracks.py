"""Frame-level feature tracks: CSV ingestion, validation, repair, manifests.

Track CSV format (UTF-8, comma separated)::

    frame,valence,arousal,au45,gaze_x,gaze_y,head_x,head_y,head_z,
    head_pitch,head_yaw,head_roll,wrist_x,wrist_y,wrist_z[,valid]

``frame`` is a strictly increasing integer index. ``valid`` is 0/1 and
optional on read (missing means all frames valid); the writer always emits
it. Extra columns are ignored with a warning. Floats are written with
``repr`` so that write/parse round-trips are bit exact.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    EmptyTrack,
    LabelOutOfRange,
    ManifestError,
    MissingColumn,
    NonMonotonicFrameIndex,
    TooManyInvalid,
    ValueOutOfRange,
)

#: Channel columns in canonical order (CSV order after the leading ``frame``).
CHANNELS = (
    "valence", "arousal", "au45",
    "gaze_x", "gaze_y",
    "head_x", "head_y", "head_z",
    "head_pitch", "head_yaw", "head_roll",
    "wrist_x", "wrist_y", "wrist_z",
)

NUM_CHANNELS = len(CHANNELS)
CHANNEL_INDEX = {name: i for i, name in enumerate(CHANNELS)}

SPLITS = ("train", "validation", "test")


@dataclass
class FrameRecord:
    """One video frame's raw feature channels."""

    frame_index: int
    valence: float
    arousal: float
    au45: float
    gaze_x: float
    gaze_y: float
    head_x: float
    head_y: float
    head_z: float
    head_pitch: float
    head_yaw: float
    head_roll: float
    wrist_x: float
    wrist_y: float
    wrist_z: float
    valid: bool = True

    def channel_values(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in CHANNELS], dtype=np.float64)


@dataclass
class FeatureTrack:
    """Per-frame channels of one video, stored column-wise."""

    video_id: str
    fps: float
    frame_index: np.ndarray   # (n,) int64, strictly increasing
    channels: np.ndarray      # (n, 14) float64, column order = CHANNELS
    valid: np.ndarray         # (n,) bool

    def __post_init__(self):
        self.frame_index = np.asarray(self.frame_index, dtype=np.int64)
        self.channels = np.asarray(self.channels, dtype=np.float64)
        self.valid = np.asarray(self.valid, dtype=bool)
        if self.channels.ndim != 2 or self.channels.shape[1] != NUM_CHANNELS:
            raise ValueError(f"channels must be (n, {NUM_CHANNELS})")
        n = self.channels.shape[0]
        if self.frame_index.shape != (n,) or self.valid.shape != (n,):
            raise ValueError("frame_index/valid length mismatch")
        if self.fps <= 0:
            raise ValueError("fps must be positive")

    def __len__(self) -> int:
        return self.channels.shape[0]

    def channel(self, name: str) -> np.ndarray:
        return self.channels[:, CHANNEL_INDEX[name]]

    def frame(self, i: int) -> FrameRecord:
        vals = self.channels[i]
        return FrameRecord(
            int(self.frame_index[i]),
            *(float(v) for v in vals),
            valid=bool(self.valid[i]),
        )

    @classmethod
    def from_records(cls, video_id: str, fps: float, records) -> "FeatureTrack":
        records = list(records)
        if not records:
            raise EmptyTrack(f"track {video_id!r} has no frames")
        return cls(
            video_id=video_id,
            fps=fps,
            frame_index=np.array([r.frame_index for r in records], dtype=np.int64),
            channels=np.stack([r.channel_values() for r in records]),
            valid=np.array([r.valid for r in records], dtype=bool),
        )


def _validate_frames(frame_index: np.ndarray, channels: np.ndarray) -> None:
    steps = np.diff(frame_index)
    if np.any(steps <= 0):
        raise NonMonotonicFrameIndex(int(np.argmax(steps <= 0)) + 1)
    for name in ("valence", "arousal"):
        col = channels[:, CHANNEL_INDEX[name]]
        bad = ~((col >= -1.0) & (col <= 1.0))  # catches NaN as well
        if np.any(bad):
            raise ValueOutOfRange(name, int(np.argmax(bad)))
    au = channels[:, CHANNEL_INDEX["au45"]]
    bad = ~(au >= 0.0)
    if np.any(bad):
        raise ValueOutOfRange("au45", int(np.argmax(bad)))


def parse_track(path, fps: float, video_id: str | None = None) -> FeatureTrack:
    """Read one track CSV, validating ranges and frame-index monotonicity.

    Rows with ``valid=0`` are retained and flagged; ``repair_track`` fills
    them. Data row indices in errors are 0-based.
    """
    path = Path(path)
    if fps <= 0:
        raise ValueError("fps must be positive")
    with path.open(newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh), None)
    if header is None:
        raise EmptyTrack(f"{path} is empty")
    header = [h.strip() for h in header]
    positions = {name: i for i, name in enumerate(header)}
    for name in ("frame",) + CHANNELS:
        if name not in positions:
            raise MissingColumn(name)
    known = set(("frame", "valid") + CHANNELS)
    extras = [h for h in header if h not in known]
    if extras:
        warnings.warn(f"{path.name}: ignoring extra columns {extras}")

    usecols = [positions["frame"]] + [positions[c] for c in CHANNELS]
    has_valid = "valid" in positions
    if has_valid:
        usecols.append(positions["valid"])
    data = np.loadtxt(path, delimiter=",", skiprows=1, usecols=usecols, ndmin=2)
    if data.size == 0:
        raise EmptyTrack(f"{path} has a header but no frames")

    frame_index = data[:, 0].astype(np.int64)
    channels = np.ascontiguousarray(data[:, 1:1 + NUM_CHANNELS])
    if has_valid:
        raw_valid = data[:, -1]
        bad = ~np.isin(raw_valid, (0.0, 1.0))
        if np.any(bad):
            raise ValueOutOfRange("valid", int(np.argmax(bad)))
        valid = raw_valid.astype(bool)
    else:
        valid = np.ones(len(frame_index), dtype=bool)
    _validate_frames(frame_index, channels)
    return FeatureTrack(
        video_id=video_id if video_id is not None else path.stem,
        fps=fps,
        frame_index=frame_index,
        channels=channels,
        valid=valid,
    )


def write_track(track: FeatureTrack, path) -> None:
    """Write a track CSV in the canonical column order (bit-exact round trip)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("frame",) + CHANNELS + ("valid",))
        for idx, row, ok in zip(track.frame_index, track.channels, track.valid):
            writer.writerow([int(idx)] + [repr(float(v)) for v in row] + [int(ok)])


def repair_track(track: FeatureTrack, max_invalid_fraction: float = 0.5) -> FeatureTrack:
    """Fill invalid frames from the most recent valid frame.

    Leading invalid runs are filled backward from the first valid frame.
    Raises ``TooManyInvalid`` when the invalid fraction exceeds
    ``max_invalid_fraction`` or no valid frame exists to fill from.
    Idempotent; valid frames are never modified.
    """
    if not 0.0 <= max_invalid_fraction <= 1.0:
        raise ValueError("max_invalid_fraction must be within [0, 1]")
    n = len(track)
    invalid_fraction = 1.0 - track.valid.mean()
    if invalid_fraction > max_invalid_fraction:
        raise TooManyInvalid(
            f"{track.video_id}: {invalid_fraction:.3f} invalid > {max_invalid_fraction}"
        )
    if track.valid.all():
        return FeatureTrack(track.video_id, track.fps, track.frame_index.copy(),
                            track.channels.copy(), np.ones(n, dtype=bool))
    if not track.valid.any():
        raise TooManyInvalid(f"{track.video_id}: no valid frame to fill from")
    idx = np.where(track.valid, np.arange(n), -1)
    fill = np.maximum.accumulate(idx)
    first_valid = int(np.argmax(track.valid))
    fill[fill < 0] = first_valid
    return FeatureTrack(
        video_id=track.video_id,
        fps=track.fps,
        frame_index=track.frame_index.copy(),
        channels=track.channels[fill],
        valid=np.ones(n, dtype=bool),
    )


# -- dataset manifests -------------------------------------------------------

@dataclass
class ManifestEntry:
    video_id: str
    track_path: str
    label: int
    split: str


@dataclass
class DatasetManifest:
    """Index of a dataset: per-video track path, label, and split."""

    entries: list = field(default_factory=list)
    num_levels: int = 2

    def __post_init__(self):
        if self.num_levels < 2:
            raise ManifestError("num_levels must be >= 2")
        for e in self.entries:
            if e.split not in SPLITS:
                raise ManifestError(f"unknown split {e.split!r} for {e.video_id!r}")
            if not 0 <= e.label < self.num_levels:
                raise LabelOutOfRange(
                    f"label {e.label} outside [0, {self.num_levels - 1}] for {e.video_id!r}"
                )
        for split in ("train", "test"):
            if not any(e.split == split for e in self.entries):
                raise ManifestError(f"split {split!r} is empty")

    def split_entries(self, split: str) -> list:
        return [e for e in self.entries if e.split == split]

    def labels(self, split: str) -> np.ndarray:
        return np.array([e.label for e in self.split_entries(split)], dtype=np.int64)


def save_manifest(manifest: DatasetManifest, path) -> None:
    payload = {
        "num_levels": manifest.num_levels,
        "entries": [
            {"video_id": e.video_id, "track_path": e.track_path,
             "label": e.label, "split": e.split}
            for e in manifest.entries
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def load_manifest(path) -> DatasetManifest:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        entries = [
            ManifestEntry(e["video_id"], e["track_path"], int(e["label"]), e["split"])
            for e in payload["entries"]
        ]
        return DatasetManifest(entries=entries, num_levels=int(payload["num_levels"]))
    except (KeyError, TypeError) as exc:
        raise ManifestError(f"malformed manifest {path}: {exc}") from exc
