"""End-to-end orchestration: tracks -> segment features -> codebook ->
histograms -> ordinal classifier -> metrics, plus the parameter sweep.

These helpers operate on in-memory tracks and manifests; the CLI layers file
formats and artifact-hash chaining on top.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import baselines, codebook as cb, metrics, ordinal, segfeat
from .errors import StatebagError
from .tracks import DatasetManifest, repair_track

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineConfig:
    segment_len: int = 200
    codebook_size: int = 12
    blink_threshold: float = 0.5
    normalize: bool = False
    backend: str = "rbf"
    lam: float = 1.0
    gamma: float = 0.01
    seed: int = 0
    max_invalid_fraction: float = 0.5
    kmeans_max_iter: int = 300
    kmeans_tol: float = 1e-6

    def codebook_config(self) -> dict:
        return {"segment_len": self.segment_len, "blink_threshold": self.blink_threshold,
                "normalize": self.normalize}


@dataclass
class PipelineResult:
    config: PipelineConfig
    codebook: cb.Codebook
    model: ordinal.OrdinalModel
    histograms: dict               # video_id -> histogram vector
    predictions: dict              # video_id -> predicted level
    results: dict = field(default_factory=dict)  # split -> EvalResult


def repair_all(tracks: dict, max_invalid_fraction: float = 0.5) -> dict:
    return {vid: t if t.valid.all() else repair_track(t, max_invalid_fraction)
            for vid, t in tracks.items()}


def tracks_by_id(tracks) -> dict:
    if isinstance(tracks, dict):
        return tracks
    return {t.video_id: t for t in tracks}


def video_segment_features(tracks: dict, config: PipelineConfig) -> dict:
    """Per-video segment feature matrices, shape ``(segments, 49)``."""
    return {
        vid: segfeat.segment_feature_matrix(t.channels, config.segment_len,
                                            config.blink_threshold)
        for vid, t in tracks.items()
    }


def encode_videos(book: cb.Codebook, features: dict, normalize: bool) -> dict:
    return {
        vid: cb.encode_histogram(book, feats, normalize=normalize, video_id=vid).counts
        for vid, feats in features.items()
    }


def _split_matrix(histograms: dict, manifest: DatasetManifest, split: str):
    entries = manifest.split_entries(split)
    h = np.stack([histograms[e.video_id] for e in entries]).astype(np.float64)
    y = np.array([e.label for e in entries], dtype=np.int64)
    return h, y, [e.video_id for e in entries]


def run_pipeline(tracks, manifest: DatasetManifest,
                 config: PipelineConfig = PipelineConfig()) -> PipelineResult:
    """Fit the codebook and classifier on the train split, evaluate the rest."""
    tracks = repair_all(tracks_by_id(tracks), config.max_invalid_fraction)
    features = video_segment_features(tracks, config)
    train_ids = [e.video_id for e in manifest.split_entries("train")]
    train_segments = np.concatenate([features[vid] for vid in train_ids], axis=0)
    book = cb.fit_codebook(train_segments, config.codebook_size, seed=config.seed,
                           max_iter=config.kmeans_max_iter, tol=config.kmeans_tol,
                           config=config.codebook_config())
    histograms = encode_videos(book, features, config.normalize)

    h_train, y_train, _ = _split_matrix(histograms, manifest, "train")
    model = ordinal.train_ordinal(
        h_train, ordinal.OrdinalLabels(manifest.num_levels, y_train),
        backend=config.backend, lam=config.lam, gamma=config.gamma, seed=config.seed,
    )

    predictions = {}
    results = {}
    for split in ("train", "validation", "test"):
        entries = manifest.split_entries(split)
        if not entries:
            continue
        h, y, vids = _split_matrix(histograms, manifest, split)
        _, levels = ordinal.predict_batch(model, h)
        predictions.update(zip(vids, (int(v) for v in levels)))
        results[split] = metrics.evaluate(y, levels, manifest.num_levels)
        logger.info("split=%s n=%d accuracy=%.4f", split, len(y), results[split].accuracy)
    return PipelineResult(config=config, codebook=book, model=model,
                          histograms=histograms, predictions=predictions, results=results)


def run_functional_baseline(tracks, manifest: DatasetManifest,
                            config: PipelineConfig = PipelineConfig()) -> dict:
    """Whole-video functional-feature classifier; returns split -> EvalResult."""
    tracks = repair_all(tracks_by_id(tracks), config.max_invalid_fraction)
    feats = {vid: baselines.functional_features(t, config.blink_threshold)
             for vid, t in tracks.items()}

    def split_xy(split):
        entries = manifest.split_entries(split)
        x = np.stack([feats[e.video_id] for e in entries])
        y = np.array([e.label for e in entries], dtype=np.int64)
        return x, y

    x_train, y_train = split_xy("train")
    model = baselines.train_baseline(
        x_train, ordinal.OrdinalLabels(manifest.num_levels, y_train),
        backend=config.backend, lam=config.lam, gamma=config.gamma, seed=config.seed,
    )
    results = {}
    for split in ("train", "validation", "test"):
        if not manifest.split_entries(split):
            continue
        x, y = split_xy(split)
        _, levels = baselines.predict_baseline(model, x)
        results[split] = metrics.evaluate(y, levels, manifest.num_levels)
        logger.info("baseline split=%s n=%d accuracy=%.4f", split, len(y),
                    results[split].accuracy)
    return results


# -- parameter sweep -----------------------------------------------------------

SWEEP_FIELDS = ("index", "segment_len", "codebook_size", "backend", "lambda", "gamma",
                "status", "error", "wcss", "val_accuracy", "val_f1",
                "test_accuracy", "test_f1", "selected")


def _metric_pair(result):
    if result is None:
        return "", ""
    f1 = result.f1 if result.num_levels == 2 else None
    return f"{result.accuracy:.6f}", "" if f1 is None else f"{f1:.6f}"


def _run_cell(args):
    tracks, manifest, config = args
    try:
        out = run_pipeline(tracks, manifest, config)
        val = out.results.get("validation")
        val_acc, val_f1 = _metric_pair(val)
        test_acc, test_f1 = _metric_pair(out.results.get("test"))
        return {"status": "ok", "error": "", "wcss": f"{out.codebook.wcss:.6f}",
                "val_accuracy": val_acc, "val_f1": val_f1,
                "test_accuracy": test_acc, "test_f1": test_f1,
                "_val": None if val is None else val.accuracy}
    except StatebagError as exc:
        logger.warning("sweep cell failed (%s)", exc)
        return {"status": "error", "error": f"{type(exc).__name__}: {exc}", "wcss": "",
                "val_accuracy": "", "val_f1": "", "test_accuracy": "", "test_f1": "",
                "_val": None}


def sweep(tracks, manifest: DatasetManifest, segment_lens, codebook_sizes, backends,
          config: PipelineConfig = PipelineConfig(), workers: int = 1) -> list[dict]:
    """Grid over (segment_len, codebook_size, backend); one row per cell.

    Failed cells are recorded with their error and the sweep continues. Rows
    keep grid order regardless of worker scheduling; the row with the best
    validation accuracy is flagged ``selected``.
    """
    tracks = tracks_by_id(tracks)
    grid = [(s, k, b) for s in segment_lens for k in codebook_sizes for b in backends]
    if not grid:
        raise ValueError("empty sweep grid")
    cells = [(tracks, manifest, replace(config, segment_len=s, codebook_size=k, backend=b))
             for s, k, b in grid]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_cell, cells))
    else:
        outcomes = [_run_cell(cell) for cell in cells]

    rows = []
    for index, ((s, k, b), outcome) in enumerate(zip(grid, outcomes)):
        row = {"index": index, "segment_len": s, "codebook_size": k, "backend": b,
               "lambda": config.lam, "gamma": config.gamma, "selected": 0}
        row.update({key: val for key, val in outcome.items() if not key.startswith("_")})
        rows.append(row)
    scored = [(outcome["_val"], i) for i, outcome in enumerate(outcomes)
              if outcome["_val"] is not None]
    if scored:
        best = max(scored, key=lambda pair: (pair[0], -pair[1]))
        rows[best[1]]["selected"] = 1
        logger.info("sweep selected row %d (validation accuracy %.4f)", best[1], best[0])
    return rows
