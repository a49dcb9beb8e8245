"""Codebook of behavioral/affective states: k-means over standardized segment
features, plus codeword assignment and histogram encoding.

Clustering runs on z-scored features (parameters learned on the training
segments and stored with the codebook) so that Euclidean distances are not
dominated by large-unit channels. Fitting is deterministic: a seeded
generator drives the k-means++ draws and Lloyd iterations contain no
randomness, so identical (data, config, seed) reproduce the codebook
bit for bit on a given kernel backend.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .errors import EmptySegmentList, NotEnoughData, StatebagError, TooFewPoints

logger = logging.getLogger(__name__)

STD_FLOOR = 1e-12
CODEBOOK_VERSION = 1


@dataclass
class Standardizer:
    """Per-dimension z-scoring with a floor on degenerate stds."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.std = np.asarray(self.std, dtype=np.float64)
        if np.any(self.std <= 0):
            raise ValueError("std entries must be positive")

    @classmethod
    def identity(cls, dims: int) -> "Standardizer":
        return cls(np.zeros(dims), np.ones(dims))

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.mean) / self.std

    def inverse(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z, dtype=np.float64) * self.std + self.mean


def fit_standardizer(x) -> Standardizer:
    """Per-dimension mean and population std over training vectors."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise NotEnoughData("standardizer needs at least 2 vectors")
    std = x.std(axis=0)
    return Standardizer(mean=x.mean(axis=0), std=np.maximum(std, STD_FLOOR))


@dataclass
class Codebook:
    """K learned state centroids in standardized feature space."""

    centroids: np.ndarray          # (K, dims)
    standardizer: Standardizer
    rng_seed: int
    wcss: float
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        self.centroids = np.asarray(self.centroids, dtype=np.float64)
        if self.centroids.ndim != 2 or self.centroids.shape[0] < 2:
            raise ValueError("codebook needs at least 2 centroids")
        if self.wcss < 0:
            raise ValueError("wcss must be >= 0")

    @property
    def size(self) -> int:
        return self.centroids.shape[0]

    @property
    def dims(self) -> int:
        return self.centroids.shape[1]


@dataclass
class StateHistogram:
    """Codeword occurrence counts of one video (fractions when normalized)."""

    counts: np.ndarray
    video_id: str = ""

    def __post_init__(self):
        self.counts = np.asarray(self.counts)


def kmeanspp_seed(x, k: int, seed: int = 0) -> np.ndarray:
    """k-means++ initial centroids: first uniform, then squared-distance sampling.

    Deterministic for a given seed. Needs at least ``k`` distinct points;
    duplicates of already chosen points carry zero mass and are never picked.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    n = x.shape[0]
    if n < k:
        raise TooFewPoints(f"{n} points < k={k}")
    if np.unique(x, axis=0).shape[0] < k:
        raise TooFewPoints(f"fewer than k={k} distinct points")
    rng = np.random.default_rng(seed)
    chosen = np.empty(k, dtype=np.int64)
    chosen[0] = rng.integers(n)
    d2 = kernels.pairwise_sqdist(x, x[chosen[0]:chosen[0] + 1])[:, 0]
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:  # only duplicates remain unchosen; cannot happen with the distinct check
            mask = np.ones(n, dtype=bool)
            mask[chosen[:j]] = False
            cand = int(np.flatnonzero(mask)[0])
        else:
            r = rng.random() * total
            cand = int(min(np.searchsorted(np.cumsum(d2), r, side="right"), n - 1))
        chosen[j] = cand
        d2 = np.minimum(d2, kernels.pairwise_sqdist(x, x[cand:cand + 1])[:, 0])
    return x[chosen].copy()


def _centroid_means(x: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    counts = np.bincount(labels, minlength=k)
    sums = np.empty((k, x.shape[1]), dtype=np.float64)
    for d in range(x.shape[1]):
        sums[:, d] = np.bincount(labels, weights=x[:, d], minlength=k)
    return sums / counts[:, None]


def _assign_with_repair(x, centroids, k):
    """Assignment step; empty clusters are reseeded to the farthest points.

    Mutates ``centroids`` rows for reseeded clusters. Reseeding moves each
    stolen point's contribution to zero, so the returned WCSS never exceeds
    the plain assignment's.
    """
    labels, mind = kernels.assign_nearest(x, centroids)
    counts = np.bincount(labels, minlength=k)
    empties = np.flatnonzero(counts == 0)
    if empties.size:
        order = np.lexsort((np.arange(x.shape[0]), -mind))
        pos = 0
        for j in empties:
            while counts[labels[order[pos]]] < 2:
                pos += 1
            p = order[pos]
            pos += 1
            counts[labels[p]] -= 1
            labels[p] = j
            counts[j] = 1
            centroids[j] = x[p]
            mind[p] = 0.0
    return labels, mind


def lloyd_iterate(x, init_centroids, max_iter: int = 300, tol: float = 1e-6):
    """Lloyd iterations from given initial centroids.

    Alternates nearest-centroid assignment and mean updates until the
    relative WCSS improvement is <= ``tol`` or ``max_iter`` updates ran.
    Returns ``(centroids, labels, wcss, history)``; the returned labels are
    the assignment under the returned centroids. WCSS is checked to be
    non-increasing at every iteration.
    """
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    if tol < 0:
        raise ValueError("tol must be >= 0")
    x = np.ascontiguousarray(x, dtype=np.float64)
    centroids = np.array(init_centroids, dtype=np.float64)
    k = centroids.shape[0]
    labels, mind = _assign_with_repair(x, centroids, k)
    wcss = float(mind.sum())
    history = [wcss]
    for _ in range(max_iter):
        new_centroids = _centroid_means(x, labels, k)
        labels, mind = _assign_with_repair(x, new_centroids, k)
        new_wcss = float(mind.sum())
        if new_wcss > wcss * (1.0 + 1e-9) + 1e-12:
            raise StatebagError(f"WCSS increased: {wcss} -> {new_wcss}")
        history.append(new_wcss)
        centroids = new_centroids
        improvement = wcss - new_wcss
        converged = improvement <= tol * wcss
        wcss = new_wcss
        if converged:
            break
    return centroids, labels, wcss, history


def lloyd_fit(x, k: int, seed: int = 0, max_iter: int = 300, tol: float = 1e-6,
              standardizer: Standardizer | None = None,
              config: dict | None = None) -> Codebook:
    """k-means++ seeding followed by Lloyd iterations on pre-standardized data."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    init = kmeanspp_seed(x, k, seed)
    centroids, _, wcss, history = lloyd_iterate(x, init, max_iter=max_iter, tol=tol)
    if np.unique(centroids, axis=0).shape[0] < k:
        raise StatebagError("degenerate codebook: duplicate centroids")
    logger.info("lloyd: k=%d n=%d iters=%d wcss=%.6g", k, x.shape[0], len(history) - 1, wcss)
    logger.debug("lloyd wcss trajectory: %s", ["%.6g" % w for w in history])
    return Codebook(
        centroids=centroids,
        standardizer=standardizer if standardizer is not None else Standardizer.identity(x.shape[1]),
        rng_seed=seed,
        wcss=wcss,
        config=dict(config or {}),
    )


def fit_codebook(raw_x, k: int, seed: int = 0, max_iter: int = 300, tol: float = 1e-6,
                 config: dict | None = None) -> Codebook:
    """Standardize raw segment features, then fit the codebook on them."""
    raw_x = np.asarray(raw_x, dtype=np.float64)
    standardizer = fit_standardizer(raw_x)
    return lloyd_fit(standardizer.transform(raw_x), k, seed=seed, max_iter=max_iter,
                     tol=tol, standardizer=standardizer, config=config)


def assign_codewords(cb: Codebook, x) -> np.ndarray:
    """Nearest-centroid codeword for each raw feature vector (ties -> lowest index)."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != cb.dims:
        raise ValueError(f"expected {cb.dims}-dim vectors, got {x.shape[1]}")
    labels, _ = kernels.assign_nearest(cb.standardizer.transform(x), cb.centroids)
    return labels


def assign_codeword(cb: Codebook, x) -> int:
    return int(assign_codewords(cb, x)[0])


def encode_histogram(cb: Codebook, segments, normalize: bool = False,
                     video_id: str = "") -> StateHistogram:
    """Histogram of codeword occurrences over a video's segment vectors.

    Counts are integers summing to the number of segments; with
    ``normalize=True`` they are emitted as fractions instead.
    """
    segments = np.asarray(segments, dtype=np.float64)
    if segments.ndim != 2 or segments.shape[0] == 0:
        raise EmptySegmentList("no segments to encode")
    labels = assign_codewords(cb, segments)
    counts = np.bincount(labels, minlength=cb.size).astype(np.int64)
    if normalize:
        return StateHistogram(counts / segments.shape[0], video_id=video_id)
    return StateHistogram(counts, video_id=video_id)


# -- persistence ---------------------------------------------------------------

def codebook_payload(cb: Codebook) -> dict:
    return {
        "version": CODEBOOK_VERSION,
        "K": cb.size,
        "dims": cb.dims,
        "seed": cb.rng_seed,
        "standardizer": {"mean": cb.standardizer.mean.tolist(),
                         "std": cb.standardizer.std.tolist()},
        "centroids": cb.centroids.tolist(),
        "wcss": cb.wcss,
        "config": cb.config,
    }


def save_codebook(cb: Codebook, path) -> None:
    Path(path).write_text(json.dumps(codebook_payload(cb), indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def load_codebook(path) -> Codebook:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    cb = Codebook(
        centroids=np.array(payload["centroids"], dtype=np.float64),
        standardizer=Standardizer(np.array(payload["standardizer"]["mean"]),
                                  np.array(payload["standardizer"]["std"])),
        rng_seed=int(payload["seed"]),
        wcss=float(payload["wcss"]),
        config=payload.get("config", {}),
    )
    if cb.size != payload["K"] or cb.dims != payload["dims"]:
        raise StatebagError(f"inconsistent codebook file {path}")
    return cb


def file_hash(path) -> str:
    """sha256 of an artifact file, used to pin codebook/model/histogram chains."""
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
