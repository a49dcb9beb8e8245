"""Ordinal engagement classifier: threshold binary decomposition over L levels.

An L-level label is decomposed into L-1 binary problems ("is the level <= i"),
each solved by a probabilistic classifier; the per-level distribution is
recovered from the chain of P(y > i) estimates by telescoping differences,
with negative entries clamped to zero and the vector renormalized. For L = 2
a single binary classifier (positive class = level 1) is used directly.

Backends are L2-regularized logistic regression, linear or on a Gaussian
kernel Gram matrix; both yield calibrated probabilities natively and are
trained by gradient descent with a backtracking line search (stop at gradient
norm <= 1e-8 or 10,000 iterations). Training is deterministic: parameters
start at zero and nothing is sampled, so the ``seed`` argument only pins the
interface.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .errors import (
    DimensionMismatch,
    IndexOutOfRange,
    InvalidProbability,
    LabelOutOfRange,
    SingleClassTraining,
)

logger = logging.getLogger(__name__)

MODEL_VERSION = 1
GRAD_TOL = 1e-8
MAX_ITER = 10_000


@dataclass
class OrdinalLabels:
    """Per-sample integer levels in [0, num_levels - 1]."""

    num_levels: int
    labels: np.ndarray

    def __post_init__(self):
        if self.num_levels < 2:
            raise ValueError("num_levels must be >= 2")
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.num_levels):
            raise LabelOutOfRange(f"labels must lie in [0, {self.num_levels - 1}]")


def binarize_labels(labels: OrdinalLabels, i: int) -> np.ndarray:
    """Binary targets for threshold ``i``: 1 where level <= i, else 0."""
    if not 0 <= i <= labels.num_levels - 2:
        raise IndexOutOfRange(f"threshold {i} outside [0, {labels.num_levels - 2}]")
    return (labels.labels <= i).astype(np.int64)


# -- numerics -----------------------------------------------------------------

def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _minimize(fun_grad, x0, gtol: float = GRAD_TOL, max_iter: int = MAX_ITER):
    """Gradient descent with Armijo backtracking; returns (x, f, gnorm, iters)."""
    x = np.array(x0, dtype=np.float64)
    f, g = fun_grad(x)
    step = 1.0
    gnorm = float(np.linalg.norm(g))
    iters = 0
    while gnorm > gtol and iters < max_iter:
        iters += 1
        sq = gnorm * gnorm
        t = step
        while True:
            x_try = x - t * g
            f_try, g_try = fun_grad(x_try)
            if f_try <= f - 1e-4 * t * sq:
                break
            t *= 0.5
            if t <= 1e-20:  # no descent direction left at float resolution
                return x, f, gnorm, iters
        x, f, g = x_try, f_try, g_try
        gnorm = float(np.linalg.norm(g))
        step = min(t * 2.0, 1e6)
    return x, f, gnorm, iters


def _validate_binary(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise ValueError("expected X (n, d) and y (n,)")
    if x.shape[0] < 2 or np.unique(y).size < 2:
        raise SingleClassTraining("training data must contain both classes")
    return x, y


# -- classifier backends --------------------------------------------------------

@dataclass
class LinearLogistic:
    """L2-regularized logistic regression (bias unregularized)."""

    weights: np.ndarray
    bias: float
    lam: float

    def predict_proba(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        return _sigmoid(x @ self.weights + self.bias)


@dataclass
class RBFKernelLogistic:
    """Kernel logistic regression on a Gaussian Gram matrix."""

    support: np.ndarray
    alpha: np.ndarray
    bias: float
    gamma: float
    lam: float

    def predict_proba(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        g = kernels.rbf_gram(x, self.support, self.gamma)
        return _sigmoid(g @ self.alpha + self.bias)


@dataclass
class ConstantClassifier:
    """Emits a fixed probability; stands in for degenerate binary splits."""

    p: float

    def predict_proba(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        return np.full(x.shape[0], self.p, dtype=np.float64)


def logistic_objective(x, y, lam):
    """Sum negative log-likelihood + (lam/2)||w||^2; returns a (f, grad) closure.

    Parameter vector layout: ``theta = [w_0 .. w_{d-1}, b]``.
    """
    d = x.shape[1]

    def fun_grad(theta):
        w = theta[:d]
        b = theta[d]
        z = x @ w + b
        f = float(np.logaddexp(0.0, z).sum() - y @ z + 0.5 * lam * (w @ w))
        r = _sigmoid(z) - y
        grad = np.empty(d + 1)
        grad[:d] = x.T @ r + lam * w
        grad[d] = r.sum()
        return f, grad

    return fun_grad


def kernel_logistic_objective(gram, y, lam):
    """Kernel NLL + (lam/2) a^T G a over ``theta = [alpha_0 .. alpha_{n-1}, b]``."""
    n = gram.shape[0]

    def fun_grad(theta):
        a = theta[:n]
        b = theta[n]
        ga = gram @ a
        z = ga + b
        f = float(np.logaddexp(0.0, z).sum() - y @ z + 0.5 * lam * (a @ ga))
        r = _sigmoid(z) - y
        grad = np.empty(n + 1)
        grad[:n] = gram @ r + lam * ga
        grad[n] = r.sum()
        return f, grad

    return fun_grad


def fit_logistic(x, y, lam: float = 1.0, seed: int = 0,
                 gtol: float = GRAD_TOL, max_iter: int = MAX_ITER) -> LinearLogistic:
    """Train linear logistic regression on binary targets in {0, 1}."""
    if lam < 0:
        raise ValueError("lam must be >= 0")
    x, y = _validate_binary(x, y)
    fun_grad = logistic_objective(x, y, lam)
    theta, _, gnorm, iters = _minimize(fun_grad, np.zeros(x.shape[1] + 1), gtol, max_iter)
    logger.debug("fit_logistic: n=%d iters=%d gnorm=%.3g", x.shape[0], iters, gnorm)
    return LinearLogistic(weights=theta[:-1].copy(), bias=float(theta[-1]), lam=float(lam))


def fit_rbf_logistic(x, y, lam: float = 1.0, gamma: float = 0.01, seed: int = 0,
                     gtol: float = GRAD_TOL, max_iter: int = MAX_ITER) -> RBFKernelLogistic:
    """Train kernel logistic regression with a Gaussian kernel."""
    if lam < 0:
        raise ValueError("lam must be >= 0")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    x, y = _validate_binary(x, y)
    gram = kernels.rbf_gram(x, x, gamma)
    if not np.array_equal(gram, gram.T) or not np.all(gram.diagonal() == 1.0):
        raise ValueError("Gram matrix must be exactly symmetric with unit diagonal")
    fun_grad = kernel_logistic_objective(gram, y, lam)
    theta, _, gnorm, iters = _minimize(fun_grad, np.zeros(x.shape[0] + 1), gtol, max_iter)
    logger.debug("fit_rbf_logistic: n=%d iters=%d gnorm=%.3g", x.shape[0], iters, gnorm)
    return RBFKernelLogistic(support=x.copy(), alpha=theta[:-1].copy(),
                             bias=float(theta[-1]), gamma=float(gamma), lam=float(lam))


_BACKENDS = {"linear": fit_logistic, "rbf": fit_rbf_logistic}


# -- probability combination -----------------------------------------------------

def _combine_rows(p_gt: np.ndarray):
    """Level distributions from rows of exceedance probabilities P(y > i).

    raw[0] = 1 - P(y>0); raw[k] = P(y>k-1) - P(y>k); raw[L-1] = P(y>L-2).
    Negative entries (non-monotone inputs) are clamped to zero and the row is
    renormalized; the raw row telescopes to one, so the sum never vanishes.
    """
    p_gt = np.atleast_2d(np.asarray(p_gt, dtype=np.float64))
    n, m = p_gt.shape
    levels = m + 1
    raw = np.empty((n, levels))
    raw[:, 0] = 1.0 - p_gt[:, 0]
    if levels > 2:
        raw[:, 1:levels - 1] = p_gt[:, :-1] - p_gt[:, 1:]
    raw[:, levels - 1] = p_gt[:, -1]
    clamped = np.maximum(raw, 0.0)
    probs = clamped / clamped.sum(axis=1, keepdims=True)
    return probs, probs.argmax(axis=1)


def combine_probabilities(p_gt):
    """Combine P(y > i) estimates into (level probabilities, predicted level)."""
    p_gt = np.asarray(p_gt, dtype=np.float64)
    if p_gt.ndim != 1 or p_gt.size < 1:
        raise InvalidProbability("expected a 1-d vector of L-1 probabilities")
    if np.any(~((p_gt >= 0.0) & (p_gt <= 1.0))):
        raise InvalidProbability("probabilities must lie in [0, 1]")
    probs, levels = _combine_rows(p_gt[None])
    return probs[0], int(levels[0])


# -- ordinal model ----------------------------------------------------------------

@dataclass
class OrdinalModel:
    """L-1 threshold classifiers (or one direct binary classifier when L = 2)."""

    num_levels: int
    input_dim: int
    backend: str
    lam: float
    gamma: float | None
    classifiers: list = field(default_factory=list)

    def __post_init__(self):
        expected = 1 if self.num_levels == 2 else self.num_levels - 1
        if len(self.classifiers) != expected:
            raise ValueError(f"expected {expected} classifiers, got {len(self.classifiers)}")


def train_ordinal(h, labels: OrdinalLabels, backend: str = "rbf", lam: float = 1.0,
                  gamma: float = 0.01, seed: int = 0) -> OrdinalModel:
    """Train the ordinal model on histogram rows ``h`` and their levels.

    Binary datasets get a single classifier with level 1 as the positive
    class. A threshold problem whose training targets collapse to one class
    is replaced by a constant classifier emitting the empirical prior (with a
    logged warning) so heavily imbalanced data still trains end to end.
    """
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 2 or h.shape[0] != labels.labels.shape[0]:
        raise DimensionMismatch("histogram/label row mismatch")
    if backend not in _BACKENDS:
        raise ValueError(f"unknown backend {backend!r}")
    fit = _BACKENDS[backend]
    kwargs = {"lam": lam, "seed": seed}
    if backend == "rbf":
        kwargs["gamma"] = gamma

    def fit_or_constant(y, what):
        if np.unique(y).size < 2:
            prior = float(np.mean(y))
            logger.warning("%s has a single class; using constant prior %.3f", what, prior)
            return ConstantClassifier(prior)
        return fit(h, y, **kwargs)

    if labels.num_levels == 2:
        classifiers = [fit_or_constant((labels.labels == 1).astype(np.int64), "binary problem")]
    else:
        classifiers = [
            fit_or_constant(binarize_labels(labels, i), f"threshold problem {i}")
            for i in range(labels.num_levels - 1)
        ]
    return OrdinalModel(
        num_levels=labels.num_levels,
        input_dim=h.shape[1],
        backend=backend,
        lam=float(lam),
        gamma=float(gamma) if backend == "rbf" else None,
        classifiers=classifiers,
    )


def predict_batch(model: OrdinalModel, h):
    """Level probabilities and predicted levels for histogram rows."""
    h = np.atleast_2d(np.asarray(h, dtype=np.float64))
    if h.shape[1] != model.input_dim:
        raise DimensionMismatch(
            f"model expects {model.input_dim}-bin histograms, got {h.shape[1]}"
        )
    if model.num_levels == 2:
        p1 = model.classifiers[0].predict_proba(h)
        probs = np.stack([1.0 - p1, p1], axis=1)
        return probs, probs.argmax(axis=1)
    p_le = np.stack([clf.predict_proba(h) for clf in model.classifiers], axis=1)
    return _combine_rows(1.0 - p_le)


def predict(model: OrdinalModel, h):
    """Probabilities and level for a single histogram vector."""
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 1:
        raise DimensionMismatch("expected a 1-d histogram")
    probs, levels = predict_batch(model, h[None])
    return probs[0], int(levels[0])


# -- persistence -------------------------------------------------------------------

def _classifier_payload(clf) -> dict:
    if isinstance(clf, LinearLogistic):
        return {"kind": "linear", "weights": clf.weights.tolist(),
                "bias": clf.bias, "lam": clf.lam}
    if isinstance(clf, RBFKernelLogistic):
        return {"kind": "rbf", "support": clf.support.tolist(), "alpha": clf.alpha.tolist(),
                "bias": clf.bias, "gamma": clf.gamma, "lam": clf.lam}
    if isinstance(clf, ConstantClassifier):
        return {"kind": "constant", "p": clf.p}
    raise TypeError(f"unknown classifier type {type(clf)!r}")


def _classifier_from_payload(payload) -> object:
    kind = payload["kind"]
    if kind == "linear":
        return LinearLogistic(np.array(payload["weights"]), float(payload["bias"]),
                              float(payload["lam"]))
    if kind == "rbf":
        return RBFKernelLogistic(np.array(payload["support"]), np.array(payload["alpha"]),
                                 float(payload["bias"]), float(payload["gamma"]),
                                 float(payload["lam"]))
    if kind == "constant":
        return ConstantClassifier(float(payload["p"]))
    raise ValueError(f"unknown classifier kind {kind!r}")


def model_payload(model: OrdinalModel, codebook_hash: str = "",
                  normalize: bool = False) -> dict:
    return {
        "version": MODEL_VERSION,
        "num_levels": model.num_levels,
        "input_dim": model.input_dim,
        "backend": model.backend,
        "hyperparams": {"lambda": model.lam, "gamma": model.gamma},
        "normalize": normalize,
        "codebook_hash": codebook_hash,
        "classifiers": [_classifier_payload(c) for c in model.classifiers],
    }


def save_model(model: OrdinalModel, path, codebook_hash: str = "",
               normalize: bool = False) -> None:
    payload = model_payload(model, codebook_hash=codebook_hash, normalize=normalize)
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def load_model(path):
    """Returns ``(OrdinalModel, meta)``; meta carries codebook_hash and normalize."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    hyper = payload["hyperparams"]
    model = OrdinalModel(
        num_levels=int(payload["num_levels"]),
        input_dim=int(payload["input_dim"]),
        backend=payload["backend"],
        lam=float(hyper["lambda"]),
        gamma=None if hyper["gamma"] is None else float(hyper["gamma"]),
        classifiers=[_classifier_from_payload(c) for c in payload["classifiers"]],
    )
    meta = {"codebook_hash": payload.get("codebook_hash", ""),
            "normalize": bool(payload.get("normalize", False))}
    return model, meta
