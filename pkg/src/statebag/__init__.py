"""statebag: bag-of-states engagement classification from behavioral and
affective per-frame feature tracks.

Pipeline: feature tracks are cut into fixed-length segments, each summarized
by a 49-element statistics vector; k-means over the training segments learns
a codebook of states; every video becomes a histogram of codeword occurrences
(order-free by construction) that an ordinal threshold-decomposition
classifier maps to an engagement level.
"""

from . import baselines, codebook, errors, kernels, metrics, ordinal, pipeline, segfeat, synthetic, tracks
from .kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "__version__",
    "baselines",
    "codebook",
    "errors",
    "kernels",
    "metrics",
    "ordinal",
    "pipeline",
    "segfeat",
    "synthetic",
    "tracks",
]
