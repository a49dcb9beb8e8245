"""Pure-NumPy implementations of the hot kernels; drop-in for ``_core``.

Distances are computed from explicit coordinate differences (chunked to bound
memory) rather than the ``|x|^2 - 2xy + |y|^2`` expansion, which keeps the
fallback numerically close to the compiled scan.
"""

import numpy as np

_CHUNK_ELEMS = 4_000_000


def _chunk_rows(n_rows, per_row):
    return max(1, _CHUNK_ELEMS // max(1, per_row))


def pairwise_sqdist(x, c):
    n, d = x.shape
    k = c.shape[0]
    if c.shape[1] != d:
        raise ValueError("dimension mismatch between point sets")
    out = np.empty((n, k), dtype=np.float64)
    step = _chunk_rows(n, k * d)
    for s in range(0, n, step):
        diff = x[s:s + step, None, :] - c[None, :, :]
        out[s:s + step] = np.einsum("ijk,ijk->ij", diff, diff)
    return out


def assign_nearest(x, c):
    if c.shape[0] == 0:
        raise ValueError("empty centroid set")
    n = x.shape[0]
    labels = np.empty(n, dtype=np.int64)
    mind = np.empty(n, dtype=np.float64)
    step = _chunk_rows(n, c.shape[0] * x.shape[1])
    for s in range(0, n, step):
        d2 = pairwise_sqdist(x[s:s + step], c)
        lab = d2.argmin(axis=1)  # first occurrence wins, matching the scan's tie rule
        labels[s:s + step] = lab
        mind[s:s + step] = d2[np.arange(d2.shape[0]), lab]
    return labels, mind


def rbf_gram(x, y, gamma):
    return np.exp(-gamma * pairwise_sqdist(x, y))
