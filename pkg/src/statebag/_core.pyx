# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled distance/kernel scans: the hot loops of codebook fitting and RBF models."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp

cnp.import_array()


def pairwise_sqdist(double[:, ::1] x, double[:, ::1] c):
    """Squared Euclidean distance between every row of ``x`` and every row of ``c``."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t k = c.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    if c.shape[1] != d:
        raise ValueError("dimension mismatch between point sets")
    out_arr = np.empty((n, k), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, t
    cdef double s, diff
    for i in range(n):
        for j in range(k):
            s = 0.0
            for t in range(d):
                diff = x[i, t] - c[j, t]
                s += diff * diff
            out[i, j] = s
    return out_arr


def assign_nearest(double[:, ::1] x, double[:, ::1] c):
    """Nearest row of ``c`` for each row of ``x``.

    Returns ``(labels, sqdist)``; ties resolve to the lowest index because the
    scan only replaces the incumbent on a strictly smaller distance.
    """
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t k = c.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    if c.shape[1] != d:
        raise ValueError("dimension mismatch between point sets")
    if k == 0:
        raise ValueError("empty centroid set")
    labels_arr = np.empty(n, dtype=np.int64)
    mind_arr = np.empty(n, dtype=np.float64)
    cdef long long[::1] labels = labels_arr
    cdef double[::1] mind = mind_arr
    cdef Py_ssize_t i, j, t, best
    cdef double s, diff, bestd
    for i in range(n):
        best = 0
        bestd = 0.0
        for t in range(d):
            diff = x[i, t] - c[0, t]
            bestd += diff * diff
        for j in range(1, k):
            s = 0.0
            for t in range(d):
                diff = x[i, t] - c[j, t]
                s += diff * diff
            if s < bestd:
                bestd = s
                best = j
        labels[i] = best
        mind[i] = bestd
    return labels_arr, mind_arr


def rbf_gram(double[:, ::1] x, double[:, ::1] y, double gamma):
    """Gaussian kernel matrix ``exp(-gamma * ||x_i - y_j||^2)``."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t m = y.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    if y.shape[1] != d:
        raise ValueError("dimension mismatch between point sets")
    out_arr = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, t
    cdef double s, diff
    for i in range(n):
        for j in range(m):
            s = 0.0
            for t in range(d):
                diff = x[i, t] - y[j, t]
                s += diff * diff
            out[i, j] = exp(-gamma * s)
    return out_arr
