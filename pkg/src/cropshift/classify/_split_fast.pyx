# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled best-split search; must pick bit-identical splits to _split_py.

Scores are float64 functions of exact integer class counts, evaluated with
the same expression as the numpy fallback, so both backends agree on every
comparison. Candidates scan features ascending, boundaries ascending, strict
improvement only: the first occurrence of the maximum wins, matching argmax
over a feature-major array.
"""

import numpy as np

from libc.stdlib cimport free, malloc, qsort


cdef struct ValCode:
    double v
    int c


cdef int _cmp_valcode(const void* a, const void* b) noexcept nogil:
    cdef double av = (<const ValCode*> a).v
    cdef double bv = (<const ValCode*> b).v
    if av < bv:
        return -1
    elif av > bv:
        return 1
    return 0


def best_split_node(double[:, ::1] X, long long[::1] idx, long long[::1] feats,
                    int[::1] y, int n_classes, long long min_leaf,
                    double parent_score, long long[::1] counts):
    """Best (feature position, threshold) for one tree node, or (-1, nan)."""
    cdef Py_ssize_t n = idx.shape[0]
    cdef Py_ssize_t m = feats.shape[0]
    cdef Py_ssize_t i, j, k
    cdef long long f, n_left, n_right, sumsq_left, sumsq_right, parent_sumsq
    cdef double score, best_score, best_thr
    cdef Py_ssize_t best_j = -1
    cdef ValCode* buf
    cdef long long* cnt_left
    cdef long long* cnt_right

    if n < 2:
        return -1, float("nan")

    buf = <ValCode*> malloc(n * sizeof(ValCode))
    cnt_left = <long long*> malloc(n_classes * sizeof(long long))
    cnt_right = <long long*> malloc(n_classes * sizeof(long long))
    if buf == NULL or cnt_left == NULL or cnt_right == NULL:
        free(buf); free(cnt_left); free(cnt_right)
        raise MemoryError()

    parent_sumsq = 0
    for k in range(n_classes):
        parent_sumsq += counts[k] * counts[k]

    best_score = parent_score
    best_thr = float("nan")

    with nogil:
        for j in range(m):
            f = feats[j]
            for i in range(n):
                buf[i].v = X[idx[i], f]
                buf[i].c = y[idx[i]]
            qsort(buf, n, sizeof(ValCode), _cmp_valcode)

            for k in range(n_classes):
                cnt_left[k] = 0
                cnt_right[k] = counts[k]
            sumsq_left = 0
            sumsq_right = parent_sumsq

            for i in range(n - 1):
                k = buf[i].c
                sumsq_left += 2 * cnt_left[k] + 1
                cnt_left[k] += 1
                sumsq_right += 1 - 2 * cnt_right[k]
                cnt_right[k] -= 1
                n_left = i + 1
                n_right = n - n_left
                if n_left < min_leaf or n_right < min_leaf:
                    continue
                if not buf[i].v < buf[i + 1].v:
                    continue
                score = (<double> sumsq_left) / (<double> n_left) \
                    + (<double> sumsq_right) / (<double> n_right)
                if score > best_score:
                    best_score = score
                    best_j = j
                    best_thr = (buf[i].v + buf[i + 1].v) / 2.0

    free(buf)
    free(cnt_left)
    free(cnt_right)
    return (int(best_j), best_thr)
