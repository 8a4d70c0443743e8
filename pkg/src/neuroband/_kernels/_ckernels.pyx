# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: periodized DWT analysis step and Gini split search."""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free, qsort
from libc.string cimport memset

cnp.import_array()


ctypedef struct _Pair:
    double value
    long label


cdef int _cmp_pair(const void* a, const void* b) noexcept nogil:
    cdef double va = (<_Pair*>a).value
    cdef double vb = (<_Pair*>b).value
    if va < vb:
        return -1
    if va > vb:
        return 1
    return 0


def dwt_step(x, lo, hi):
    """One periodized analysis step on an even-length signal."""
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] lov = np.ascontiguousarray(lo, dtype=np.float64)
    cdef const double[::1] hiv = np.ascontiguousarray(hi, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0]
    cdef Py_ssize_t half = n // 2
    cdef Py_ssize_t taps = lov.shape[0]
    a = np.empty(half, dtype=np.float64)
    d = np.empty(half, dtype=np.float64)
    cdef double[::1] av = a
    cdef double[::1] dv = d
    cdef Py_ssize_t k, m, j
    cdef Py_ssize_t off = taps // 2
    cdef double sa, sd, v
    with nogil:
        for k in range(half):
            sa = 0.0
            sd = 0.0
            for m in range(taps):
                j = (2 * k + off - m) % n
                if j < 0:
                    j += n
                v = xv[j]
                sa = sa + lov[m] * v
                sd = sd + hiv[m] * v
            av[k] = sa
            dv[k] = sd
    return a, d


def best_split(X, y, idx, features, long n_classes, long min_leaf):
    """Best Gini split; same contract as ``_fallback.best_split``."""
    cdef const double[:, :] Xv = np.asarray(X, dtype=np.float64)
    cdef const long[::1] yv = np.ascontiguousarray(y, dtype=np.int64)
    cdef const long[::1] iv = np.ascontiguousarray(idx, dtype=np.int64)
    cdef const long[::1] fv = np.ascontiguousarray(features, dtype=np.int64)
    cdef Py_ssize_t m = iv.shape[0]
    cdef Py_ssize_t nf = fv.shape[0]
    cdef long best_f = -1
    cdef double best_thr = 0.0
    cdef double best_score = -np.inf
    if m < 2 * min_leaf or m < 2:
        return (-1, 0.0, -np.inf)

    cdef _Pair* pairs = <_Pair*>malloc(m * sizeof(_Pair))
    cdef long* total = <long*>malloc(n_classes * sizeof(long))
    cdef long* cl = <long*>malloc(n_classes * sizeof(long))
    cdef long* cr = <long*>malloc(n_classes * sizeof(long))
    if pairs == NULL or total == NULL or cl == NULL or cr == NULL:
        free(pairs); free(total); free(cl); free(cr)
        raise MemoryError()

    cdef Py_ssize_t i, fi, c
    cdef long f, lab, nl, nr, sl, sr, sr0
    cdef double score, lo_v, hi_v, thr
    try:
        with nogil:
            memset(total, 0, n_classes * sizeof(long))
            for i in range(m):
                total[yv[iv[i]]] += 1
            sr0 = 0
            for c in range(n_classes):
                sr0 += total[c] * total[c]
            for fi in range(nf):
                f = fv[fi]
                for i in range(m):
                    pairs[i].value = Xv[iv[i], f]
                    pairs[i].label = yv[iv[i]]
                qsort(pairs, m, sizeof(_Pair), _cmp_pair)
                memset(cl, 0, n_classes * sizeof(long))
                for c in range(n_classes):
                    cr[c] = total[c]
                sl = 0
                sr = sr0
                for i in range(m - 1):
                    lab = pairs[i].label
                    sl += 2 * cl[lab] + 1
                    cl[lab] += 1
                    sr -= 2 * cr[lab] - 1
                    cr[lab] -= 1
                    nl = i + 1
                    nr = m - nl
                    if nl < min_leaf or nr < min_leaf:
                        continue
                    lo_v = pairs[i].value
                    hi_v = pairs[i + 1].value
                    if not lo_v < hi_v:
                        continue
                    score = <double>sl / <double>nl + <double>sr / <double>nr
                    if score > best_score:
                        thr = lo_v + (hi_v - lo_v) / 2.0
                        if not (lo_v <= thr and thr < hi_v):
                            thr = lo_v
                        best_score = score
                        best_thr = thr
                        best_f = f
    finally:
        free(pairs); free(total); free(cl); free(cr)
    if best_f < 0:
        return (-1, 0.0, -np.inf)
    return (int(best_f), float(best_thr), float(best_score))
