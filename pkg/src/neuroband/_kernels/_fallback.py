"""Pure numpy versions of the compiled kernels.

Results agree with ``_ckernels`` exactly for :func:`best_split` (integer
bookkeeping, identical floating-point expressions) and to rounding for
:func:`dwt_step`.
"""

import numpy as np


def dwt_step(x, lo, hi):
    """One periodized analysis step on an even-length signal.

    ``a[k] = sum_m lo[m] * x[(2k + taps/2 - m) mod N]`` (likewise ``d`` with
    ``hi``), the same alignment as PyWavelets' ``periodization`` mode.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    half = n // 2
    taps = len(lo)
    idx = (2 * np.arange(half)[:, None] + taps // 2 - np.arange(taps)[None, :]) % n
    gathered = x[idx]
    return gathered @ np.asarray(lo, dtype=np.float64), gathered @ np.asarray(hi, dtype=np.float64)


def idwt_step(a, d, lo, hi):
    """Adjoint (= inverse, for orthonormal filters) of :func:`dwt_step`."""
    a = np.asarray(a, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    half = a.shape[0]
    n = 2 * half
    taps = len(lo)
    idx = (2 * np.arange(half)[:, None] + taps // 2 - np.arange(taps)[None, :]) % n
    out = np.zeros(n)
    np.add.at(out, idx, a[:, None] * np.asarray(lo)[None, :] + d[:, None] * np.asarray(hi)[None, :])
    return out


def best_split(X, y, idx, features, n_classes, min_leaf):
    """Best Gini split of the samples ``idx`` over candidate ``features``.

    Maximises ``sum(c_left**2)/n_left + sum(c_right**2)/n_right``, which is
    equivalent to minimising the weighted child Gini impurity. Candidate
    thresholds are midpoints between consecutive distinct values; samples with
    ``x <= threshold`` go left. Ties keep the earliest feature (in the given
    order) and the lowest threshold.

    Returns ``(feature, threshold, score)``; ``feature == -1`` when no split
    satisfies ``min_leaf``.
    """
    idx = np.asarray(idx, dtype=np.int64)
    m = idx.shape[0]
    best = (-1, 0.0, -np.inf)
    if m < 2 * min_leaf or m < 2:
        return best
    labels = np.asarray(y, dtype=np.int64)[idx]
    onehot = np.zeros((m, n_classes), dtype=np.int64)
    total = np.bincount(labels, minlength=n_classes).astype(np.int64)
    n_left = np.arange(1, m, dtype=np.int64)
    n_right = m - n_left
    size_ok = (n_left >= min_leaf) & (n_right >= min_leaf)

    for f in features:
        vals = X[idx, f]
        order = np.argsort(vals, kind="stable")
        vs = vals[order]
        onehot[:] = 0
        onehot[np.arange(m), labels[order]] = 1
        cl = np.cumsum(onehot, axis=0)[:-1]
        cr = total[None, :] - cl
        sl = (cl * cl).sum(axis=1)
        sr = (cr * cr).sum(axis=1)
        score = sl.astype(np.float64) / n_left.astype(np.float64) + sr.astype(np.float64) / n_right.astype(np.float64)
        valid = size_ok & (vs[:-1] < vs[1:])
        if not valid.any():
            continue
        score = np.where(valid, score, -np.inf)
        i = int(np.argmax(score))
        if score[i] > best[2]:
            lo_v, hi_v = vs[i], vs[i + 1]
            thr = lo_v + (hi_v - lo_v) / 2.0
            if not lo_v <= thr < hi_v:
                thr = lo_v
            best = (int(f), float(thr), float(score[i]))
    return best
