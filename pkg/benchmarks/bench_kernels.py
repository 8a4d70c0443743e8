"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Also times a full forest fit with each backend swapped in.
"""

import argparse
import timeit

import numpy as np

from neuroband import _kernels
from neuroband._kernels import _fallback
from neuroband.classifiers import forest
from neuroband.classifiers.forest import ForestParams, fit_forest
from neuroband.wavelet import WaveletSpec

try:
    from neuroband._kernels import _ckernels
except ImportError:
    _ckernels = None


def _best(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def bench_dwt(impl, spec, x, repeat):
    lo, hi = spec.decomposition_lowpass, spec.decomposition_highpass
    return _best(lambda: impl.dwt_step(x, lo, hi), repeat, 200)


def bench_split(impl, X, y, repeat):
    idx = np.arange(X.shape[0], dtype=np.int64)
    cand = np.arange(X.shape[1], dtype=np.int64)
    return _best(lambda: impl.best_split(X, y, idx, cand, 3, 1), repeat, 20)


def bench_forest(impl, X, y, repeat):
    saved = forest._kernels
    forest._kernels = impl
    try:
        params = ForestParams(n_estimators=20)
        return _best(lambda: fit_forest(X, y, params, seed=0, n_classes=3), repeat, 1)
    finally:
        forest._kernels = saved


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    g = np.random.default_rng(0)
    spec = WaveletSpec()
    x = g.standard_normal(1024)
    X = g.standard_normal((600, 13))
    y = g.integers(0, 3, 600)

    impls = [("python", _fallback)]
    if _ckernels is not None:
        impls.insert(0, ("cython", _ckernels))
    else:
        print("compiled kernels not built; timing the fallback only")
    print(f"active backend: {_kernels.BACKEND}")
    print(f"{'kernel':<34}" + "".join(f"{name:>12}" for name, _ in impls) + ("     speedup" if len(impls) > 1 else ""))

    cases = [
        ("dwt_step, 1024 samples", lambda m: bench_dwt(m, spec, x, args.repeat)),
        ("best_split, 600 x 13, K=3", lambda m: bench_split(m, X, y, args.repeat)),
        ("fit_forest, 20 trees, 600 x 13", lambda m: bench_forest(m, X, y, args.repeat)),
    ]
    for label, fn in cases:
        times = [fn(m) for _, m in impls]
        row = f"{label:<34}" + "".join(f"{t * 1e3:>10.3f}ms" for t in times)
        if len(times) > 1:
            row += f"{times[1] / times[0]:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
