"""Time the compiled Givens kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--sizes 200,500,1000]

Also times a profile built by refitting every split from scratch, the
approach the kernels replace.
"""

import argparse
import time

import numpy as np

from regime_split import kernels
from regime_split.regress import ols


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def naive_profile(X, y):
    n, p = X.shape
    return [ols(y[:k], X[:k]).sse + ols(y[k:], X[k:]).sse for k in range(p + 2, n - p - 1)]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--sizes", default="200,500,1000")
    ap.add_argument("--p", type=int, default=14, help="regressors (14 = intercept + 3x4 lags + shock)")
    args = ap.parse_args(argv)
    if kernels.BACKEND != "compiled":
        print("compiled extension not available; timing the fallback only")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<12}{'n':>6}{'compiled s':>13}{'python s':>12}{'speedup':>9}{'refit s':>10}")
    for n in map(int, args.sizes.split(",")):
        X = np.column_stack([np.ones(n), rng.standard_normal((n, args.p - 1))])
        y = rng.standard_normal(n)
        cases = {
            "prefix_sse": lambda b: kernels.prefix_sse(X, y, backend=b),
            "pair_sse": lambda b: kernels.pair_sse(X[: n // 2], y[: n // 2], X[n // 2:],
                                                   y[n // 2:], backend=b),
        }
        for name, fn in cases.items():
            py = best_of(lambda: fn("python"), args.repeat)
            if kernels.BACKEND == "compiled":
                c = best_of(lambda: fn("compiled"), args.repeat)
                comp, speed = f"{c:13.4f}", f"{py / c:9.1f}"
            else:
                comp, speed = f"{'-':>13}", f"{'-':>9}"
            refit = ""
            if name == "prefix_sse":
                refit = f"{best_of(lambda: naive_profile(X, y), 1):10.3f}"
            print(f"{name:<12}{n:>6}{comp}{py:12.4f}{speed}{refit}")


if __name__ == "__main__":
    main()
