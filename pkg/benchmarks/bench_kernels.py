"""Compare the numba kernels with their numpy fallbacks.

Run from the repository root::

    python3 benchmarks/bench_kernels.py --repeats 5

Each case is timed with both backends after one warm-up call (which also
triggers numba compilation), and the outputs are checked for equality.
"""

import argparse
import os
import time

import numpy as np

from locfda import _kernels


def best_time(fn, repeats):
    fn()  # warm-up / compile
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def with_backend(disabled, fn):
    old = os.environ.get("LOCFDA_DISABLE_NUMBA")
    os.environ["LOCFDA_DISABLE_NUMBA"] = "1" if disabled else "0"
    try:
        return fn()
    finally:
        if old is None:
            del os.environ["LOCFDA_DISABLE_NUMBA"]
        else:
            os.environ["LOCFDA_DISABLE_NUMBA"] = old


def cases(rng):
    for n, m, kmax in [(200, 100, 5), (500, 200, 20), (2000, 50, 3)]:
        pool = rng.standard_normal((n, m))
        exclude = np.arange(n)
        yield f"knn_widths n={n} m={m} kmax={kmax}", lambda p=pool, k=kmax, e=exclude: _kernels.knn_widths(p, p, k, e)
    for n, k in [(2000, 1), (2000, 3), (100000, 3)]:
        xs = np.sort(rng.uniform(size=n))
        pos = np.arange(n)
        yield f"kth_nn_sorted n={n} k={k}", lambda x=xs, k=k, s=pos: _kernels.kth_nn_sorted(x, x, k, s)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(args.seed)
    print(f"{'case':40s} {'numba [s]':>11s} {'numpy [s]':>11s} {'speedup':>8s}  same")
    for name, fn in cases(rng):
        t_nb = with_backend(False, lambda: best_time(fn, args.repeats))
        t_np = with_backend(True, lambda: best_time(fn, args.repeats))
        a = with_backend(False, fn)
        b = with_backend(True, fn)
        same = all(np.array_equal(x, y) for x, y in zip(a, b)) if isinstance(a, tuple) else np.array_equal(a, b)
        print(f"{name:40s} {t_nb:11.5f} {t_np:11.5f} {t_np / t_nb:8.1f}x  {same}")


if __name__ == "__main__":
    main()
