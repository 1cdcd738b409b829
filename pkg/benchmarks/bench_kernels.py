"""Compare the compiled scan kernels against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeats N]

Times a single-query scan over candidate matrices of several shapes,
reporting the median of N runs for each backend. The compiled kernel
fuses dot product and norm into one pass per row; the fallback leans on
BLAS, so expect the gap to narrow (or invert) at large dims where GEMV
dominates.
"""

import argparse
import statistics
import time

import numpy as np

from sonomap import _pykernels

try:
    from sonomap import _ckernels
except ImportError:
    _ckernels = None

SHAPES = [
    (1_000, 64),
    (10_000, 64),
    (10_000, 256),
    (10_000, 1024),
    (50_000, 1024),
]


def median_time(fn, query, candidates, repeats):
    times = []
    fn(query, candidates)  # warm-up
    for _ in range(repeats):
        start = time.perf_counter()
        fn(query, candidates)
        times.append(time.perf_counter() - start)
    return statistics.median(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=7)
    args = parser.parse_args()

    if _ckernels is None:
        print("compiled kernels unavailable; benchmarking the fallback only")

    rng = np.random.default_rng(0)
    header = f"{'kernel':<16} {'n x dim':>14} {'numpy (ms)':>12} {'cython (ms)':>12} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for n, dim in SHAPES:
        query = rng.standard_normal(dim)
        candidates = rng.standard_normal((n, dim)).astype(np.float32)
        for name in ("dis_cos_many", "euclidean_many"):
            py_t = median_time(getattr(_pykernels, name), query, candidates, args.repeats)
            if _ckernels is not None:
                c_t = median_time(getattr(_ckernels, name), query, candidates, args.repeats)
                np.testing.assert_allclose(
                    getattr(_ckernels, name)(query, candidates),
                    getattr(_pykernels, name)(query, candidates),
                    atol=1e-10,
                )
                print(
                    f"{name:<16} {f'{n}x{dim}':>14} {py_t * 1e3:>12.3f} "
                    f"{c_t * 1e3:>12.3f} {py_t / c_t:>7.2f}x"
                )
            else:
                print(f"{name:<16} {f'{n}x{dim}':>14} {py_t * 1e3:>12.3f} {'-':>12} {'-':>8}")


if __name__ == "__main__":
    main()
