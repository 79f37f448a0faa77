"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--size 200] [--repeat 5]

Both backends run the same inputs; results are checked for equality
before timings are printed.
"""
import argparse
import time

import numpy as np

from isobenefit import _kernels_py

try:
    from isobenefit import _kernels
except ImportError:
    _kernels = None


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def dijkstra_case(impl, size, seeds):
    def go():
        dist = np.full(size * size, np.inf)
        dist[seeds] = 0.0
        impl.relax_field(dist, size, size, 100.0, seeds)
        return dist
    return go


def label_case(impl, size, mask):
    return lambda: impl.label_regions(mask, size, size)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels is None:
        raise SystemExit("compiled kernels not built; run pip install -e . --no-build-isolation")

    rng = np.random.default_rng(0)
    n = args.size
    seeds = np.unique(rng.integers(0, n * n, size=max(1, n // 10))).astype(np.int64)
    mask = (rng.random(n * n) < 0.55).astype(np.uint8)

    cases = [
        ("dijkstra", lambda m: dijkstra_case(m, n, seeds)),
        ("label_regions", lambda m: label_case(m, n, mask)),
    ]
    print(f"grid {n}x{n}, best of {args.repeat}")
    print(f"{'kernel':<16}{'cython ms':>12}{'python ms':>12}{'speedup':>10}")
    for name, make in cases:
        tc, outc = best_of(make(_kernels), args.repeat)
        tp, outp = best_of(make(_kernels_py), args.repeat)
        if name == "dijkstra":
            assert np.array_equal(outc, outp)
        else:
            assert outc[1] == outp[1] and np.array_equal(outc[0], outp[0])
        print(f"{name:<16}{tc * 1e3:>12.2f}{tp * 1e3:>12.2f}{tp / tc:>9.1f}x")


if __name__ == "__main__":
    main()
