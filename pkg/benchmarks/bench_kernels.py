"""Benchmark the numba pair/divergence kernels against the NumPy lane.

Run from the repository root after installing the package:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --pairs 1000000 --repeats 7

Both kernel modules are imported directly, so the comparison ignores the
PERIFUSE_NUMBA environment flag. The default workload mirrors a full
86-subject, 5-distance protocol: 1720 template rows of dim 512 scored over
~447k pairs, plus JSD over 113x113 probability maps.
"""

import argparse
import time

import numpy as np

from perifuse import _kernels_numpy

try:
    from perifuse import _kernels_numba
except ImportError:
    _kernels_numba = None


def best_of(repeats, fn, *args):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times), result


def bench_pair_kernels(args, rng):
    n_rows = 86 * 2 * 2 * 5
    matrix = rng.random((n_rows, args.dim))
    norms = np.linalg.norm(matrix, axis=1)
    probe = rng.integers(0, n_rows, size=args.pairs).astype(np.int64)
    gallery = rng.integers(0, n_rows, size=args.pairs).astype(np.int64)

    for name, extra in (("cosine_pairs", (norms,)), ("chi2_pairs", ())):
        numpy_fn = getattr(_kernels_numpy, name)
        t_numpy, out_numpy = best_of(
            args.repeats, numpy_fn, matrix, *extra, probe, gallery)
        line = (f"{name:13s} {args.pairs} pairs, dim {args.dim}: "
                f"numpy {t_numpy * 1000:8.1f} ms")
        if _kernels_numba is not None:
            numba_fn = getattr(_kernels_numba, name)
            numba_fn(matrix, *extra, probe[:8], gallery[:8])  # JIT warmup
            t_numba, out_numba = best_of(
                args.repeats, numba_fn, matrix, *extra, probe, gallery)
            drift = float(np.max(np.abs(out_numba - out_numpy)))
            line += (f"  numba {t_numba * 1000:8.1f} ms"
                     f"  speedup {t_numpy / t_numba:5.2f}x"
                     f"  max|diff| {drift:.2e}")
        print(line)


def bench_divergence(args, rng):
    cells = 113 * 113
    maps = rng.random((2 * args.maps, cells))
    maps[rng.random(maps.shape) < 0.3] = 0.0
    maps /= maps.sum(axis=1, keepdims=True)

    def sweep(module):
        total = 0.0
        for i in range(args.maps):
            total += module.jsd_flat(maps[2 * i], maps[2 * i + 1])
        return total

    t_numpy, total_numpy = best_of(args.repeats, sweep, _kernels_numpy)
    line = (f"jsd_flat      {args.maps} map pairs, {cells} cells: "
            f"numpy {t_numpy * 1000:8.1f} ms")
    if _kernels_numba is not None:
        _kernels_numba.jsd_flat(maps[0], maps[1])  # JIT warmup
        t_numba, total_numba = best_of(args.repeats, sweep, _kernels_numba)
        line += (f"  numba {t_numba * 1000:8.1f} ms"
                 f"  speedup {t_numpy / t_numba:5.2f}x"
                 f"  max|diff| {abs(total_numba - total_numpy) / args.maps:.2e}")
    print(line)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--pairs", type=int, default=447_200)
    parser.add_argument("--dim", type=int, default=512)
    parser.add_argument("--maps", type=int, default=2000)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    if _kernels_numba is None:
        print("numba lane unavailable (import failed); timing NumPy only")
    rng = np.random.default_rng(args.seed)
    bench_pair_kernels(args, rng)
    bench_divergence(args, rng)


if __name__ == "__main__":
    main()
