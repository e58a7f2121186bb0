"""Time the numba and pure-numpy Bloom kernels on the same inputs.

    python3 benchmarks/bench_kernels.py [--rows 100000] [--repeat 5]

The numba kernels are compiled once before timing. With OSR_DISABLE_NUMBA=1
(or without numba installed) only the numpy column is reported.
"""
import argparse
import time

import numpy as np

from osr import _accel, hashing


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=100_000)
    ap.add_argument("--members", type=int, default=20)
    ap.add_argument("--m", type=int, default=128)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    members = rng.integers(1, 1 << 16, size=(args.rows, args.members), dtype=np.int64)
    queries = rng.integers(1, 1 << 16, size=args.rows, dtype=np.int64)
    m = args.m

    cases = {
        "hash_indices": (
            lambda: hashing.np_hash_indices(members, m),
            lambda: hashing.nb_hash_indices(members, m),
        ),
        "count_fp_hits": (
            lambda: hashing.np_count_fp_hits(members, queries, m),
            lambda: hashing.nb_count_fp_hits(members, queries, m),
        ),
    }
    print(f"backend={_accel.backend()} rows={args.rows} n={args.members} m={m}")
    print(f"{'kernel':<16}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}")
    for name, (np_fn, nb_fn) in cases.items():
        t_np = best_of(np_fn, args.repeat)
        if hashing.HAVE_NUMBA:
            nb_fn()  # compile
            t_nb = best_of(nb_fn, args.repeat)
            print(f"{name:<16}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>9.1f}x")
        else:
            print(f"{name:<16}{t_np:>12.4f}{'-':>12}{'-':>10}")


if __name__ == "__main__":
    main()
