"""Compare the compiled and pure-numpy kernels on representative inputs.

    python benchmarks/bench_kernels.py [--repeat 5]

The numba column is only meaningful when numba is installed and not
disabled through ASYNCDMT_DISABLE_NUMBA.
"""
import argparse
import time

import numpy as np

from asyncdmt import _kernels as K
from asyncdmt._backend import numba_enabled
from asyncdmt.outage_sim import sample_exponents


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def cases():
    lr = 0.3 * 3.0
    yield "grid_min_2d nsdf finite m=2", "grid_min_2d", (0, 2.0, 1.0, 2, 2, lr, 0.005, 1.25)
    yield "grid_min_2d naf infinite M=3", "grid_min_2d", (4, 2.0, 1.0, 0, 3, lr, 0.005, 1.25)
    yield "grid_min_3d_af oaf M=2", "grid_min_3d_af", (6, 2.0, 1.0, 2, lr, 0.01, 1.25)
    yield "grid_min_full_df osdf m=2", "grid_min_full_df", (2, 2.0, 1.0, 2, lr, 0.01, 1.25)

    rng = np.random.default_rng(0)
    n, M = 1_000_000, 2
    L = np.log(1e5)
    a, lw = sample_exponents(rng, (1 + 2 * M, n), L, "importance")
    a0, ah, ag, w = a[0], np.ascontiguousarray(a[1:M + 1].T), np.ascontiguousarray(a[M + 1:].T), np.exp(lw)
    ok = ag < 0.5
    yield "count_outage nsdf finite 1e6", "count_outage", (0, 1.0, 1.0, 0.5, a0, ah, ah, ok, w)
    yield "count_outage oaf finite 1e6", "count_outage", (7, 3.0, 2.0, 1.5, a0, ah, ah + ag, ok, w)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not numba_enabled():
        print("numba disabled; timing the numpy kernels only")
    print(f"{'kernel':32s} {'numba [ms]':>11s} {'numpy [ms]':>11s} {'speedup':>8s}")
    for label, name, kw in cases():
        t_np, ref = best_of(lambda: K.select(name, "numpy")(*kw), args.repeat)
        if numba_enabled():
            fn = K.select(name, "numba")
            fn(*kw)  # compile outside the timing
            t_nb, got = best_of(lambda: fn(*kw), args.repeat)
            same = np.allclose(np.asarray(ref[0]), np.asarray(got[0]))
            print(f"{label:32s} {t_nb * 1e3:11.2f} {t_np * 1e3:11.2f} {t_np / t_nb:7.1f}x"
                  + ("" if same else "  MISMATCH"))
        else:
            print(f"{label:32s} {'-':>11s} {t_np * 1e3:11.2f}")


if __name__ == "__main__":
    main()
