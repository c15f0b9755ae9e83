"""Time the numba loop kernels against their numpy counterparts.

    python benchmarks/bench_kernels.py [--repeat 5] [--size 100000]

Both flavours are imported regardless of HBMGREEN_BACKEND, so one run
compares them side by side.  The first numba call (compilation or cache
load) is excluded from the timings.  Agreement is reported as the largest
relative difference between the two outputs.
"""
import argparse
import math
import time

import numpy as np

from hbmgreen import _besselkern as bk
from hbmgreen import mcsim


def best_of(f, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        f()
        times.append(time.perf_counter() - t0)
    return min(times)


def bessel_cases(size, rng):
    nu = rng.uniform(0.0, 20.0, size)
    z = np.exp(rng.uniform(math.log(1e-3), math.log(1e3), size))
    return {
        "ive": (lambda: bk.ive_loop(nu, z, np.empty_like(z)), lambda: bk.ive_numpy(nu, z)),
        "kve": (lambda: bk.kve_loop(nu, z, np.empty_like(z)), lambda: bk.kve_numpy(nu, z)),
    }


def path_cases(n_paths):
    seed = np.uint64(7)
    dt, nsteps = 1e-3, 1000

    def bessel(loop):
        out = tuple(np.empty(n_paths) for _ in range(3))
        loop(1.0, 2.0, 1.0, dt, nsteps, seed, 0, True, *out)
        return out[0]

    def hbm(loop):
        lo = np.array([[0.5, -0.25, 2.25]])
        hi = np.array([[1.0, 0.25, 2.75]])
        out = (np.empty(n_paths), np.empty((n_paths, 2)), np.zeros((n_paths, 1)), np.empty(n_paths))
        loop(math.sqrt(2.0), math.log(2.0), 0.0, 1.0, dt, nsteps, np.zeros(2), math.sqrt(2.0) - 1.0,
             lo, hi, seed, 0, True, *out)
        return out[2][:, 0]

    return {
        "bessel paths": (lambda: bessel(mcsim._bessel_loop), lambda: bessel(mcsim._bessel_numpy)),
        "hbm paths": (lambda: hbm(mcsim._hbm_loop), lambda: hbm(mcsim._hbm_numpy)),
    }


def rel_diff(a, b):
    a, b = np.nan_to_num(np.asarray(a)), np.nan_to_num(np.asarray(b))
    scale = np.maximum(np.abs(a), np.abs(b))
    with np.errstate(invalid="ignore", divide="ignore"):
        d = np.where(scale > 0, np.abs(a - b) / scale, 0.0)
    return float(d.max())


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--size", type=int, default=100_000, help="Bessel evaluations per call")
    ap.add_argument("--paths", type=int, default=2_000, help="paths per simulation call")
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    cases = {**bessel_cases(args.size, rng), **path_cases(args.paths)}
    print(f"{'kernel':<14}{'numba [s]':>12}{'numpy [s]':>12}{'speed-up':>10}{'max rel diff':>14}")
    for name, (fast, slow) in cases.items():
        a = fast()  # compile or load from cache
        b = slow()
        t_fast = best_of(fast, args.repeat)
        t_slow = best_of(slow, max(1, args.repeat // 2))
        print(f"{name:<14}{t_fast:>12.4f}{t_slow:>12.4f}{t_slow / t_fast:>10.1f}{rel_diff(a, b):>14.2e}")


if __name__ == "__main__":
    main()
