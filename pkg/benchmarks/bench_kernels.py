"""Time the compiled kernels against the numpy fallback.

Run with ``python3 benchmarks/bench_kernels.py``.  Both backends are
checked for agreement before timing.
"""
import argparse
import time

import numpy as np

from hybridalloc import kernels


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(rng):
    n = 32**3
    w = rng.uniform(0, 1e9, n)
    p = rng.uniform(0, 2.5, n)
    g16 = rng.exponential(1e9, 16)
    z = (rng.standard_normal((2000, 16, 64)) + 1j * rng.standard_normal((2000, 16, 64))) / np.sqrt(2)
    weights = rng.uniform(0, 1e-2, 64)
    z4 = (rng.standard_normal((20000, 2, 4)) + 1j * rng.standard_normal((20000, 2, 4))) / np.sqrt(2)
    w4 = rng.uniform(0, 1, 4)
    return [
        ("rate_grid 32^3 x 16 modes", "rate_grid", (w, p, g16)),
        ("rate_grid 32^3 x 1 mode", "rate_grid", (w, p, g16[:1])),
        ("downdate_forms 2000 x 16x64", "downdate_forms", (z, weights)),
        ("downdate_forms 20000 x 2x4", "downdate_forms", (z4, w4)),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    found = kernels.backends()
    if "cython" not in found:
        print("compiled extension not built; only the numpy fallback is available")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<32}" + "".join(f"{name:>12}" for name in found) + f"{'speedup':>10}")
    for label, fname, fargs in cases(rng):
        outs, times = {}, {}
        for name, mod in found.items():
            fn = getattr(mod, fname)
            a = tuple(np.ascontiguousarray(x) for x in fargs)
            outs[name] = np.asarray(fn(*a))
            times[name] = best_of(lambda: fn(*a), args.repeat)
        ref = outs["python"]
        for name, val in outs.items():
            err = np.max(np.abs(val - ref) / np.maximum(np.abs(ref), 1e-300))
            assert err < 1e-9, f"{name} disagrees on {label}: {err:g}"
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        row = "".join(f"{times[n] * 1e3:>10.2f}ms" for n in found)
        print(f"{label:<32}{row}{speed:>9.2f}x")


if __name__ == "__main__":
    main()
