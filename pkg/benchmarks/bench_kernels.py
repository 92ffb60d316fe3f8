"""Time the compiled kernels against the numpy fallback.

Usage::

    python3 benchmarks/bench_kernels.py [--max-n 10] [--repeat 3]
"""
import argparse
import time

import numpy as np

from cpskit import _fallback

try:
    from cpskit import _kernels
except ImportError:
    _kernels = None


def best_time(fn, arg, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(arg)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-n", type=int, default=10)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled extension not built; showing fallback timings only")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<18}{'N':>4}{'fallback s':>14}{'compiled s':>14}{'speedup':>10}")
    for name in ("qubit_config_sum", "ryser_permanent"):
        for n in range(2, args.max_n + 1, 2):
            u = np.ascontiguousarray(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
            slow = best_time(getattr(_fallback, name), u, args.repeat)
            if _kernels is None:
                print(f"{name:<18}{n:>4}{slow:>14.3e}{'-':>14}{'-':>10}")
                continue
            fast = best_time(getattr(_kernels, name), u, args.repeat)
            print(f"{name:<18}{n:>4}{slow:>14.3e}{fast:>14.3e}{slow / fast:>10.1f}")


if __name__ == "__main__":
    main()
