"""Time the numba and numpy backends of the batch kernels against each other.

    python benchmarks/bench_kernels.py [--sizes 1000 100000] [--repeat 5]

Prints one line per (kernel, size) with the best-of-N wall time of each
backend, the speedup and the largest absolute difference between them.
"""

import argparse
import time

import numpy as np

from umlm import _kernels
from umlm.pso import Bounds, ObjectiveContext


def best_time(fn, repeat):
    fn()  # warm-up, includes JIT compilation on first call
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[1_000, 10_000, 100_000, 1_000_000])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    if not _kernels.HAVE_NUMBA:
        print("numba is not installed; only the numpy backend is available")
        return 1

    rng = np.random.default_rng(args.seed)
    params = ObjectiveContext().kernel_params()
    b = Bounds()
    print(f"{'kernel':<16}{'n':>10}{'numpy s':>12}{'numba s':>12}{'speedup':>10}{'max |diff|':>13}")
    for n in args.sizes:
        X = b.lb + rng.random((n, 7)) * (b.ub - b.lb)
        tau = rng.uniform(-1000, 1000, (n, 3))
        d = rng.uniform(2, 25, (n, 3))
        cases = {
            "phi_batch": lambda use: _kernels.phi_batch(X, params, use),
            "contact_forces": lambda use: _kernels.contact_forces_batch(tau, 38.3, 30.0, 0.785, 0.785, d, use),
        }
        for name, fn in cases.items():
            t_np = best_time(lambda: fn(False), args.repeat)
            t_nb = best_time(lambda: fn(True), args.repeat)
            diff = float(np.max(np.abs(fn(False) - fn(True))))
            print(f"{name:<16}{n:>10}{t_np:>12.5f}{t_nb:>12.5f}{t_np / t_nb:>10.2f}{diff:>13.3e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
