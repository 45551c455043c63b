"""Compare the numba and pure-numpy kernel-matrix assembly paths.

    python3 benchmarks/bench_kernels.py [--sizes 500 1000 2000] [--repeats 3]

Times ``gram`` for each radial family at several sizes and one approximate
principal-angle computation (landmark fit + features + SVDs), which is
dominated by the N x D kernel block.  Reports the best of ``--repeats`` runs
and the max abs difference between the two backends.
"""
import argparse
import os
import time

import numpy as np

from kernel_spv import _backend
from kernel_spv.dynamics import duffing_system, sample_uniform
from kernel_spv.kernels import KernelSpec, gram
from kernel_spv.nystrom import approx_principal, fit_landmarks

KERNELS = {"wendland": KernelSpec("wendland", 2.0, 2), "gaussian": KernelSpec("gaussian", 1.0)}


def best_of(fn, repeats):
    best, out = np.inf, None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def with_backend(name, fn):
    old = os.environ.get(_backend.ENV_VAR)
    os.environ[_backend.ENV_VAR] = name
    try:
        return fn()
    finally:
        if old is None:
            del os.environ[_backend.ENV_VAR]
        else:
            os.environ[_backend.ENV_VAR] = old


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[500, 1000, 2000, 4000])
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--D", type=int, default=400)
    p.add_argument("--s", type=int, default=50)
    args = p.parse_args(argv)
    if not _backend.HAS_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    # compile outside the timed region
    with_backend("numba", lambda: gram(KERNELS["wendland"], np.zeros((2, 2))))

    print(f"{'case':<28}{'N':>7}{'numpy ms':>12}{'numba ms':>12}{'speedup':>9}{'max|diff|':>12}")
    for N in args.sizes:
        data = sample_uniform(duffing_system(), N, [[-2, 2], [-2, 2]], N)
        for name, spec in KERNELS.items():
            tn, Kn = with_backend("numpy", lambda: best_of(lambda: gram(spec, data.X), args.repeats))
            tj, Kj = with_backend("numba", lambda: best_of(lambda: gram(spec, data.X), args.repeats))
            diff = float(np.max(np.abs(Kn - Kj)))
            print(f"{'gram ' + name:<28}{N:>7}{1e3 * tn:>12.1f}{1e3 * tj:>12.1f}"
                  f"{tn / tj:>9.2f}{diff:>12.1e}")

        D = min(args.D, N)
        W = np.eye(N)[:, :args.s]

        def approx():
            model = fit_landmarks(data, D, 0, KERNELS["wendland"])
            return approx_principal(model, data, W, cosine_tol=np.inf).angles

        tn, an = with_backend("numpy", lambda: best_of(approx, args.repeats))
        tj, aj = with_backend("numba", lambda: best_of(approx, args.repeats))
        diff = float(np.max(np.abs(an - aj)))
        print(f"{f'approx angles D={D} s={args.s}':<28}{N:>7}{1e3 * tn:>12.1f}{1e3 * tj:>12.1f}"
              f"{tn / tj:>9.2f}{diff:>12.1e}")


if __name__ == "__main__":
    main()
