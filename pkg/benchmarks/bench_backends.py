"""Compare the numba and numpy kernel backends on the solver's hot loops.

Usage::

    python3 benchmarks/bench_backends.py [--sizes 25,50,100] [--repeat 5]

Each row reports the best-of-``repeat`` wall time per call for both backends
and their ratio.  The numba kernels are called once before timing so JIT
compilation is excluded.
"""

import argparse
import timeit

import numpy as np

from ranksparse.ensembles import EnsembleSpec, random_lowrank, random_sparse
from ranksparse.kernels import numba_impl, numpy_impl
from ranksparse.matcore import svd


def _cases(n, rng):
    spec = EnsembleSpec(n, max(1, n * n // 20), max(1, n // 12), 0)
    C = random_sparse(spec) + random_lowrank(spec)
    M = rng.standard_normal((n, n))
    res = svd(random_lowrank(spec))
    U, V = np.ascontiguousarray(res.u), np.ascontiguousarray(res.v)
    Z = np.zeros_like(C)
    gamma = 1.0 / np.sqrt(n)
    rho = 0.25 * C.size / np.abs(C).sum()
    return {
        "soft_threshold": lambda m: m.soft_threshold(M, 0.3),
        "project_t": lambda m: m.project_t(M, U, V),
        "admm_loop[50 it]": lambda m: m.admm_loop(C, gamma, rho, 0.0, 0.0, 50, True, Z, Z, Z),
    }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", default="25,50,100")
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"{'kernel':18s} {'n':>5s} {'numpy (ms)':>11s} {'numba (ms)':>11s} {'speedup':>8s}")
    for n in (int(s) for s in args.sizes.split(",")):
        for name, call in _cases(n, rng).items():
            call(numba_impl)  # compile
            times = {}
            for label, mod in (("numpy", numpy_impl), ("numba", numba_impl)):
                number = 1 if name.startswith("admm") else 200
                t = min(timeit.repeat(lambda: call(mod), number=number, repeat=args.repeat))
                times[label] = 1e3 * t / number
            print(f"{name:18s} {n:5d} {times['numpy']:11.4f} {times['numba']:11.4f} "
                  f"{times['numpy'] / times['numba']:7.2f}x")


if __name__ == "__main__":
    main()
