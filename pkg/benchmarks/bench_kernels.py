"""Time the numba and numpy stencil kernels on a few grid sizes.

Usage: python benchmarks/bench_kernels.py [--sizes 32,128,512] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from magnetoelastic import kernels


def cases(n, rng):
    u = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    v = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    h = 1.0 / (n + 1)
    return {
        "grad_inner": lambda k: k.grad_inner(u, v, h, h),
        "laplacian": lambda k: k.laplacian(u, h, h),
        "dx_centered": lambda k: k.dx_centered(u, h),
        "curl": lambda k: k.curl(u, v, h, h),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="32,128,512")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if kernels.numba_impl is None:
        raise SystemExit("numba is not installed")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<12} {'n':>5} {'numpy [ms]':>11} {'numba [ms]':>11} {'speedup':>8}")
    for n in (int(s) for s in args.sizes.split(",")):
        for name, fn in cases(n, rng).items():
            # agreement first; also triggers compilation
            np.testing.assert_allclose(fn(kernels.numba_impl), fn(kernels.numpy_impl), rtol=1e-12, atol=1e-9)
            number = max(1, 200_000 // (n * n))
            t_np = min(timeit.repeat(lambda: fn(kernels.numpy_impl), number=number, repeat=args.repeat)) / number
            t_nb = min(timeit.repeat(lambda: fn(kernels.numba_impl), number=number, repeat=args.repeat)) / number
            print(f"{name:<12} {n:>5} {1e3 * t_np:>11.4f} {1e3 * t_nb:>11.4f} {t_np / t_nb:>8.2f}")


if __name__ == "__main__":
    main()
