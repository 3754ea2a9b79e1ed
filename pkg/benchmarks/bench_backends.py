"""Benchmark the compiled kernel core against the pure-Python fallback.

Usage: python benchmarks/bench_backends.py [n_terms]

Times the Student-t CDF, the exponent-measure partials, and the batch
pairwise log-likelihood kernel on both backends and prints the speedups.
The compiled module must be built (`python setup.py build_ext --inplace`
or `pip install -e .`) for the comparison to run.
"""

import sys
import time

import numpy as np

from nsmaxstab import _purecore

try:
    from nsmaxstab import _fastcore
except ImportError:
    _fastcore = None


def time_call(fn, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def scalar_bench(mod, xs, dfs):
    def run():
        for x, df in zip(xs, dfs):
            mod.student_t_cdf(x, df)
    return run


def parts_bench(mod, z1, z2, rho):
    def run():
        for a, b, r in zip(z1, z2, rho):
            mod.exponent_parts(a, b, r, 5.0)
    return run


def batch_bench(mod, z1, z2, rho, out):
    def run():
        mod.loglik_terms(z1, z2, rho, 5.0, out)
    return run


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 20_000
    rng = np.random.default_rng(0)
    xs = rng.uniform(-6, 6, 2000)
    dfs = rng.uniform(0.5, 30, 2000)
    z1 = np.ascontiguousarray(rng.exponential(1.0, n) + 0.1)
    z2 = np.ascontiguousarray(rng.exponential(1.0, n) + 0.1)
    rho = np.ascontiguousarray(rng.uniform(-0.5, 0.98, n))
    out = np.empty(n)

    rows = []
    for label, maker, per in (
        ("student_t_cdf (scalar x2000)", scalar_bench, 2000),
        ("exponent_parts (scalar x2000)",
         lambda m, *a: parts_bench(m, z1[:2000], z2[:2000], rho[:2000]),
         2000),
        (f"loglik_terms (batch n={n})",
         lambda m, *a: batch_bench(m, z1, z2, rho, out), n),
    ):
        pure_t = time_call(maker(_purecore, xs, dfs))
        if _fastcore is not None:
            fast_t = time_call(maker(_fastcore, xs, dfs))
            rows.append((label, pure_t / per * 1e6, fast_t / per * 1e6,
                         pure_t / fast_t))
        else:
            rows.append((label, pure_t / per * 1e6, None, None))

    header = f"{'kernel':36s} {'pure us/op':>12s} {'fast us/op':>12s} " \
             f"{'speedup':>9s}"
    print(header)
    print("-" * len(header))
    for label, pure_us, fast_us, speedup in rows:
        if fast_us is None:
            print(f"{label:36s} {pure_us:12.3f} {'(not built)':>12s}")
        else:
            print(f"{label:36s} {pure_us:12.3f} {fast_us:12.3f} "
                  f"{speedup:8.1f}x")

    if _fastcore is not None:
        bad_fast = _fastcore.loglik_terms(z1, z2, rho, 5.0, out)
        fast_vals = out.copy()
        bad_pure = _purecore.loglik_terms(z1, z2, rho, 5.0, out)
        assert bad_fast == bad_pure
        print(f"\nbackend agreement: max abs diff = "
              f"{np.max(np.abs(fast_vals - out)):.3e} over {n} terms")


if __name__ == "__main__":
    main()
