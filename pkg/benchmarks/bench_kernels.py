"""Compare the compiled quaternion/su(2) kernels against the numpy fallback.

Run:  python benchmarks/bench_kernels.py [--sizes 4096 65536 1048576]

The workloads mirror the hot paths: chained group multiplications as in the
holonomy loops, exponential updates as in the Lie integrator, and the
conjugation/bracket mix of the gauge flow.
"""

import argparse
import time

import numpy as np

from gwlab import _kernels_np

try:
    from gwlab import _kernels_c
except ImportError:
    _kernels_c = None


def bench(fn, *args, repeat=5):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def workloads(rng, K):
    q = rng.standard_normal((4, K))
    q /= np.sqrt((q**2).sum(axis=0))
    p = rng.standard_normal((4, K))
    p /= np.sqrt((p**2).sum(axis=0))
    c = rng.standard_normal((3, K))
    d = rng.standard_normal((3, K))
    return [
        ("quat_mul", lambda m: m.quat_mul(q, p)),
        ("plaquette(4 muls+conj)", lambda m: m.quat_mul(
            m.quat_mul(q, p), m.quat_conj(m.quat_mul(p, q)))),
        ("su2_exp", lambda m: m.su2_exp(c)),
        ("integrator step (exp+mul+norm)", lambda m: m.quat_normalize(
            m.quat_mul(q, m.su2_exp(0.01 * c)))),
        ("ad_action", lambda m: m.ad_action(q, c)),
        ("su2_bracket", lambda m: m.su2_bracket(c, d)),
    ]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[4096, 65536, 1048576])
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    if _kernels_c is None:
        print("compiled kernels unavailable; benchmarking numpy only")
    for K in args.sizes:
        print(f"\n== {K} points ==")
        print(f"{'kernel':35s} {'numpy':>10s} {'cython':>10s} {'speedup':>8s}")
        for name, work in workloads(rng, K):
            t_np = bench(work, _kernels_np)
            if _kernels_c is not None:
                t_cy = bench(work, _kernels_c)
                print(f"{name:35s} {t_np * 1e3:9.2f}ms {t_cy * 1e3:9.2f}ms "
                      f"{t_np / t_cy:7.2f}x")
            else:
                print(f"{name:35s} {t_np * 1e3:9.2f}ms {'-':>10s} {'-':>8s}")


if __name__ == "__main__":
    main()
