"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 5]

Each kernel is called once before timing so numba compilation is excluded.
Outputs of the two backends are compared before anything is timed.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from mamorl import _kernels
from mamorl._jit import USE_NUMBA
from mamorl.autodiff.optim import _adam_update_nb, _adam_update_np


def _front(rng, n, m):
    pts = rng.random((n * 4, m))
    return pts[_kernels.NUMPY_KERNELS.pareto_mask(pts)][:n]


def cases(rng):
    cloud = rng.random((2000, 3))
    f2, f3 = _front(rng, 200, 2), _front(rng, 60, 3)
    samples = rng.random((1_000_000, 3))
    size = 128 * 512
    adam_args = lambda: (  # noqa: E731
        np.ones(size), np.full(size, 0.1), np.zeros(size), np.zeros(size), 1e-3, 0.9, 0.999, 1e-8, 0.1, 0.001
    )
    return [
        ("pareto_mask n=2000 m=3", lambda k: k.pareto_mask(cloud)),
        ("hv2d n=200", lambda k: k.hv2d(f2, np.zeros(2))),
        ("hv3d n=60", lambda k: k.hv3d(f3, np.zeros(3))),
        ("mc_hits 1e6 x 60", lambda k: k.mc_hits(samples, f3)),
        ("adam 65536", lambda k: (_adam_update_nb if k is _kernels.NUMBA_KERNELS else _adam_update_np)(*adam_args())),
    ]


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not USE_NUMBA:
        print("numba disabled or missing: both columns time the numpy path")
    rng = np.random.default_rng(0)
    nb, npk = _kernels.NUMBA_KERNELS, _kernels.NUMPY_KERNELS
    print(f"{'kernel':26s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}")
    for name, call in cases(rng):
        a, b = call(npk), call(nb)
        if a is not None and not np.allclose(a, b, rtol=1e-12, atol=0):
            raise SystemExit(f"{name}: backends disagree ({a} vs {b})")
        t_np = best_of(lambda: call(npk), args.repeat) * 1e3
        t_nb = best_of(lambda: call(nb), args.repeat) * 1e3
        print(f"{name:26s} {t_np:10.3f} {t_nb:10.3f} {t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
