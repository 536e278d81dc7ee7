"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_backends.py [--repeat 5]

The package picks one backend at import (set LOSSYQSIM_DISABLE_NUMBA=1 for
numpy); here both are called directly so one process can compare them.
"""

import argparse
import time

import numpy as np

from lossyqsim import kernels
from lossyqsim._accel import HAVE_NUMBA
from lossyqsim.circuits import build_benchmark, initial_state
from lossyqsim.core import expand_gate
from lossyqsim.numerics import parse_format
from lossyqsim.vq import collect_pool


def best_of(fn, repeat):
    fn()  # warm-up, includes compilation
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(1_000_000)
    p16 = parse_format("float16").params
    p4 = parse_format("float4").params

    spec = build_benchmark(6, 31)
    psi0 = initial_state(6, "positive:0")
    gates = [expand_gate(g, 6) for g in spec]

    def circuit(apply, params):
        def run():
            re, im = psi0.re.copy(), psi0.im.copy()
            for g in gates:
                re, im = apply(g.R, g.J, re, im, *params)
        return run

    pool = collect_pool(spec, psi0).points
    xr, xi = pool.real.copy(), pool.imag.copy()
    draws = rng.random(1 << 13)
    cents = np.unique(pool[rng.choice(pool.size, 1 << 13, replace=False)])
    cr, ci = cents.real.copy(), cents.imag.copy()
    perm = np.arange(cents.size, dtype=np.int64)
    labels = rng.integers(0, cents.size, pool.size).astype(np.int64)

    return [
        ("quantize 1e6 float16", lambda b: lambda: b.quantize(x, *p16)),
        ("quantize 1e6 float4", lambda b: lambda: b.quantize(x, *p4)),
        ("651 gates at float16", lambda b: circuit(b.gate_apply, p16)),
        ("nearest 41728 x 8192", lambda b: lambda: b.nearest(xr, xi, cr, ci, perm)),
        ("k-means++ 8192 centers", lambda b: lambda: b.kmeanspp(xr, xi, draws)),
        ("cluster sums", lambda b: lambda: b.cluster_sums(xr, xi, labels, cr, ci)),
    ]


class Backend:
    def __init__(self, suffix):
        for name in ("quantize", "gate_apply", "nearest", "kmeanspp", "cluster_sums"):
            setattr(self, name, getattr(kernels, f"{name}_{suffix}"))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    nb, npy = Backend("nb"), Backend("np")
    print(f"{'kernel':<26}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}")
    for label, make in cases():
        t_nb = best_of(make(nb), args.repeat)
        t_np = best_of(make(npy), args.repeat)
        print(f"{label:<26}{1e3 * t_nb:>12.2f}{1e3 * t_np:>12.2f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
