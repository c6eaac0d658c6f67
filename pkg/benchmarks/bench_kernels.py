"""Numba vs numpy timings of the four sequential kernels.

    python3 benchmarks/bench_kernels.py [--n 16000] [--repeat 20]

Sizes default to the worked scenario's Lyapunov-Perron grid (T_max / dt).
The numba column is absent when numba is unavailable or disabled.
"""
import argparse
import timeit

import numpy as np

from nablowup import _kernels


def cases(n: int, rng: np.random.Generator) -> dict:
    M = np.array([[0.95, 0.02], [-0.01, 0.9]])
    c0, c1 = 0.01 * rng.normal(size=(2, 2)), 0.01 * rng.normal(size=(2, 2))
    R = rng.normal(size=(n + 1, 2))
    t = np.linspace(0.0, 40.0, n + 1)
    u = 0.5 + 0.4 * np.sin(t)
    a = np.abs(rng.normal(size=n + 1))
    return {
        "linrec_forward": lambda k: k.linrec_forward(M, c0, c1, R, np.ones(2)),
        "linrec_backward": lambda k: k.linrec_backward(M, c0, c1, R, np.ones(2)),
        "inverse_power_cumint": lambda k: k.inverse_power_cumint(t, u, 2),
        "decayed_running_max": lambda k: k.decayed_running_max(a, 0.999, 1.0),
    }


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=16000)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    backends = [k for k in (_kernels.numpy_kernels, _kernels.numba_kernels) if k is not None]
    rng = np.random.default_rng(0)
    print(f"n = {args.n}, best of {args.repeat}")
    print(f"{'kernel':24s}" + "".join(f"{k.name:>14s}" for k in backends) + "   max |diff|")
    for name, fn in cases(args.n, rng).items():
        outs = [fn(k) for k in backends]  # warm-up compiles the numba kernels
        times = [min(timeit.repeat(lambda k=k: fn(k), number=1, repeat=args.repeat)) for k in backends]
        diff = max((float(np.nanmax(np.abs(np.where(np.isinf(o), 0, o) - np.where(np.isinf(outs[0]), 0, outs[0]))))
                    for o in outs[1:]), default=0.0)
        print(f"{name:24s}" + "".join(f"{1e3 * s:12.3f}ms" for s in times) + f"   {diff:.1e}")


if __name__ == "__main__":
    main()
