"""Compare the compiled kernels with the pure-Python fallback.

Run with ``python benchmarks/bench_kernels.py``. Each kernel is timed on
both backends with identical inputs, and the outputs are checked for
bit-identity before any timing is reported.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from medalcast.kernels import get_backend


def _cases(rng):
    x = np.zeros(300)
    e = rng.normal(size=300)
    for t in range(1, 300):
        x[t] = 0.6 * x[t - 1] + e[t] + 0.3 * e[t - 1]
    A = rng.normal(size=(40, 40))
    A = (A + A.T) / 2
    return {
        "css_residuals ARMA(1,1) n=300": lambda k: k.css_residuals(x, 0.0, np.array([0.6]), np.array([0.3]), 1),
        "css_nelder_mead ARMA(2,1) n=300": lambda k: k.css_nelder_mead(
            x, 2, 1, 2, np.zeros(4), 0.1, 1e-8, 500),
        "jacobi_eigh 40x40": lambda k: k.jacobi_eigh(A, 1e-12, 100),
    }


def _same(a, b) -> bool:
    if isinstance(a, tuple):
        return len(a) == len(b) and all(_same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    try:
        compiled = get_backend("compiled")
    except ImportError:
        print("compiled extension not built; nothing to compare")
        return 1
    python = get_backend("python")
    print(f"{'kernel':34s} {'compiled ms':>12s} {'python ms':>12s} {'speedup':>8s}")
    for name, call in _cases(np.random.default_rng(0)).items():
        if not _same(call(compiled), call(python)):
            print(f"{name}: backends disagree")
            return 2
        number = 1 if "jacobi" in name or "nelder" in name else 20
        tc = min(timeit.repeat(lambda: call(compiled), number=number, repeat=args.repeat)) / number
        tp = min(timeit.repeat(lambda: call(python), number=number, repeat=args.repeat)) / number
        print(f"{name:34s} {tc * 1e3:12.3f} {tp * 1e3:12.3f} {tp / tc:8.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
