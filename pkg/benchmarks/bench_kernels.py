"""Benchmark the JIT-compiled kernels against the pure numpy fallback.

Runs the three hot kernels on representative workloads and reports the
per-call time of each backend plus the speedup.  The numpy numbers use
the reference implementations directly; the JIT numbers use whatever
backend the package selected at import (set SHARMONIC_PURE_NUMPY=1 to
confirm the fallback path end to end, in which case both columns match).

Usage: python benchmarks/bench_kernels.py [--points N] [--repeat R]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from sharmonic import _kernels


def _workload(points: int):
    """Block data shaped like a mid-size pipeline output plus a series."""
    rng_free = np.linspace(0.0, 1.0, 40)  # deterministic "coefficients"
    ts = 2.0 + np.tile(np.linspace(0.0, 1.0, 10), 4)
    cs = np.concatenate([(-1.0) ** np.arange(10) * (1.0 + 3.0 * rng_free[:10]),
                         (1.0 + rng_free[10:40])])
    rs = np.full(40, 1e-6)
    x = np.linspace(-1.0, 1.0, points)
    exps = np.array([2, 5, 6, 7, 8, 9, 10, 11, 12, 13], dtype=np.int64)
    coefs = 1.0 / (1.0 + np.arange(10.0)) * (-1.0) ** np.arange(10)
    return ts, cs, rs, x, exps, coefs


def _time(fn, args, repeat: int) -> float:
    fn(*args)  # warm up: triggers JIT compilation where applicable
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=7)
    args = ap.parse_args()

    ts, cs, rs, x, exps, coefs = _workload(args.points)
    ref = _kernels.reference_implementations()
    s = 0.5

    cases = [
        ("combo_values", _kernels.combo_values_impl, ref["combo_values"],
         (ts, cs, rs, s, x)),
        ("combo_derivatives", _kernels.combo_derivatives_impl,
         ref["combo_derivatives"], (ts, cs, rs, s, x, 2)),
        ("power_series_eval", _kernels.power_series_eval_impl,
         ref["power_series_eval"], (exps, coefs, x, 1)),
    ]

    print(f"backend={_kernels.BACKEND} points={args.points} repeat={args.repeat}")
    print(f"{'kernel':<20} {'active [ms]':>12} {'numpy [ms]':>12} {'speedup':>9}")
    for name, active, fallback, call_args in cases:
        t_active = _time(active, call_args, args.repeat) * 1e3
        t_numpy = _time(fallback, call_args, args.repeat) * 1e3
        speed = t_numpy / t_active if t_active > 0 else float("inf")
        print(f"{name:<20} {t_active:>12.3f} {t_numpy:>12.3f} {speed:>8.2f}x")

        got = np.asarray(active(*call_args))
        want = np.asarray(fallback(*call_args))
        scale = 1.0 + float(np.max(np.abs(want)))
        worst = float(np.max(np.abs(got - want))) / scale
        if worst > 1e-12:
            print(f"  WARNING: backends disagree, relative error {worst:.3e}")
            return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
