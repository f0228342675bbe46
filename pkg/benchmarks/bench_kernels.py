"""Benchmark the compiled kernels against the pure-Python fallback.

Times the individual hot kernels (difference stencils, curvature,
Catmull-Rom evaluation, monotone inversion) on both backends, then a
full minimizing-movements step through the public solver.  Run after an
editable install:

    python benchmarks/bench_kernels.py --n 1024 --reps 200
"""

import argparse
import time

import numpy as np

from pelastica import _kernels_py as kpy

try:
    from pelastica import _kernels_c as kc
except ImportError:
    kc = None


def _time(fn, reps):
    fn()  # warm up (and fail fast)
    t0 = time.perf_counter()
    for _ in range(reps):
        fn()
    return (time.perf_counter() - t0) / reps


def bench_kernels(n, reps):
    x = np.arange(n) / n
    g = np.stack([np.cos(2 * np.pi * x), np.sin(2 * np.pi * x)], axis=1)
    g = np.ascontiguousarray(g + 0.05 * np.cos(6 * np.pi * x)[:, None])
    s = kpy.speeds(g)
    psi = np.concatenate([[0.0], np.cumsum(s) / (n * s.mean())])
    psi[-1] = 1.0
    pos = kpy.invert_monotone(psi, x)

    cases = [
        ("d1", lambda mod: mod.d1(g)),
        ("d2", lambda mod: mod.d2(g)),
        ("speeds", lambda mod: mod.speeds(g)),
        ("curvature", lambda mod: mod.curvature(g)),
        ("catmull_rom", lambda mod: mod.catmull_rom(g, pos)),
        ("invert_monotone", lambda mod: mod.invert_monotone(psi, x)),
    ]
    print(f"kernel timings, N={n}, {reps} reps (mean us/call):")
    header = f"  {'kernel':16s} {'python':>10s}"
    if kc is not None:
        header += f" {'compiled':>10s} {'speedup':>8s}"
    print(header)
    for name, call in cases:
        t_py = _time(lambda: call(kpy), reps) * 1e6
        line = f"  {name:16s} {t_py:10.2f}"
        if kc is not None:
            t_c = _time(lambda: call(kc), reps) * 1e6
            line += f" {t_c:10.2f} {t_py / t_c:7.1f}x"
        print(line)
        if kc is not None:
            a, b = call(kpy), call(kc)
            if not np.array_equal(np.asarray(a), np.asarray(b)):
                print(f"    WARNING: backends disagree on {name}")


def bench_solver(n, steps):
    from pelastica import (BACKEND, EnergyParams, FlowConfig, ellipse,
                           run_flow)

    cfg = FlowConfig(params=EnergyParams(p=2.0, lam=0.5), grid_size=n,
                     tau=0.01, horizon=steps * 0.01)
    initial = ellipse(1.2, 0.8, n)
    t0 = time.perf_counter()
    traj = run_flow(initial, cfg)
    dt = time.perf_counter() - t0
    print(f"solver ({BACKEND} backend): {traj.n_steps} steps on N={n} "
          f"in {dt:.3f}s ({1e3 * dt / max(1, traj.n_steps):.1f} ms/step)")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=1024, help="grid size")
    ap.add_argument("--reps", type=int, default=200)
    ap.add_argument("--steps", type=int, default=50,
                    help="solver steps for the end-to-end timing")
    args = ap.parse_args()
    if kc is None:
        print("compiled kernels not available; timing python backend only")
    bench_kernels(args.n, args.reps)
    bench_solver(args.n, args.steps)


if __name__ == "__main__":
    main()
