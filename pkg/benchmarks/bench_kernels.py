"""
Compare the compiled and numpy kernels on the two hot loops.

    python benchmarks/bench_kernels.py [--steps 200] [--t-max 256] [--repeat 3]

Reports the best wall time of each backend and checks that both produce the
same numbers (bit-identical for the stencil, round-off level for the origin
series).
"""
import argparse
import time

import numpy as np

from qwplane import BiasParams, build_coin, evolve, new_localized
from qwplane.spectral import amplitude_at_origin_series


def best_of(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.strip().splitlines()[0])
    ap.add_argument("--p", type=float, default=0.5)
    ap.add_argument("--r", type=int, default=1)
    ap.add_argument("--steps", type=int, default=200, help="direct evolution steps")
    ap.add_argument("--t-max", type=int, default=256, help="last time of the origin series")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    try:
        from qwplane import _kernels  # noqa: F401
    except ImportError:
        raise SystemExit("compiled extension not built; reinstall with a C compiler available")

    params = BiasParams(args.p, args.r)
    C = build_coin(params)
    psi = (1, 0, 0, 0)
    times = list(range(0, args.t_max + 1, params.r + 1))

    rows = []
    fields = {}
    for backend in ("cython", "python"):
        t_step, fld = best_of(lambda: evolve(new_localized(params, psi), C, args.steps, backend=backend),
                              args.repeat)
        t_orig, amps = best_of(lambda: amplitude_at_origin_series(psi, params, C, times, backend=backend),
                               args.repeat)
        fields[backend] = (fld.amps, amps)
        rows.append((backend, t_step, t_orig))

    same_field = np.array_equal(fields["cython"][0], fields["python"][0])
    origin_gap = float(np.abs(fields["cython"][1] - fields["python"][1]).max())

    print(f"p={params.p} r={params.r}  stencil: {args.steps} steps  origin series: t <= {args.t_max} "
          f"({len(times)} times)")
    print(f"{'backend':<8} {'stencil [s]':>12} {'origin [s]':>12}")
    for name, a, b in rows:
        print(f"{name:<8} {a:12.3f} {b:12.3f}")
    (_, cs, co), (_, ps, po) = rows
    print(f"speed-up  {ps / cs:12.2f} {po / co:12.2f}")
    print(f"stencil bit-identical: {same_field}; origin series max gap: {origin_gap:.2e}")


if __name__ == "__main__":
    main()
