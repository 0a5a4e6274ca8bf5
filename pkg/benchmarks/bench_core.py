"""Compare the compiled and pure-Python numerical cores.

    python3 benchmarks/bench_core.py [--n-max 20000] [--points 2000] [--repeat 3]
"""
import argparse
import time

import numpy as np

from rkhs_sep import _pure

try:
    from rkhs_sep import _speedups
except ImportError:  # extension not built
    _speedups = None


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n-max", type=int, default=20_000)
    ap.add_argument("--points", type=int, default=2_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _speedups is None:
        raise SystemExit("compiled extension not available; build with `pip install --no-build-isolation -e .`")

    rng = np.random.default_rng(0)
    rows = []

    t_py, (logs_py, _) = best_of(lambda: _pure.moment_logs(args.n_max), args.repeat)
    t_cy, (logs_cy, _) = best_of(lambda: _speedups.moment_logs(args.n_max), args.repeat)
    rows.append(("moment_logs", args.n_max, t_py, t_cy, float(np.max(np.abs(logs_py - logs_cy)))))

    r = 1.0 - 2.0 ** -rng.uniform(1, 7, args.points)
    p = r * np.exp(2j * np.pi * rng.uniform(size=args.points))
    t_py, (v_py, _) = best_of(lambda: _pure.bergman_values(logs_cy, p, 1e-15), args.repeat)
    t_cy, (v_cy, _) = best_of(lambda: _speedups.bergman_values(logs_cy, p, 1e-15), args.repeat)
    # rotated arguments cancel; the attainable accuracy is relative to sum |terms| = k(|p|)
    scale = np.abs(_speedups.bergman_values(logs_cy, np.abs(p), 1e-15)[0])
    rows.append(("bergman_values", args.points, t_py, t_cy, float(np.nanmax(np.abs(v_py - v_cy) / scale))))

    print(f"{'kernel':<16}{'size':>8}{'python [s]':>12}{'compiled [s]':>14}{'speedup':>9}{'max diff':>11}")
    for name, size, tp, tc, diff in rows:
        print(f"{name:<16}{size:>8}{tp:>12.3f}{tc:>14.3f}{tp / tc:>9.1f}{diff:>11.1e}")


if __name__ == "__main__":
    main()
