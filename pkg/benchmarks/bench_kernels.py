"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints one line per kernel and size with the best wall time of each
backend and the speedup. Exits nonzero if the two disagree.
"""
import argparse
import sys
import timeit

import numpy as np

from nmq import _kernels_py

try:
    from nmq import _kernels
except ImportError:
    _kernels = None


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def bench_fwht(n, rows, repeat, rng):
    data = rng.normal(size=(rows, 4 ** n))
    ref = _kernels_py.fwht4(data)
    t_py = best(lambda: _kernels_py.fwht4(data), repeat)
    if _kernels is None:
        return t_py, None, 0.0
    out = np.asarray(_kernels.fwht4(data, False))
    t_c = best(lambda: _kernels.fwht4(data, False), repeat)
    return t_py, t_c, float(np.max(np.abs(out - ref)) / np.max(np.abs(ref)))


def bench_volterra(b, steps, repeat, rng):
    dt = 5.0 / (steps - 1)
    t = np.linspace(0, 5, steps)
    k = -rng.uniform(0.5, 2.0, size=(b, 1)) * np.exp(-rng.uniform(0, 1, size=(b, 1)) * t)
    ref = _kernels_py.volterra_heun(k, dt)
    t_py = best(lambda: _kernels_py.volterra_heun(k, dt), repeat)
    if _kernels is None:
        return t_py, None, 0.0
    out = np.asarray(_kernels.volterra_heun(k, dt))
    t_c = best(lambda: _kernels.volterra_heun(k, dt), repeat)
    return t_py, t_c, float(np.max(np.abs(out - ref)))


def line(name, t_py, t_c, err):
    if t_c is None:
        return f"{name:<28} python {t_py * 1e3:9.3f} ms   cython   (not built)"
    return (f"{name:<28} python {t_py * 1e3:9.3f} ms   cython {t_c * 1e3:9.3f} ms"
            f"   x{t_py / t_c:6.1f}   diff {err:.1e}")


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    bad = False
    for n, rows in ((4, 256), (6, 16), (8, 1), (8, 16)):
        res = bench_fwht(n, rows, args.repeat, rng)
        bad |= res[2] > 1e-12
        print(line(f"fwht4 N={n} rows={rows}", *res))
    for b, steps in ((4, 1001), (16, 2001), (4, 5001)):
        res = bench_volterra(b, steps, args.repeat, rng)
        bad |= res[2] > 1e-12
        print(line(f"volterra B={b} steps={steps}", *res))
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
