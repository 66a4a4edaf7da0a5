"""Compare the numba-compiled kernels with their plain Python versions.

Run with ``python3 benchmarks/bench_kernels.py``. Each kernel is timed on
the same inputs in both modes and the outputs are checked to be identical.
The Python side calls the undecorated function (``.py_func``) so both modes
run in one process.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from gridshare import _accel
from gridshare.forecast import _css_residuals_filter, _css_residuals_loop
from gridshare.percolation import _sweep_kernel, trial_permutation
from gridshare.visibility import _fast_kernel, _naive_kernel


def _py(func):
    return getattr(func, "py_func", func)


def _time(fn, *args, repeat=3):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def _plain_python():
    """Point module-level helpers at their Python bodies while a kernel runs."""
    import gridshare.percolation as perc
    import gridshare.visibility as vis
    saved = (vis._sees, perc._find)
    vis._sees, perc._find = _py(vis._sees), _py(perc._find)
    return saved


def _restore(saved):
    import gridshare.percolation as perc
    import gridshare.visibility as vis
    vis._sees, perc._find = saved


def run(series_len=365, trials=20, seed=0):
    rng = np.random.default_rng(seed)
    b = np.cumsum(rng.normal(size=series_len)) + 100
    edges = _fast_kernel(b)
    E = edges.shape[0]
    perms = np.stack([trial_permutation(seed, t, E) for t in range(trials)]).astype(np.int64)
    w = rng.normal(size=5000)
    phi, theta = np.array([0.5, -0.2]), np.array([0.3])

    def sweep(kernel):
        s1 = np.zeros(E + 1, dtype=np.int64)
        s2 = np.zeros(E + 1, dtype=np.int64)
        kernel(edges, series_len, perms, s1, s2)
        return s1

    cases = [
        ("visibility fast (n=%d)" % series_len, lambda: _fast_kernel(b),
         lambda: _py(_fast_kernel)(b), lambda a, c: np.array_equal(a, c)),
        ("visibility naive (n=%d)" % series_len, lambda: _naive_kernel(b),
         lambda: _py(_naive_kernel)(b), lambda a, c: np.array_equal(a, c)),
        ("percolation sweep (E=%d, T=%d)" % (E, trials), lambda: sweep(_sweep_kernel),
         lambda: sweep(_py(_sweep_kernel)), lambda a, c: np.array_equal(a, c)),
        ("CSS residuals loop vs lfilter (n=5000)", lambda: _css_residuals_loop(w, phi, theta),
         lambda: _css_residuals_filter(w, phi, theta), lambda a, c: np.allclose(a, c)),
    ]
    print(f"backend: {_accel.backend()}")
    print(f"{'kernel':44s} {'compiled s':>11s} {'python s':>11s} {'speedup':>8s}  same")
    for name, fast, slow, same in cases:
        fast()  # compile or load from cache
        tf, a = _time(fast)
        saved = _plain_python()
        try:
            ts, c = _time(slow, repeat=1)
        finally:
            _restore(saved)
        print(f"{name:44s} {tf:11.5f} {ts:11.5f} {ts / tf:8.1f}  {same(a, c)}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--length", type=int, default=365)
    ap.add_argument("--trials", type=int, default=20)
    args = ap.parse_args()
    run(args.length, args.trials)


if __name__ == "__main__":
    main()
