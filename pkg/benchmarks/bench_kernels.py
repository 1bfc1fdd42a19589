"""Compare the compiled and pure-Python kernels.

Times one RK4 step, the spatial operator and the discrete energy on a range
of grid sizes, checks that both backends agree, and times a full default
evolution with each backend.

    python benchmarks/bench_kernels.py [--repeat 20] [--sizes 512 2048 8192]
"""
import argparse
import time

import numpy as np

from radialcone import kernels
from radialcone.nonlinearity import ModelParams, get_profile
from radialcone.solver import RadialGrid, SolverConfig, coefficients, evolve, make_bump


def _best(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _flat(result):
    parts = result if isinstance(result, tuple) else (result,)
    return np.concatenate([np.atleast_1d(np.asarray(x, dtype=float)).ravel() for x in parts])


def bench_kernels(sizes, repeat, profile_name="adkins_nappi"):
    params = ModelParams(3, 4.0)
    profile = get_profile(profile_name)
    py, cy = kernels.python_backend, kernels.compiled_backend
    rows = []
    for J in sizes:
        grid = RadialGrid.from_radius(4.0, 4.0 / J)
        data = make_bump(1e-2, 1.0, 0.2, grid)
        c1, c2, ca, wc, wf = coefficients(grid, params)
        code, p = profile.kernel_code, profile.kernel_param
        u, v = data.u, np.ascontiguousarray(0.1 * data.u)
        dt = 0.5 * grid.h
        cases = {
            "operator": lambda b: b.spatial_operator(u, grid.h, c1, c2, ca, code, p),
            "rk4_step": lambda b: b.rk4_step(u, v, dt, grid.h, c1, c2, ca, code, p),
            "energy": lambda b: b.discrete_energy(u, v, grid.h, wc, wf, c2, ca, code, p),
        }
        for name, call in cases.items():
            t_py = _best(lambda: call(py), repeat)
            row = {"J": J, "kernel": name, "python_us": 1e6 * t_py}
            if cy is not None:
                gap = float(np.max(np.abs(_flat(call(py)) - _flat(call(cy)))))
                t_cy = _best(lambda: call(cy), repeat)
                row.update(cython_us=1e6 * t_cy, speedup=t_py / t_cy, max_abs_diff=gap)
            rows.append(row)
    return rows


def bench_evolve(h=1.0 / 512):
    params = ModelParams(3, 4.0)
    profile = get_profile("adkins_nappi")
    grid = RadialGrid.from_radius(4.0, h)
    data = make_bump(1e-3, 1.0, 0.2, grid)
    out = {}
    for name in ("python", "cython"):
        if name == "cython" and kernels.compiled_backend is None:
            continue
        t0 = time.perf_counter()
        evolve(SolverConfig(t_end=1.0), data, grid, params, profile, backend=name)
        out[name] = time.perf_counter() - t0
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--sizes", type=int, nargs="+", default=[512, 2048, 8192])
    args = ap.parse_args(argv)
    print(f"default backend: {kernels.BACKEND}")
    if kernels.compiled_backend is None:
        print("compiled backend unavailable; timing the Python kernels only")
    header = f"{'J':>6} {'kernel':>9} {'python us':>10} {'cython us':>10} {'speedup':>8} {'max diff':>9}"
    print(header)
    for row in bench_kernels(args.sizes, args.repeat):
        cy = row.get("cython_us")
        print(f"{row['J']:6d} {row['kernel']:>9} {row['python_us']:10.1f} "
              + (f"{cy:10.1f} {row['speedup']:8.2f} {row['max_abs_diff']:9.1e}" if cy else ""))
    times = bench_evolve()
    print("full evolution, h=1/512, 1024 steps: "
          + ", ".join(f"{k} {v:.2f} s" for k, v in times.items()))


if __name__ == "__main__":
    main()
