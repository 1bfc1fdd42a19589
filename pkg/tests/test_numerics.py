import os
import subprocess
import sys

import numpy as np
import pytest
from scipy.integrate import quad

from radialcone import kernels
from radialcone._numerics import (
    cumulative_radial_integral, observed_orders, radial_derivative, radial_integral,
)


def _centres(h, R=2.0):
    return (np.arange(int(round(R / h))) + 0.5) * h


@pytest.mark.parametrize("parity", [-1, None])
def test_radial_derivative_fourth_order(parity):
    errs = []
    for h in (1 / 32, 1 / 64):
        r = _centres(h)
        d = radial_derivative(np.sin(r), h, parity=parity)
        errs.append(np.max(np.abs(d - np.cos(r))))
    assert 3.5 <= np.log2(errs[0] / errs[1]) <= 4.5


def test_radial_derivative_even_parity():
    h = 1 / 64
    r = _centres(h)
    d = radial_derivative(np.cos(r), h, parity=1)
    assert np.max(np.abs(d + np.sin(r))) <= 1e-6
    with pytest.raises(ValueError):
        radial_derivative(np.ones(4), h)


def test_radial_integral_rows_and_limits():
    h = 1 / 64
    r = _centres(h)
    rows = np.vstack([np.exp(-r), r * 0 + 1.0])
    got = radial_integral(rows, h, [0.77, 1.5], 3)
    ref0 = quad(lambda x: np.exp(-x) * x * x, 0, 0.77)[0]
    assert got[0] == pytest.approx(ref0, rel=1e-4)
    assert got[1] == pytest.approx(1.5**3 / 3, rel=1e-4)
    assert radial_integral(np.ones(r.size), h, 0.0, 3) == 0.0
    with pytest.raises(ValueError):
        radial_integral(np.ones(r.size), h, 2.5, 3)


def test_cumulative_integral_against_quad():
    for n in (2, 3):
        errs = []
        for h in (1 / 64, 1 / 128):
            r = _centres(h)
            got = cumulative_radial_integral(np.cos(r), h, n)
            ref = np.array([quad(lambda x: np.cos(x) * x ** (n - 1), 0, x)[0] for x in r[::8]])
            errs.append(np.max(np.abs(got[::8] - ref)))
        assert errs[1] < errs[0] / 3.5


def test_observed_orders():
    assert np.allclose(observed_orders([1.0, 0.25, 0.0625]), [2.0, 2.0])


def test_pure_python_switch():
    env = dict(os.environ, RADIALCONE_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from radialcone import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    assert kernels.get_backend("python") is kernels.python_backend
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def test_benchmark_smoke():
    sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "benchmarks"))
    try:
        import bench_kernels
    finally:
        sys.path.pop(0)
    rows = bench_kernels.bench_kernels([64], repeat=1)
    assert {row["kernel"] for row in rows} == {"operator", "rk4_step", "energy"}
    for row in rows:
        if "max_abs_diff" in row:
            assert row["max_abs_diff"] <= 1e-15
