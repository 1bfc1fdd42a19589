"""Manufactured solutions: exact forced solutions and convergence studies.

A :class:`ManufacturedCase` supplies a closed-form ``u*(t, r)`` vanishing at
the origin together with its derivatives.  The forcing that makes ``u*`` an
exact solution is fed to the solver and the numerical solution is compared
with ``u*`` on a sequence of grids.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Optional

import numpy as np

from ._numerics import observed_orders, radial_derivative
from .nonlinearity import ModelParams, get_profile
from .solver import FieldState, RadialGrid, SolverConfig, evolve

ORDER_BAND = (1.8, 2.2)


@dataclass(frozen=True)
class ManufacturedCase:
    """Closed-form solution with its first and second derivatives.

    All callables take ``(t, r)`` and broadcast over arrays.  ``separable``
    optionally gives ``u* = g(t) phi(r)`` as ``(g, g_tt, phi, phi_r, phi_rr)``
    so that the forcing can reuse its spatial parts.
    """

    name: str
    u_star: Callable
    u_t: Callable
    u_tt: Callable
    u_r: Callable
    u_rr: Callable
    params: ModelParams
    profile_name: str
    profile_params: tuple = ()
    separable: Optional[tuple] = None

    @property
    def profile(self):
        return get_profile(self.profile_name, **dict(self.profile_params))

    def describe(self) -> dict:
        return {
            "name": self.name,
            "n": self.params.n,
            "alpha": self.params.alpha,
            "profile": self.profile_name,
            "profile_params": dict(self.profile_params),
        }


def _gauss_phi(A, r):
    return A * r * np.exp(-r * r)


def _gauss_phi_r(A, r):
    return A * (1.0 - 2.0 * r * r) * np.exp(-r * r)


def _gauss_phi_rr(A, r):
    return A * (4.0 * r**3 - 6.0 * r) * np.exp(-r * r)


def _cos(w, t):
    return np.cos(w * t)


def _cos_tt(w, t):
    return -w * w * np.cos(w * t)


def _sin_t(w, t):
    return -w * np.sin(w * t)


def _product(g, phi, t, r):
    return g(t) * phi(r)


def _zero(t, r):
    return np.zeros(np.broadcast(t, r).shape)


def default_case(params: ModelParams, profile: str = "linear", amplitude: float = 0.1,
                 omega: float = 1.0, **profile_params) -> ManufacturedCase:
    """``u* = A r exp(-r^2) cos(omega t)``."""
    A, w = float(amplitude), float(omega)
    g, g_tt = partial(_cos, w), partial(_cos_tt, w)
    phi = partial(_gauss_phi, A)
    phi_r, phi_rr = partial(_gauss_phi_r, A), partial(_gauss_phi_rr, A)
    return ManufacturedCase(
        "gaussian",
        partial(_product, g, phi),
        partial(_product, partial(_sin_t, w), phi),
        partial(_product, g_tt, phi),
        partial(_product, g, phi_r),
        partial(_product, g, phi_rr),
        params=params,
        profile_name=profile,
        profile_params=tuple(sorted(profile_params.items())),
        separable=(g, g_tt, phi, phi_r, phi_rr),
    )


def zero_case(params: ModelParams, profile: str = "linear") -> ManufacturedCase:
    return ManufacturedCase("zero", _zero, _zero, _zero, _zero, _zero, params, profile)


def forcing(case: ManufacturedCase) -> Callable:
    """Forcing ``F*`` that makes ``case.u_star`` an exact solution."""
    n, alpha = case.params.n, case.params.alpha
    profile = case.profile
    cache = {}

    def radial(r):
        # powers of r (and the linear operator on phi) reused while r is unchanged
        if cache.get("r") is not r:
            rr = np.asarray(r, dtype=float)
            if np.any(rr <= 0):
                raise ValueError("forcing is defined for r > 0 only")
            cache.clear()
            cache.update(r=r, c2=0.5 * (n - 1) / rr**2, ca=rr ** (-alpha))
            if case.separable is not None:
                _, _, phi, phi_r, phi_rr = case.separable
                cache.update(phi=phi(rr), lin=-phi_rr(rr) - (n - 1) / rr * phi_r(rr))
        return cache

    def F(t, r):
        c = radial(r)
        if case.separable is not None:
            g, g_tt = case.separable[0], case.separable[1]
            gt = g(t)
            u = gt * c["phi"]
            linear = g_tt(t) * c["phi"] + gt * c["lin"]
        else:
            r = np.asarray(r, dtype=float)
            u = case.u_star(t, r)
            linear = case.u_tt(t, r) - case.u_rr(t, r) - (n - 1) / r * case.u_r(t, r)
        return linear + c["c2"] * np.sin(2.0 * u) + profile.ffp(u) * c["ca"]

    return F


def _fd4(fn, x, step):
    return (fn(x - 2 * step) - 8 * fn(x - step) + 8 * fn(x + step) - fn(x + 2 * step)) / (12 * step)


def _fd4_second(fn, x, step):
    return (-fn(x - 2 * step) + 16 * fn(x - step) - 30 * fn(x) + 16 * fn(x + step)
            - fn(x + 2 * step)) / (12 * step * step)


def check_derivatives(case: ManufacturedCase, t, r, step: float = 1e-3) -> dict:
    """Largest gap between supplied derivatives and finite differences."""
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    u = case.u_star
    return {
        "u_t": float(np.max(np.abs(case.u_t(t, r) - _fd4(lambda s: u(s, r), t, step)))),
        "u_tt": float(np.max(np.abs(case.u_tt(t, r) - _fd4_second(lambda s: u(s, r), t, step)))),
        "u_r": float(np.max(np.abs(case.u_r(t, r) - _fd4(lambda s: u(t, s), r, step)))),
        "u_rr": float(np.max(np.abs(case.u_rr(t, r) - _fd4_second(lambda s: u(t, s), r, step)))),
    }


@dataclass
class LevelResult:
    h: float
    steps: int
    dt: float
    max_error: float
    cone_error: float
    energy_error: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class ConvergenceResult:
    """Errors per grid level and observed orders per consecutive pair."""

    case: dict
    closure: str
    levels: list
    band: tuple = ORDER_BAND
    orders: dict = field(default_factory=dict)

    @property
    def exact(self) -> bool:
        return all(lv.max_error == 0.0 for lv in self.levels)

    @property
    def passed(self) -> bool:
        if self.exact:
            return True
        lo, hi = self.band
        return all(lo <= o <= hi for o in self.orders["max"])

    @property
    def regression(self) -> bool:
        """True when some order falls below the band."""
        return not self.exact and min(self.orders["max"]) < self.band[0]

    def to_dict(self) -> dict:
        return {
            "case": self.case,
            "closure": self.closure,
            "band": list(self.band),
            "levels": [lv.to_dict() for lv in self.levels],
            "orders": {k: [None if not math.isfinite(x) else x for x in v]
                       for k, v in self.orders.items()},
            "exact": self.exact,
            "passed": self.passed,
        }

    def render(self) -> str:
        head = f"{'h':>12} {'steps':>8} {'max error':>12} {'order':>7} {'cone error':>12} {'energy error':>13}"
        lines = [f"case {self.case['name']}: n={self.case['n']} alpha={self.case['alpha']} "
                 f"profile={self.case['profile']} closure={self.closure}", head]
        for i, lv in enumerate(self.levels):
            order = "" if i == 0 or self.exact else f"{self.orders['max'][i - 1]:7.3f}"
            lines.append(f"{lv.h:12.6g} {lv.steps:8d} {lv.max_error:12.4e} {order:>7} "
                         f"{lv.cone_error:12.4e} {lv.energy_error:13.4e}")
        verdict = "exact" if self.exact else ("ok" if self.passed else "FAIL")
        lines.append(f"orders within [{self.band[0]}, {self.band[1]}]: {verdict}")
        return "\n".join(lines)


def _energy_norm(err_u, err_v, grid, n):
    w = grid.r ** (n - 1)
    du = radial_derivative(err_u, grid.h, parity=-1)
    return math.sqrt(grid.h * float(np.sum((err_v**2 + du**2) * w)))


def run_level(case: ManufacturedCase, h: float, R: float = 5.0, t0: float = 0.0,
              t_end: float = 0.1, cfl: float = 0.5, closure: str = "odd",
              cone_radius: Optional[float] = None, backend: Optional[str] = None) -> LevelResult:
    """Solve the forced problem on one grid and measure the error at ``t_end``."""
    grid = RadialGrid.from_radius(R, h)
    r = grid.r
    data = FieldState(t0, case.u_star(t0, r), case.u_t(t0, r), grid)
    config = SolverConfig(cfl=cfl, t0=t0, t_end=t_end, snapshot_stride=2**31 - 1,
                          closure=closure, energy_jump=math.inf)
    history = evolve(config, data, grid, case.params, case.profile,
                     forcing=forcing(case), record_series=False, backend=backend)
    final = history.slices[-1]
    err_u = final.u - case.u_star(t_end, r)
    err_v = final.v - case.u_t(t_end, r)
    inside = r <= (0.5 * R if cone_radius is None else cone_radius)
    return LevelResult(
        h=h,
        steps=len(history.series["t"]) - 1,
        dt=history.dt,
        max_error=float(np.max(np.abs(err_u))),
        cone_error=float(np.max(np.abs(err_u[inside]))),
        energy_error=_energy_norm(err_u, err_v, grid, case.params.n),
    )


def _run_level_args(args):
    case, h, kwargs = args
    return run_level(case, h, **kwargs)


def convergence_study(case: ManufacturedCase, grids, cfl: float = 0.5, R: float = 5.0,
                      t0: float = 0.0, t_end: float = 0.1, closure: str = "odd",
                      cone_radius: Optional[float] = None, band=ORDER_BAND,
                      jobs: int = 1, backend: Optional[str] = None) -> ConvergenceResult:
    """Observed orders of the forced solver on successively halved grids.

    ``cone_error`` is the max error over ``r <= cone_radius`` (default
    ``R/2``), which excludes the outer boundary.  ``jobs > 1`` runs the levels
    in separate processes.
    """
    hs = [float(h) for h in grids]
    if len(hs) < 3:
        raise ValueError("a convergence study needs at least three grid levels")
    for coarse, fine in zip(hs, hs[1:]):
        if not math.isclose(fine, 0.5 * coarse, rel_tol=1e-12):
            raise ValueError(f"grid levels must halve h, got {coarse} then {fine}")
    kwargs = dict(R=R, t0=t0, t_end=t_end, cfl=cfl, closure=closure,
                  cone_radius=cone_radius, backend=backend)
    tasks = [(case, h, kwargs) for h in hs]
    if jobs > 1 and case.name != "zero":
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            levels = list(pool.map(_run_level_args, tasks))
    else:
        levels = [_run_level_args(t) for t in tasks]
    orders = {
        key: [float(o) for o in observed_orders([getattr(lv, attr) for lv in levels])]
        for key, attr in (("max", "max_error"), ("cone", "cone_error"), ("energy", "energy_error"))
    }
    return ConvergenceResult(case.describe(), closure, levels, tuple(band), orders)
