"""Backward light cone diagnostics computed from a :class:`RunHistory`.

The solver runs forward in lab time ``tau``; every quantity here lives in
cone time ``t = apex - tau``, so the cone ``K(S, T) = {0 <= r <= t, S <= t <= T}``
closes at ``t = 0``.  Under the reflection ``u_t = -v``.  All radial integrals
use the measure ``r^(n-1) dr`` with the area of the unit sphere dropped.

Every function is a pure function of its arguments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ._numerics import cumulative_radial_integral, observed_orders, radial_derivative, radial_integral
from .errors import DiagnosticsError
from .nonlinearity import ModelParams, NonlinearityProfile, bogomolny_array
from .solver import FieldState, RunHistory

_TIME_SLACK = 1e-9


# -- regions and time reflection ---------------------------------------------

@dataclass(frozen=True)
class ConeRegion:
    """Truncated cone ``K(S, T)`` in cone time with its apex in lab time."""

    S: float
    T: float
    apex_time: float

    def __post_init__(self):
        if not (0.0 < self.S <= self.T):
            raise DiagnosticsError(f"need 0 < S <= T, got S={self.S!r}, T={self.T!r}")

    def lab_time(self, t):
        return self.apex_time - t

    def contains(self, t, r) -> bool:
        return self.S <= t <= self.T and 0.0 <= r <= t


def region(history: RunHistory, S: float, T: float) -> ConeRegion:
    return ConeRegion(S, T, history.apex)


def cone_times(history: RunHistory) -> np.ndarray:
    """Cone time of every retained slice."""
    return history.apex - history.times()


def step_cone_times(history: RunHistory) -> np.ndarray:
    """Cone time of every solver step."""
    return history.apex - np.asarray(history.series["t"], dtype=float)


def _snap(times, target, tol, what):
    i = int(np.argmin(np.abs(times - target)))
    if abs(times[i] - target) > tol:
        raise DiagnosticsError(
            f"{what} t={target:.6g} is not on the record (nearest {times[i]:.6g})"
        )
    return i


def _slice_tolerance(history):
    return 0.5 * history.dt * history.config.snapshot_stride * (1 + _TIME_SLACK) + 1e-12


def slice_index(history: RunHistory, t: float) -> int:
    """Index of the retained slice at cone time ``t``."""
    if t < 0:
        raise DiagnosticsError(f"cone time must be nonnegative, got {t!r}")
    return _snap(cone_times(history), t, _slice_tolerance(history), "slice")


def cone_state(history: RunHistory, t: float) -> FieldState:
    """Retained slice nearest cone time ``t`` in the cone convention.

    The returned state carries its exact cone time and ``v = u_t`` in cone
    time (the negated lab velocity).
    """
    i = slice_index(history, t)
    s = history.slices[i]
    return FieldState(history.apex - s.t, s.u, -s.v, s.grid)


# -- densities ---------------------------------------------------------------

@dataclass(frozen=True)
class DensitySlice:
    """Energy densities ``e+``, ``e-`` and momentum ``m`` on one slice."""

    e_plus: np.ndarray
    e_minus: np.ndarray
    m: np.ndarray


def density_values(u, ut, ur, r, params: ModelParams, profile: NonlinearityProfile):
    """Pointwise ``(e+, e-, m)`` from field values at radius ``r``."""
    u = np.asarray(u, dtype=float)
    kinetic = 0.5 * (ut * ut + ur * ur)
    potential = (0.5 * (params.n - 1) * np.sin(u) ** 2 / r**2
                 + profile.f_squared(u) / (2.0 * r**params.alpha))
    return kinetic + potential, kinetic - potential, ut * ur


def densities(state: FieldState, params: ModelParams, profile: NonlinearityProfile) -> DensitySlice:
    """Densities on the grid; ``state.v`` is read as ``u_t``."""
    ur = radial_derivative(state.u, state.grid.h, parity=-1)
    e_plus, e_minus, m = density_values(state.u, state.v, ur, state.grid.r, params, profile)
    return DensitySlice(e_plus, e_minus, m)


def _check_within(grid, T):
    if T > grid.R * (1 + 1e-12):
        raise DiagnosticsError(f"T={T:.6g} lies beyond the grid radius {grid.R:.6g}")


def cone_energy(state: FieldState, T: float, params: ModelParams,
                profile: NonlinearityProfile) -> float:
    """``E(T)``: integral of ``e+ r^(n-1)`` over ``0 <= r <= T``."""
    _check_within(state.grid, T)
    d = densities(state, params, profile)
    return radial_integral(d.e_plus, state.grid.h, T, params.n)


# -- flux along the mantle ---------------------------------------------------

def _mantle_integrand(history):
    """Cone times (ascending) and ``t^(n-1) (e+ + m)(t, t)`` at every step."""
    s = history.series
    if "cone_u" not in s:
        raise DiagnosticsError("run was evolved without cone-boundary samples")
    t = step_cone_times(history)[::-1]
    u = s["cone_u"][::-1]
    ut = -s["cone_v"][::-1]
    ur = s["cone_ur"][::-1]
    params, profile = history.params, history.profile
    with np.errstate(invalid="ignore", divide="ignore"):
        e_plus, _, m = density_values(u, ut, ur, t, params, profile)
        g = t ** (params.n - 1) * (e_plus + m)
    return t, g, (u, ut, ur)


def _step_range(t, S, T, dt):
    tol = 0.5 * dt * (1 + _TIME_SLACK) + 1e-12
    i = _snap(t, S, tol, "S")
    k = _snap(t, T, tol, "T")
    if i > k:
        raise DiagnosticsError(f"S={S!r} exceeds T={T!r}")
    return i, k


def _trapezoid(y, x):
    if len(x) < 2:
        return 0.0
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(x)))


def _mantle_integral(history, S, T, values):
    t, g, _ = _mantle_integrand(history)
    i, k = _step_range(t, S, T, history.dt)
    y = values(t, g)[i:k + 1]
    if not np.all(np.isfinite(y)):
        raise DiagnosticsError(f"mantle samples missing on [{S:.6g}, {T:.6g}]")
    return _trapezoid(y, t[i:k + 1])


def flux(history: RunHistory, S: float, T: float) -> float:
    """``F(S, T)``: integral of ``t^(n-1) (e+ + m)(t, t)`` over ``[S, T]``."""
    region(history, S, T)
    return _mantle_integral(history, S, T, lambda t, g: g)


def smallest_time(history: RunHistory) -> float:
    """Smallest positive cone time on the step record."""
    t = step_cone_times(history)
    positive = t[t > 0.5 * history.dt]
    if positive.size == 0:
        raise DiagnosticsError("no positive cone time on record")
    return float(positive.min())


def flux_to_apex(history: RunHistory, T: float) -> float:
    """``F(T)``, the flux from the smallest recorded time up to ``T``."""
    return flux(history, smallest_time(history), T)


def energy_flux_residual(history: RunHistory, S: float, T: float) -> float:
    """``E(T) - E(S) - F(S, T)`` on retained slices at ``S`` and ``T``."""
    region(history, S, T)
    params, profile = history.params, history.profile
    sT, sS = cone_state(history, T), cone_state(history, S)
    eT = cone_energy(sT, sT.t, params, profile)
    eS = cone_energy(sS, sS.t, params, profile)
    return eT - eS - flux(history, sS.t, sT.t)


def forcing_work(history: RunHistory, forcing: Callable, S: float, T: float) -> float:
    """Work ``int_K F u_t`` done by a lab-time forcing inside ``K(S, T)``.

    For a forced run ``E(T) - E(S) - F(S, T)`` equals this quantity.
    """
    t, U, UT, _ = _cone_window(history, S, T, need_derivatives=False)
    r = history.grid.r[: U.shape[1]]
    h = history.grid.h
    rows = np.array([forcing(history.apex - ti, r) for ti in t]) * UT
    inner = radial_integral(rows, h, t, history.params.n)
    return _trapezoid(inner, t)


@dataclass
class EnergyLedger:
    """Cone energies on retained slices and the fluxes between them."""

    times: np.ndarray
    energies: np.ndarray
    fluxes: np.ndarray
    residuals: np.ndarray
    cumulative_flux: np.ndarray

    @property
    def min_flux(self) -> float:
        return float(self.fluxes.min()) if self.fluxes.size else 0.0

    def min_pair_flux(self) -> float:
        """Smallest ``F(S, T)`` over all pairs of slice times ``S <= T``."""
        c = self.cumulative_flux
        if c.size < 2:
            return 0.0
        return float(np.min(c[None, :] - c[:, None] + np.tril(np.full((c.size,) * 2, np.inf))))

    @property
    def monotonicity_defect(self) -> float:
        """Largest drop of ``E`` between consecutive slices (0 if monotone)."""
        if self.energies.size < 2:
            return 0.0
        return float(max(0.0, -np.min(np.diff(self.energies))))

    @property
    def max_residual(self) -> float:
        return float(np.max(np.abs(self.residuals))) if self.residuals.size else 0.0

    def to_dict(self) -> dict:
        return {
            "times": self.times.tolist(),
            "energies": self.energies.tolist(),
            "fluxes": self.fluxes.tolist(),
            "residuals": self.residuals.tolist(),
            "min_flux": self.min_flux,
            "min_pair_flux": self.min_pair_flux(),
            "monotonicity_defect": self.monotonicity_defect,
            "max_residual": self.max_residual,
        }


def energy_ledger(history: RunHistory, t_max: Optional[float] = None) -> EnergyLedger:
    """Energy and flux on every retained slice with ``0 < t <= t_max``."""
    params, profile = history.params, history.profile
    grid = history.grid
    limit = grid.R if t_max is None else min(t_max, grid.R)
    ct = cone_times(history)
    order = [i for i in np.argsort(ct, kind="stable") if 0.5 * history.dt < ct[i] <= limit + 1e-12]
    times = ct[order]
    energies = np.array([
        cone_energy(FieldState(ct[i], history.slices[i].u, -history.slices[i].v, grid),
                    ct[i], params, profile)
        for i in order
    ])
    t, g, _ = _mantle_integrand(history)
    if times.size:
        idx = [_step_range(t, times[0], tk, history.dt)[1] for tk in times]
        start = idx[0]
        gs, ts = g[start:idx[-1] + 1], t[start:idx[-1] + 1]
        if not np.all(np.isfinite(gs)):
            raise DiagnosticsError("mantle samples missing inside the ledger window")
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (gs[1:] + gs[:-1]) * np.diff(ts))])
        cumulative = cum[np.asarray(idx) - start]
    else:
        cumulative = np.zeros(0)
    fluxes = np.diff(cumulative)
    residuals = np.diff(energies) - fluxes
    return EnergyLedger(times, energies, fluxes, residuals, cumulative)


def flux_decay(history: RunHistory, scales) -> list:
    """``F(T)`` at each time in ``scales``."""
    return [flux_to_apex(history, T) for T in scales]


def dyadic_times(top: float, count: int) -> list:
    """``top, top/2, ..., top/2^(count-1)``."""
    return [top * 0.5**k for k in range(count)]


# -- Bogomolny inequality ----------------------------------------------------

def bogomolny_check(state: FieldState, params: ModelParams, profile: NonlinearityProfile):
    """Largest excess of ``|I(u)|`` over its Cauchy-Schwarz bound.

    Checks, at every grid radius,

        |I(u(r))| <= r^((alpha - 2(n-1))/2)
                     (int_0^r f(u)^2 s^(n-1-alpha) ds)^(1/2)
                     (int_0^r u_r^2 s^(n-1) ds)^(1/2)

    with constant 1.  Returns ``(max_violation, witness_radius)``; the
    violation is ``max(LHS - RHS)`` and may be negative.
    """
    n, alpha = params.n, params.alpha
    if alpha < 2 * (n - 1):
        raise ValueError(
            f"the bound needs alpha >= 2(n-1) = {2 * (n - 1)}, got alpha={alpha}"
        )
    grid = state.grid
    r, h = grid.r, grid.h
    u = state.u
    ur = radial_derivative(u, h, parity=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = cumulative_radial_integral(profile.f_squared(u) * r ** (-alpha), h, n)
        b = cumulative_radial_integral(ur * ur, h, n)
        rhs = r ** (0.5 * (alpha - 2 * (n - 1))) * np.sqrt(np.maximum(a, 0.0) * np.maximum(b, 0.0))
    lhs = np.abs(bogomolny_array(profile, u))
    excess = lhs - rhs
    excess = np.where(np.isnan(excess), -np.inf, excess)
    j = int(np.argmax(excess))
    return float(excess[j]), float(r[j])


def bogomolny_history(history: RunHistory):
    """Worst ``bogomolny_check`` over all retained slices: ``(violation, t, r)``."""
    worst = (-math.inf, math.nan, math.nan)
    for s, t in zip(history.slices, cone_times(history)):
        v, rad = bogomolny_check(s, history.params, history.profile)
        if v > worst[0]:
            worst = (v, float(t), rad)
    return worst


# -- space-time windows ------------------------------------------------------

def _cone_window(history, S, T, need_derivatives=True):
    """Slices with cone time in ``[S, T]`` plus time derivatives.

    Returns ``(t, U, UT, UR)`` with rows ascending in ``t``; columns cover
    ``r <= T`` with a few cells to spare.
    """
    grid = history.grid
    _check_within(grid, T)
    ct = cone_times(history)
    tol = _slice_tolerance(history)
    lo = _snap(ct, S, tol, "S")
    hi = _snap(ct, T, tol, "T")
    ct_lo, ct_hi = ct[lo], ct[hi]
    order = np.argsort(ct, kind="stable")
    keep = [i for i in order if ct_lo - 1e-12 <= ct[i] <= ct_hi + 1e-12]
    cols = min(grid.J, max(8, int(math.ceil(ct_hi / grid.h)) + 6))
    t = ct[keep]
    U = np.array([history.slices[i].u[:cols] for i in keep])
    UT = -np.array([history.slices[i].v[:cols] for i in keep])
    UR = None
    if need_derivatives:
        UR = np.array([radial_derivative(history.slices[i].u, grid.h, parity=-1)[:cols] for i in keep])
    return t, U, UT, UR


def _space_time_integral(t, h, rows, n=1):
    """``int_S^T int_0^t rows dr dt`` with optional ``r^(n-1)`` weight."""
    inner = radial_integral(rows, h, t, n)
    return _trapezoid(inner, t)


# -- multiplier identity -----------------------------------------------------

def _fd(fn, t, r, which, eps=1e-6):
    if which == "t":
        return (fn(t + eps, r) - fn(t - eps, r)) / (2 * eps)
    return (fn(t, r + eps) - fn(t, r - eps)) / (2 * eps)


@dataclass(frozen=True)
class Multiplier:
    """Multiplier triple ``(a, b, c)`` as smooth functions of ``(t, r)``.

    Missing partial derivatives are taken by central differences.
    """

    name: str
    a: Callable
    b: Callable
    c: Callable
    a_t: Optional[Callable] = None
    a_r: Optional[Callable] = None
    b_t: Optional[Callable] = None
    b_r: Optional[Callable] = None
    c_t: Optional[Callable] = None
    c_r: Optional[Callable] = None

    def partial(self, name, t, r):
        fn = getattr(self, name)
        if fn is not None:
            return np.broadcast_to(fn(t, r), np.broadcast(t, r).shape)
        base, var = name.split("_")
        return _fd(getattr(self, base), t, r, var)

    def values(self, t, r):
        shape = np.broadcast(t, r).shape
        return tuple(np.broadcast_to(g(t, r), shape) for g in (self.a, self.b, self.c))


def _const(value):
    return lambda t, r: np.full(np.broadcast(t, r).shape, float(value))


def energy_multiplier() -> Multiplier:
    """``(a, b, c) = (1, 0, 0)``."""
    zero = _const(0.0)
    return Multiplier("energy", _const(1.0), zero, zero, zero, zero, zero, zero, zero, zero)


def scaling_multiplier(n: int) -> Multiplier:
    """``(a, b, c) = (t, r, (n-1)/2)``."""
    zero, one = _const(0.0), _const(1.0)
    return Multiplier(
        "scaling",
        lambda t, r: t + 0.0 * r,
        lambda t, r: r + 0.0 * t,
        _const(0.5 * (n - 1)),
        one, zero, zero, one, zero, zero,
    )


def multiplier_rhs(t, r, u, ut, ur, params: ModelParams, profile: NonlinearityProfile,
                   mult: Multiplier):
    """Right side of the general multiplier identity, times ``r^(n-1)``."""
    n, alpha = params.n, params.alpha
    a, b, c = mult.values(t, r)
    a_t, a_r = mult.partial("a_t", t, r), mult.partial("a_r", t, r)
    b_t, b_r = mult.partial("b_t", t, r), mult.partial("b_r", t, r)
    c_t, c_r = mult.partial("c_t", t, r), mult.partial("c_r", t, r)
    w = r ** (n - 1)
    sin2 = np.sin(u) ** 2
    fsq = profile.f_squared(u)
    out = 0.5 * (a_t - b_r - (n - 1) * b / r + 2 * c) * ut * ut
    out += 0.5 * (a_t - b_r + (n - 1) * b / r - 2 * c) * ur * ur
    out += (a_t + b_r + (n - 3) * b / r) * 0.5 * (n - 1) * sin2 / r**2
    out += (a_t + b_r + (n - 1 - alpha) * b / r) * fsq / (2 * r**alpha)
    out += (b_t - a_r) * ut * ur
    out += u * (c_t * ut - c_r * ur)
    out -= c * u * (0.5 * (n - 1) * np.sin(2 * u) / r**2 + profile.ffp(u) / r**alpha)
    return w * out


def multiplier_fluxes(t, r, u, ut, ur, params, profile, mult):
    """``(P, Q)`` such that the identity reads ``P_t - Q_r = RHS``."""
    a, b, c = mult.values(t, r)
    e_plus, e_minus, m = density_values(u, ut, ur, r, params, profile)
    w = r ** (params.n - 1)
    return w * (a * e_plus + b * m + c * u * ut), w * (a * m + b * e_minus + c * u * ur)


@dataclass
class ResidualReport:
    """Integrated defect of a multiplier identity over ``K(S, T)``."""

    multiplier: str
    S: float
    T: float
    apex_time: float
    residual: float
    l1_residual: float
    scale: float
    h: float
    dt: float
    slices: int

    @property
    def relative(self) -> float:
        return self.residual / self.scale if self.scale > 0 else 0.0

    def to_dict(self) -> dict:
        return {
            "multiplier": self.multiplier,
            "S": self.S,
            "T": self.T,
            "apex_time": self.apex_time,
            "residual": self.residual,
            "l1_residual": self.l1_residual,
            "scale": self.scale,
            "h": self.h,
            "dt": self.dt,
            "slices": self.slices,
        }


def multiplier_residual(history: RunHistory, mult: Multiplier, cone: ConeRegion) -> ResidualReport:
    """Integrate ``P_t - Q_r - RHS`` over ``K(S, T)``.

    ``P_t`` by second-order differences across retained slices (retain every
    step for full accuracy) and ``Q_r`` by fourth-order differences.
    """
    if abs(cone.apex_time - history.apex) > 1e-12:
        raise DiagnosticsError("region apex does not match the run")
    grid = history.grid
    t, U, UT, UR = _cone_window(history, cone.S, cone.T)
    if t.size < 3:
        raise DiagnosticsError("need at least three slices inside the region")
    r = grid.r[: U.shape[1]]
    tt, rr = t[:, None], r[None, :]
    P, Q = multiplier_fluxes(tt, rr, U, UT, UR, history.params, history.profile, mult)
    Pt = np.gradient(P, t, axis=0, edge_order=2)
    Qr = radial_derivative(Q, grid.h, parity=None)
    rhs = multiplier_rhs(tt, rr, U, UT, UR, history.params, history.profile, mult)
    res = Pt - Qr - rhs
    return ResidualReport(
        multiplier=mult.name,
        S=float(t[0]),
        T=float(t[-1]),
        apex_time=cone.apex_time,
        residual=_space_time_integral(t, grid.h, res),
        l1_residual=_space_time_integral(t, grid.h, np.abs(res)),
        scale=_space_time_integral(t, grid.h, np.abs(Pt) + np.abs(Qr)),
        h=grid.h,
        dt=history.dt,
        slices=int(t.size),
    )


# -- integrated scaling identity ---------------------------------------------

def _slice_term(t, U, UT, UR, r, h, n, integrand):
    rows = integrand(t[:, None], r[None, :], U, UT, UR)
    return radial_integral(rows, h, t, n)


def energyint_decomposition(history: RunHistory, S: float, T: float) -> dict:
    """Every named term of the integrated scaling identity on ``K(S, T)``.

    With ``c = (n-1)/2`` the terms satisfy

        K_uffp + K_f2 + Sigma_T - Sigma_S - K_sin2 - K_usin2u - C = 0

    up to discretisation error; ``residual`` holds the left side.
    """
    region(history, S, T)
    params, profile = history.params, history.profile
    n, alpha = params.n, params.alpha
    c = 0.5 * (n - 1)
    grid = history.grid
    h = grid.h
    t, U, UT, UR = _cone_window(history, S, T)
    r = grid.r[: U.shape[1]]
    S_, T_ = float(t[0]), float(t[-1])

    def volume(fn):
        return _trapezoid(_slice_term(t, U, UT, UR, r, h, n, fn), t)

    def slice_energy_term(i):
        tt = t[i]
        e_plus, _, _ = density_values(U[i], UT[i], UR[i], r, params, profile)
        row = tt * e_plus + r * UT[i] * UR[i] + c * U[i] * UT[i]
        return radial_integral(row, h, tt, n)

    K_uffp = volume(lambda tt, rr, u, ut, ur: c * u * profile.ffp(u) / rr**alpha)
    K_f2 = volume(lambda tt, rr, u, ut, ur: (alpha - (n + 1)) * profile.f_squared(u) / (2 * rr**alpha))
    K_sin2 = volume(lambda tt, rr, u, ut, ur: 0.5 * (n - 1) ** 2 * np.sin(u) ** 2 / rr**2)
    K_usin2u = volume(lambda tt, rr, u, ut, ur: -0.25 * (n - 1) ** 2 * u * np.sin(2 * u) / rr**2)
    sigma_T = slice_energy_term(-1)
    sigma_S = slice_energy_term(0)

    def mantle(tm, g, u, ut, ur):
        with np.errstate(invalid="ignore"):
            e_plus, e_minus, m = density_values(u, ut, ur, tm, params, profile)
            return tm ** (n - 1) * (tm * (e_plus + m) + tm * (e_minus + m) + c * u * (ut + ur))

    C = _mantle_values_integral(history, S_, T_, mantle)
    residual = K_uffp + K_f2 + sigma_T - sigma_S - K_sin2 - K_usin2u - C
    return {
        "S": S_,
        "T": T_,
        "K_uffp": K_uffp,
        "K_f2": K_f2,
        "Sigma_T": sigma_T,
        "Sigma_S": sigma_S,
        "K_sin2": K_sin2,
        "K_usin2u": K_usin2u,
        "C": C,
        "residual": residual,
    }


def _mantle_values_integral(history, S, T, fn):
    t, g, (u, ut, ur) = _mantle_integrand(history)
    i, k = _step_range(t, S, T, history.dt)
    sl = slice(i, k + 1)
    y = fn(t[sl], g[sl], u[sl], ut[sl], ur[sl])
    if not np.all(np.isfinite(y)):
        raise DiagnosticsError(f"mantle samples missing on [{S:.6g}, {T:.6g}]")
    return _trapezoid(y, t[sl])


# -- lemma bounds ------------------------------------------------------------

@dataclass(frozen=True)
class BoundPair:
    """One inequality ``lhs <~ rhs`` evaluated on one region."""

    name: str
    lhs: float
    rhs: float

    @property
    def ratio(self) -> float:
        if self.lhs == 0.0:
            return 0.0
        return self.lhs / self.rhs if self.rhs > 0 else math.inf


BOUND_NAMES = ("surface", "volume", "slice_energy", "slice_uut")


def lemma_bounds(history: RunHistory, S: float, T: float) -> dict:
    """``(lhs, rhs)`` pairs for the mantle, volume and slice bounds.

    ``surface`` and ``volume`` are taken on ``K(S, T)``; the two slice bounds
    on the slice at ``S``.  The right sides are shapes without constants.
    """
    region(history, S, T)
    params, profile = history.params, history.profile
    n, alpha = params.n, params.alpha
    c = 0.5 * (n - 1)
    h = history.grid.h

    def mantle(tm, g, u, ut, ur):
        with np.errstate(invalid="ignore"):
            e_plus, e_minus, m = density_values(u, ut, ur, tm, params, profile)
            return tm ** (n - 1) * (tm * (e_plus + m) + tm * (e_minus + m) + c * np.abs(u * (ut + ur)))

    F_T = flux_to_apex(history, T)
    surface = BoundPair("surface", _mantle_values_integral(history, S, T, mantle),
                        T * F_T + T ** (0.5 * n) * math.sqrt(max(F_T, 0.0)))

    t, U, UT, UR = _cone_window(history, S, T, need_derivatives=False)
    r = history.grid.r[: U.shape[1]]
    rows = (np.sin(U) ** 2 + np.abs(U * np.sin(2 * U))) / r[None, :] ** 2
    vol_rhs = T ** (0.5 * alpha) if n == 2 else T ** (n - 1)
    volume = BoundPair("volume", _space_time_integral(t, h, rows, n), vol_rhs)

    s = cone_state(history, S)
    ur = radial_derivative(s.u, h, parity=-1)
    e_plus, _, _ = density_values(s.u, s.v, ur, history.grid.r, params, profile)
    E_S = radial_integral(e_plus, h, s.t, n)
    lhs_a = radial_integral(s.t * e_plus + history.grid.r * np.abs(s.v * ur), h, s.t, n)
    lhs_b = radial_integral(np.abs(s.u * s.v), h, s.t, n)
    rhs_b = s.t ** (0.25 * (alpha + 2)) * E_S if n == 2 else s.t ** (0.5 * n) * math.sqrt(E_S)
    return {
        "surface": surface,
        "volume": volume,
        "slice_energy": BoundPair("slice_energy", lhs_a, s.t * E_S),
        "slice_uut": BoundPair("slice_uut", lhs_b, rhs_b),
    }


@dataclass
class BoundFit:
    """Fitted constants of one bound across shrinking scales."""

    name: str
    scales: list
    lhs: list
    rhs: list
    ratios: list
    constants: list
    slope: float

    @property
    def growth(self) -> float:
        """Spread of the fitted constant, ``C_last / C_first``."""
        first, last = self.constants[0], self.constants[-1]
        if first == 0.0:
            return 1.0 if last == 0.0 else math.inf
        return last / first

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "scales": list(self.scales),
            "lhs": list(self.lhs),
            "rhs": list(self.rhs),
            "ratios": list(self.ratios),
            "constants": list(self.constants),
            "growth": self.growth,
            "slope": self.slope,
        }


def fit_lemma_constants(history: RunHistory, scales) -> dict:
    """Fit the constant of every bound across ``scales`` (largest first).

    At each scale ``T`` the volume and surface bounds use ``K(S0, T)`` with
    ``S0`` the smallest recorded time, and the slice bounds use ``S = T``.
    The fitted constant is the running maximum of ``lhs/rhs`` from the
    largest scale down, so it stays bounded exactly when no growth trend
    appears as the scale shrinks.
    """
    scales = sorted((float(s) for s in scales), reverse=True)
    s0 = smallest_time(history)
    rows = {name: [] for name in BOUND_NAMES}
    for T in scales:
        mantle = lemma_bounds(history, s0, T)
        at_slice = lemma_bounds(history, T, T)
        for name in BOUND_NAMES:
            rows[name].append(at_slice[name] if name.startswith("slice") else mantle[name])
    fits = {}
    for name, pairs in rows.items():
        ratios = [p.ratio for p in pairs]
        constants = list(np.maximum.accumulate(ratios))
        with np.errstate(divide="ignore", invalid="ignore"):
            lr = np.log(np.asarray(ratios, dtype=float))
        good = np.isfinite(lr)
        slope = float(np.polyfit(np.log(np.asarray(scales)[good]), lr[good], 1)[0]) if good.sum() >= 2 else 0.0
        fits[name] = BoundFit(name, scales, [p.lhs for p in pairs], [p.rhs for p in pairs],
                              ratios, [float(c) for c in constants], slope)
    return fits


# -- probes near the apex ----------------------------------------------------

def tip_energy(state: FieldState, T: float, params: ModelParams,
               profile: NonlinearityProfile) -> float:
    """Integral of ``(1 - r/T)(u_t - u_r)^2 + (u_t + u_r)^2 + sin^2 u / r^2
    + f(u)^2 / r^alpha`` against ``r^(n-1) dr`` over ``0 <= r <= T``.

    ``state.v`` is read as ``u_t`` in cone time.
    """
    _check_within(state.grid, T)
    if T <= 0:
        return 0.0
    r = state.grid.r
    u, ut = state.u, state.v
    ur = radial_derivative(u, state.grid.h, parity=-1)
    rows = ((1.0 - r / T) * (ut - ur) ** 2 + (ut + ur) ** 2
            + np.sin(u) ** 2 / r**2 + profile.f_squared(u) / r**params.alpha)
    return radial_integral(rows, state.grid.h, T, params.n)


def tip_energy_at(history: RunHistory, T: float) -> float:
    s = cone_state(history, T)
    return tip_energy(s, s.t, history.params, history.profile)


def sup_probe(history: RunHistory, T: float) -> float:
    """``sup |u|`` over retained slices inside ``K(0, T)``."""
    r = history.grid.r
    best = 0.0
    for s, t in zip(history.slices, cone_times(history)):
        if -1e-12 <= t <= T + 1e-12:
            inside = r <= t
            if np.any(inside):
                best = max(best, float(np.max(np.abs(s.u[inside]))))
    return best


def apex_probes(history: RunHistory, scales) -> dict:
    """Tip energy, sup probe and flux at each scale (largest first)."""
    scales = sorted((float(s) for s in scales), reverse=True)
    return {
        "scales": scales,
        "tip_energy": [tip_energy_at(history, T) for T in scales],
        "sup_probe": [sup_probe(history, T) for T in scales],
        "flux": flux_decay(history, scales),
    }


def convergence_orders(values) -> list:
    """Observed orders ``log2(|x_k| / |x_{k+1}|)`` for a refinement sequence."""
    return [float(o) for o in observed_orders(np.abs(np.asarray(values, dtype=float)))]
