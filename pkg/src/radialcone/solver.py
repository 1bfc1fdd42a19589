"""Method-of-lines solver for the singular radial wave equation.

Solves

    u_tt = u_rr + (n-1)/r u_r - (n-1)/2 sin(2u)/r^2 - f(u) f'(u)/r^alpha  (+ F)

on the staggered grid ``r_j = (j + 1/2) h`` with an odd ghost cell at the
origin (so ``u(t, 0) = 0`` to the order of the scheme), homogeneous Dirichlet
data at ``r = R`` and classical RK4 in time.  The solver runs forward in lab
time; the diagnostics module maps lab time onto the backward cone of an apex.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from . import _numerics, kernels
from .errors import BlowUpSuspected, CflViolation, NonFinite
from .nonlinearity import ModelParams, NonlinearityProfile

CLOSURES = ("odd", "even")


@dataclass(frozen=True)
class RadialGrid:
    """Cell-centred grid on ``[0, R]`` with ``J`` cells of width ``h``."""

    h: float
    J: int

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"cell width must be positive, got {self.h!r}")
        if int(self.J) != self.J or self.J < 8:
            raise ValueError(f"need an integer cell count >= 8, got {self.J!r}")
        object.__setattr__(self, "J", int(self.J))
        object.__setattr__(self, "h", float(self.h))

    @classmethod
    def from_radius(cls, R: float, h: float) -> "RadialGrid":
        J = int(round(R / h))
        if abs(J * h - R) > 1e-9 * R:
            raise ValueError(f"R={R!r} is not a whole number of cells of width {h!r}")
        return cls(h=h, J=J)

    @property
    def R(self) -> float:
        return self.J * self.h

    @property
    def r(self) -> np.ndarray:
        return _centres(self.h, self.J)

    def covers(self, radius: float) -> bool:
        return radius < self.R


@lru_cache(maxsize=64)
def _centres(h, J):
    r = (np.arange(J) + 0.5) * h
    r.setflags(write=False)
    return r


@lru_cache(maxsize=64)
def _coefficients(h, J, n, alpha):
    r = _centres(h, J)
    faces = np.arange(J + 1) * h
    arrays = (
        (n - 1) / r,
        (n - 1) / (2.0 * r * r),
        r ** (-alpha),
        r ** (n - 1),
        faces ** (n - 1),
    )
    for a in arrays:
        a.setflags(write=False)
    return arrays


def coefficients(grid: RadialGrid, params: ModelParams):
    """``(c1, c2, ca, w_centre, w_face)`` for the kernels."""
    return _coefficients(grid.h, grid.J, params.n, params.alpha)


@dataclass
class FieldState:
    """One time slice: ``u`` and ``v = u_t`` on the grid centres."""

    t: float
    u: np.ndarray
    v: np.ndarray
    grid: RadialGrid

    def __post_init__(self):
        self.u = np.ascontiguousarray(self.u, dtype=float)
        self.v = np.ascontiguousarray(self.v, dtype=float)
        if self.u.shape != (self.grid.J,) or self.v.shape != (self.grid.J,):
            raise ValueError("state arrays must match the grid size")

    def origin_value(self) -> float:
        """Linear extrapolation of ``u`` through ``r_0, r_1`` to ``r = 0``."""
        return 0.5 * (3.0 * self.u[0] - self.u[1])

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.u).all() and np.isfinite(self.v).all())

    def sup(self) -> float:
        return float(np.max(np.abs(self.u)))

    def copy(self) -> "FieldState":
        return FieldState(self.t, self.u.copy(), self.v.copy(), self.grid)


def origin_tolerance(state: FieldState) -> float:
    # smooth odd data extrapolate to O(h^3); allow generous slack
    return max(1e-12, state.grid.h ** 2 * state.sup())


@dataclass(frozen=True)
class SolverConfig:
    cfl: float = 0.5
    t0: float = 0.0
    t_end: float = 1.0
    snapshot_stride: int = 1
    blowup_threshold: Optional[float] = None
    apex: Optional[float] = None
    dt: Optional[float] = None
    closure: str = "odd"
    energy_jump: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.cfl <= 0.9:
            raise ValueError(f"cfl must lie in (0, 0.9], got {self.cfl!r}")
        if not self.t_end > self.t0:
            raise ValueError("t_end must exceed t0")
        if int(self.snapshot_stride) != self.snapshot_stride or self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be a positive integer")
        if self.closure not in CLOSURES:
            raise ValueError(f"closure must be one of {CLOSURES}")

    @property
    def apex_time(self) -> float:
        return self.t_end if self.apex is None else float(self.apex)


def default_blowup_threshold(initial_sup: float) -> float:
    return 50.0 * initial_sup + 10.0


def potential_stiffness(profile: NonlinearityProfile, u_scale: float) -> float:
    """Largest ``|d(f f')/du|`` over ``[-2U, 2U]`` (sampled, includes ``u = 0``)."""
    U = max(2.0 * u_scale, 1e-3)
    us = np.linspace(-U, U, 401)
    eps = 1e-6 * max(U, 1.0)
    with np.errstate(all="ignore"):
        slope = (profile.ffp(us + eps) - profile.ffp(us - eps)) / (2.0 * eps)
    slope = slope[np.isfinite(slope)]
    return float(np.max(np.abs(slope))) if slope.size else 0.0


def stable_dt(grid: RadialGrid, params: ModelParams, profile: NonlinearityProfile,
              cfl: float, u_scale: float = 0.0) -> float:
    """Largest step used by :func:`evolve`.

    ``cfl * h`` unless the singular potential ``f f'/r^alpha`` is stiffer than
    the wave part at the first cell, in which case the step shrinks by the
    square root of the ratio of the two stiffness estimates (Gershgorin bound
    ``4n/h^2`` for the discrete wave operator near the origin).
    """
    h = grid.h
    r0 = 0.5 * h
    kappa = potential_stiffness(profile, u_scale)
    wave = 4.0 * params.n / h**2
    potential = kappa * r0 ** (-params.alpha)
    if potential <= wave:
        return cfl * h
    return cfl * h * math.sqrt(wave / potential)


def spatial_operator(state: FieldState, grid: RadialGrid, params: ModelParams,
                     profile: NonlinearityProfile, closure: str = "odd",
                     backend: Optional[str] = None) -> np.ndarray:
    """``L[u]`` so that unforced evolution reads ``u_tt = L[u]``."""
    c1, c2, ca, _, _ = coefficients(grid, params)
    impl = kernels.backend_for(profile, backend)
    out = impl.spatial_operator(
        state.u, grid.h, c1, c2, ca, profile.kernel_code, profile.kernel_param,
        closure == "odd", ffp=profile.ffp,
    )
    out = np.asarray(out)
    if not np.isfinite(out).all():
        raise NonFinite("spatial operator produced non-finite values")
    return out


def discrete_energy(state: FieldState, params: ModelParams, profile: NonlinearityProfile,
                    backend: Optional[str] = None) -> float:
    grid = state.grid
    c1, c2, ca, wc, wf = coefficients(grid, params)
    impl = kernels.backend_for(profile, backend)
    return float(impl.discrete_energy(
        state.u, state.v, grid.h, wc, wf, c2, ca, profile.kernel_code,
        profile.kernel_param, fsq=profile.f_squared,
    ))


def _advance(state, dt, grid, params, profile, forcing_arrays, closure, backend):
    c1, c2, ca, _, _ = coefficients(grid, params)
    impl = kernels.backend_for(profile, backend)
    u, v = impl.rk4_step(
        state.u, state.v, dt, grid.h, c1, c2, ca, profile.kernel_code,
        profile.kernel_param, closure == "odd", forcing_arrays, ffp=profile.ffp,
    )
    return FieldState(state.t + dt, u, v, grid)


def step(state: FieldState, dt: float, grid: RadialGrid, params: ModelParams,
         profile: NonlinearityProfile, forcing: Optional[Callable] = None,
         cfl: float = 0.5, closure: str = "odd", backend: Optional[str] = None) -> FieldState:
    """Advance one RK4 step; ``forcing(t, r)`` adds a source to ``u_tt``."""
    if dt > cfl * grid.h * (1 + 1e-12):
        raise CflViolation(f"dt={dt:.6g} exceeds cfl*h={cfl * grid.h:.6g}")
    arrays = None
    if forcing is not None:
        r = grid.r
        arrays = (forcing(state.t, r), forcing(state.t + 0.5 * dt, r), forcing(state.t + dt, r))
    new = _advance(state, dt, grid, params, profile, arrays, closure, backend)
    if not new.is_finite():
        raise NonFinite(f"non-finite field after step to t={new.t:.6g}", last_good=state)
    return new


@dataclass
class RunHistory:
    """Retained slices plus per-step scalar series of one evolution.

    ``series`` holds one entry per step (step 0 is the initial data):
    ``step``, ``t``, ``energy``, ``sup_u`` and the cone-boundary samples
    ``cone_r``, ``cone_u``, ``cone_v``, ``cone_ur`` taken at radius
    ``apex - t`` by cubic interpolation (NaN where the cone is not on the
    grid or has closed).
    """

    grid: RadialGrid
    params: ModelParams
    profile: NonlinearityProfile
    config: SolverConfig
    dt: float
    slices: list = field(default_factory=list)
    series: dict = field(default_factory=dict)
    forced: bool = False
    blowup_threshold: float = math.inf

    @property
    def apex(self) -> float:
        return self.config.apex_time

    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.slices])

    def stack(self):
        """``(times, U, V)`` with one row per retained slice."""
        return (
            self.times(),
            np.array([s.u for s in self.slices]),
            np.array([s.v for s in self.slices]),
        )


_SERIES_KEYS = ("step", "t", "energy", "sup_u", "cone_r", "cone_u", "cone_v", "cone_ur")


def _gather_odd(a, idx):
    """Values at (possibly ghost) indices: odd reflection at both ends."""
    J = a.shape[0]
    inner = np.clip(idx, 0, J - 1)
    left = np.clip(-idx - 1, 0, J - 1)
    right = np.clip(2 * J - 1 - idx, 0, J - 1)
    return np.where(idx < 0, -a[left], np.where(idx >= J, -a[right], a[inner]))


def _lagrange4(w):
    # cubic Lagrange weights for nodes at offsets -1, 0, 1, 2 evaluated at w
    return np.array([
        -w * (w - 1.0) * (w - 2.0) / 6.0,
        (w + 1.0) * (w - 1.0) * (w - 2.0) / 2.0,
        -(w + 1.0) * w * (w - 2.0) / 2.0,
        (w + 1.0) * w * (w - 1.0) / 6.0,
    ])


def cone_sample(state: FieldState, radius: float):
    """``(u, u_t, u_r)`` at ``radius`` by cubic interpolation (lab time).

    Values beyond either end come from the odd reflections that the solver
    uses; ``u_r`` at the four interpolation nodes uses the fourth-order
    centred stencil on the same extension.
    """
    grid = state.grid
    if not 0.0 < radius <= grid.r[-1]:
        return math.nan, math.nan, math.nan
    h = grid.h
    x = radius / h - 0.5
    j = int(math.floor(x))
    weights = _lagrange4(x - j)
    idx = np.arange(j - 3, j + 5)
    uu = _gather_odd(state.u, idx)
    vv = _gather_odd(state.v, idx)
    ur = (uu[:-4] - 8.0 * uu[1:-3] + 8.0 * uu[3:-1] - uu[4:]) / (12.0 * h)
    return (
        float(weights @ uu[2:6]),
        float(weights @ vv[2:6]),
        float(weights @ ur),
    )


def evolve(config: SolverConfig, data: FieldState, grid: RadialGrid, params: ModelParams,
           profile: NonlinearityProfile, forcing: Optional[Callable] = None,
           record_series: bool = True, backend: Optional[str] = None) -> RunHistory:
    """Evolve ``data`` from ``config.t0`` to ``config.t_end``.

    Raises :class:`BlowUpSuspected` when ``sup|u|`` crosses the threshold, the
    discrete energy jumps by more than ``energy_jump`` in one unforced step, or
    a non-finite value appears; the exception carries the last good state.
    ``record_series=False`` skips the cone samples and, for forced runs, the
    energy series (recorded as NaN).
    """
    duration = config.t_end - config.t0
    dt_max = stable_dt(grid, params, profile, config.cfl, data.sup() if data.is_finite() else 0.0)
    if config.dt is not None:
        if config.dt > dt_max * (1 + 1e-12):
            raise CflViolation(
                f"configured dt={config.dt:.6g} exceeds the stable step {dt_max:.6g}"
            )
        dt_target = config.dt
    else:
        dt_target = dt_max
    nsteps = max(1, int(math.ceil(duration / dt_target - 1e-9)))
    dt = duration / nsteps

    if data.is_finite() and abs(data.origin_value()) > origin_tolerance(data):
        raise ValueError(
            f"initial data violate u(t,0)=0: extrapolated origin value {data.origin_value():.3g}"
        )

    threshold = config.blowup_threshold
    if threshold is None:
        threshold = default_blowup_threshold(data.sup() if data.is_finite() else 0.0)
    state = FieldState(config.t0, data.u, data.v, grid)
    history = RunHistory(grid, params, profile, config, dt, forced=forcing is not None,
                         blowup_threshold=float(threshold))
    series = {k: [] for k in _SERIES_KEYS}
    apex = config.apex_time
    r = grid.r

    def record(k, s, energy):
        series["step"].append(k)
        series["t"].append(s.t)
        series["energy"].append(energy)
        series["sup_u"].append(s.sup())
        if record_series:
            radius = apex - s.t
            cu, cv, cur = cone_sample(s, radius)
            series["cone_r"].append(radius)
            series["cone_u"].append(cu)
            series["cone_v"].append(cv)
            series["cone_ur"].append(cur)

    def finish():
        history.series = {k: np.asarray(v, dtype=float if k != "step" else int)
                          for k, v in series.items() if v or k in ("step", "t")}

    track_energy = record_series or forcing is None
    energy = (discrete_energy(state, params, profile, backend)
              if track_energy and data.is_finite() else math.nan)
    record(0, state, energy)
    history.slices.append(state.copy())

    f_next = forcing(state.t, r) if forcing is not None else None
    for k in range(1, nsteps + 1):
        arrays = None
        if forcing is not None:
            f_now = f_next
            f_half = forcing(state.t + 0.5 * dt, r)
            f_next = forcing(state.t + dt, r) if k < nsteps else forcing(config.t_end, r)
            arrays = (f_now, f_half, f_next)
        new = _advance(state, dt, grid, params, profile, arrays, config.closure, backend)
        if k == nsteps:
            new.t = config.t_end
        if not new.is_finite():
            finish()
            raise NonFinite(f"non-finite field at step {k}", last_good=state, history=history)
        new_energy = discrete_energy(new, params, profile, backend) if track_energy else math.nan
        sup = new.sup()
        reason = None
        if sup > threshold:
            reason = f"sup|u|={sup:.6g} exceeds threshold {threshold:.6g}"
        elif (forcing is None and energy > 0
              and abs(new_energy - energy) > config.energy_jump * energy):
            reason = f"energy jumped from {energy:.6g} to {new_energy:.6g} in one step"
        if reason is not None:
            finish()
            raise BlowUpSuspected(f"step {k}, t={new.t:.6g}: {reason}",
                                  last_good=state, history=history, reason=reason)
        state, energy = new, new_energy
        record(k, state, energy)
        if k % config.snapshot_stride == 0 or k == nsteps:
            history.slices.append(state.copy())
    finish()
    return history


def _smooth_cutoff(s):
    """C-infinity function equal to 1 for ``s <= 1/2`` and 0 for ``s >= 1``."""
    x = np.clip(2.0 * (1.0 - s), 0.0, 1.0)  # 1 at s=1/2, 0 at s=1
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        b = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
    return a / (a + b)


def make_bump(amplitude: float, center: float, width: float, grid: RadialGrid,
              cutoff: float = 3.0, velocity: str = "zero", t: float = 0.0) -> FieldState:
    """Smooth compactly supported data ``a r exp(-((r-c)/w)^2)``.

    The Gaussian is multiplied by a C-infinity cutoff so the support is
    exactly ``[c - cutoff*w, c + cutoff*w]``.  ``velocity`` is ``"zero"`` or
    ``"outgoing"`` (``u_t = -u_r``).
    """
    if not width > 0 or not cutoff > 0:
        raise ValueError("width and cutoff must be positive")
    outer = center + cutoff * width
    if outer >= grid.R:
        raise ValueError(f"bump support reaches r={outer:.6g}, beyond R={grid.R:.6g}")
    r = grid.r
    s = np.abs(r - center) / (cutoff * width)
    u = amplitude * r * np.exp(-(((r - center) / width) ** 2)) * _smooth_cutoff(s)
    if velocity == "zero":
        v = np.zeros_like(u)
    elif velocity == "outgoing":
        v = -_numerics.radial_derivative(u, grid.h, parity=-1)
    else:
        raise ValueError(f"unknown velocity choice {velocity!r}")
    return FieldState(t, u, v, grid)


def zero_state(grid: RadialGrid, t: float = 0.0) -> FieldState:
    return FieldState(t, np.zeros(grid.J), np.zeros(grid.J), grid)


def with_time(state: FieldState, t: float) -> FieldState:
    return replace(state, t=t)
