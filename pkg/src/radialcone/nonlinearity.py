"""Nonlinearity profiles ``f``, the Bogomolny functional and hypothesis checks.

A profile bundles ``f`` and ``f'`` as vectorised callables.  The equation only
ever needs the product ``f f'`` (in the potential force) and ``f**2`` (in the
energy), so both are exposed as helpers.  Built-in profiles also carry an
integer code that the compiled kernels use to evaluate ``f f'`` in C.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ProfileError, QuadratureError

# kernel codes, mirrored in _ckernels.pyx and _pykernels.py
CODE_GENERIC = -1
CODE_LINEAR = 0
CODE_CUBIC = 1
CODE_ADKINS_NAPPI = 2
CODE_POWER = 3
CODE_SINE = 4

QUAD_ABS_TOL = 1e-10
QUAD_REL_TOL = 1e-8
_QUAD_MAX_DEPTH = 60


@dataclass(frozen=True)
class ModelParams:
    """Spatial dimension ``n`` and singular-potential exponent ``alpha``."""

    n: int
    alpha: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"dimension n must be an integer >= 2, got {self.n!r}")
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ValueError(f"alpha must be a positive finite number, got {self.alpha!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def alpha_threshold(self) -> float:
        return float(max(2 * (self.n - 1), self.n + 1))


@dataclass(frozen=True)
class NonlinearityProfile:
    name: str
    f: Callable
    f_prime: Callable
    closed_form_I: Optional[Callable] = None
    params: tuple = ()
    kernel_code: int = CODE_GENERIC
    kernel_param: float = 0.0

    def ffp(self, u):
        return self.f(u) * self.f_prime(u)

    def f_squared(self, u):
        fu = self.f(u)
        return fu * fu

    def describe(self) -> dict:
        return {"name": self.name, "params": dict(self.params)}


def _linear():
    return NonlinearityProfile(
        name="linear",
        f=lambda u: u * 1.0,
        f_prime=lambda u: np.ones_like(u, dtype=float) if np.ndim(u) else 1.0,
        closed_form_I=lambda w: 0.5 * w * np.abs(w),
        kernel_code=CODE_LINEAR,
    )


def _cubic():
    return NonlinearityProfile(
        name="cubic",
        f=lambda u: u * u * u,
        f_prime=lambda u: 3.0 * u * u,
        closed_form_I=lambda w: 0.25 * np.sign(w) * w**4,
        kernel_code=CODE_CUBIC,
    )


def _adkins_nappi():
    # f(u) = u - sin u cos u, f'(u) = 1 - cos 2u written as 2 sin^2 u (no
    # cancellation at small u); f >= 0 for u >= 0 and f is odd
    return NonlinearityProfile(
        name="adkins_nappi",
        f=lambda u: u - np.sin(u) * np.cos(u),
        f_prime=lambda u: 2.0 * np.sin(u) ** 2,
        closed_form_I=_adkins_nappi_I,
        kernel_code=CODE_ADKINS_NAPPI,
    )


def _adkins_nappi_I(w):
    # w^2 - sin^2 w cancels for small w; use its Taylor series there
    w = np.asarray(w, dtype=float)
    w2 = w * w
    series = w2 * w2 * (1.0 / 3.0 - w2 * (2.0 / 45.0 - w2 / 315.0))
    direct = w2 - np.sin(w) ** 2
    out = 0.5 * np.sign(w) * np.where(np.abs(w) < 1e-2, series, direct)
    return out if out.ndim else float(out)


def _power(exponent=3.0):
    p = float(exponent)
    if not p >= 1.0:
        raise ProfileError(f"power profile needs exponent >= 1, got {exponent!r}")
    return NonlinearityProfile(
        name="power",
        f=lambda u: np.sign(u) * np.abs(u) ** p,
        f_prime=lambda u: p * np.abs(u) ** (p - 1.0),
        closed_form_I=lambda w: np.sign(w) * np.abs(w) ** (p + 1.0) / (p + 1.0),
        params=(("exponent", p),),
        kernel_code=CODE_POWER,
        kernel_param=p,
    )


def _sine():
    # no closed form on purpose: exercises the quadrature path
    return NonlinearityProfile(
        name="sine",
        f=lambda u: np.sin(u),
        f_prime=lambda u: np.cos(u),
        kernel_code=CODE_SINE,
    )


_BUILTINS = {
    "linear": _linear,
    "cubic": _cubic,
    "adkins_nappi": _adkins_nappi,
    "power": _power,
    "sine": _sine,
}

BUILTIN_NAMES = tuple(_BUILTINS)


def get_profile(name: str, **params) -> NonlinearityProfile:
    """Look up a built-in profile by name, passing scalar parameters through."""
    try:
        factory = _BUILTINS[name]
    except KeyError:
        raise ProfileError(
            f"unknown profile {name!r}; choose one of {', '.join(BUILTIN_NAMES)}"
        ) from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise ProfileError(f"bad parameters for profile {name!r}: {exc}") from None


def eval_pair(profile: NonlinearityProfile, u: float) -> tuple[float, float]:
    """Return ``(f(u), f'(u))`` as floats."""
    if not math.isfinite(u):
        raise ValueError(f"u must be finite, got {u!r}")
    fu = float(profile.f(u))
    fpu = float(profile.f_prime(u))
    if not (math.isfinite(fu) and math.isfinite(fpu)):
        raise ProfileError(f"profile {profile.name!r} is non-finite at u={u!r}")
    return fu, fpu


def adaptive_simpson(func, a, b, abs_tol=QUAD_ABS_TOL, rel_tol=QUAD_REL_TOL):
    """Integrate a scalar function over ``[a, b]`` by adaptive Simpson.

    Panels are accepted when the Richardson difference falls below the local
    share of ``max(abs_tol, rel_tol * |I|)``.
    """
    if a == b:
        return 0.0
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0

    # coarse estimate fixes the relative tolerance scale
    xs = np.linspace(a, b, 33)
    ys = np.array([func(x) for x in xs], dtype=float)
    coarse = (b - a) / 96.0 * (ys[0] + ys[-1] + 4 * ys[1:-1:2].sum() + 2 * ys[2:-1:2].sum())
    tol = max(abs_tol, rel_tol * abs(coarse))

    total = 0.0
    fa, fm, fb = func(a), func(0.5 * (a + b)), func(b)
    whole = (b - a) / 6.0 * (fa + 4 * fm + fb)
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    while stack:
        lo, hi, flo, fmid, fhi, est, eps, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = func(lm), func(rm)
        left = (mid - lo) / 6.0 * (flo + 4 * flm + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4 * frm + fhi)
        delta = left + right - est
        if abs(delta) <= 15.0 * eps:
            total += left + right + delta / 15.0
        elif depth >= _QUAD_MAX_DEPTH:
            raise QuadratureError(
                f"adaptive Simpson did not converge on [{lo!r}, {hi!r}]"
            )
        else:
            stack.append((mid, hi, fmid, frm, fhi, right, 0.5 * eps, depth + 1))
            stack.append((lo, mid, flo, flm, fmid, left, 0.5 * eps, depth + 1))
    if not math.isfinite(total):
        raise QuadratureError("non-finite integrand in adaptive Simpson")
    return sign * total


def bogomolny(profile: NonlinearityProfile, w: float) -> float:
    """Oriented integral of ``|f|`` from 0 to ``w``."""
    if not math.isfinite(w):
        raise ValueError(f"w must be finite, got {w!r}")
    if w == 0:
        return 0.0
    if profile.closed_form_I is not None:
        return float(profile.closed_form_I(w))
    return adaptive_simpson(lambda v: abs(float(profile.f(v))), 0.0, float(w))


def bogomolny_array(profile: NonlinearityProfile, w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if profile.closed_form_I is not None:
        return np.asarray(profile.closed_form_I(w), dtype=float)
    return np.array([bogomolny(profile, float(x)) for x in w.ravel()]).reshape(w.shape)


@dataclass
class HypothesisReport:
    """Outcome of checking the continuity-theorem hypotheses on ``(f, n, alpha)``.

    ``alpha``, ``f(0) = 0`` and ``f'(0) != 0`` are decided exactly.  The sign
    condition and the divergence of ``I`` can only be probed on samples.
    """

    alpha_ok: bool
    alpha_threshold: float
    f_zero_ok: bool
    f_prime_zero_ok: bool
    sign_condition_ok: bool
    sign_witness: Optional[float]
    I_divergence_ok: bool
    I_growth_ratio: float
    sample_range: tuple
    samples: int
    sampled_checks: tuple = field(default=("sign_condition", "I_divergence"))

    @property
    def exact_ok(self) -> bool:
        return self.alpha_ok and self.f_zero_ok and self.f_prime_zero_ok

    @property
    def sampled_ok(self) -> bool:
        return self.sign_condition_ok and self.I_divergence_ok

    @property
    def all_ok(self) -> bool:
        return self.exact_ok and self.sampled_ok

    def to_dict(self) -> dict:
        return {
            "alpha_ok": self.alpha_ok,
            "alpha_threshold": self.alpha_threshold,
            "f_zero_ok": self.f_zero_ok,
            "f_prime_zero_ok": self.f_prime_zero_ok,
            "sign_condition_ok": self.sign_condition_ok,
            "sign_witness": self.sign_witness,
            "I_divergence_ok": self.I_divergence_ok,
            "I_growth_ratio": self.I_growth_ratio,
            "sample_range": list(self.sample_range),
            "samples": self.samples,
            "sampled_checks": list(self.sampled_checks),
        }

    def render(self) -> str:
        def mark(ok):
            return "ok  " if ok else "FAIL"

        lines = [
            f"[{mark(self.alpha_ok)}] alpha >= max(2(n-1), n+1) = {self.alpha_threshold:g}",
            f"[{mark(self.f_zero_ok)}] f(0) = 0",
            f"[{mark(self.f_prime_zero_ok)}] f'(0) != 0",
            f"[{mark(self.sign_condition_ok)}] u f(u) f'(u) >= 0 (sampled)"
            + ("" if self.sign_witness is None else f"  witness u = {self.sign_witness:.6g}"),
            f"[{mark(self.I_divergence_ok)}] |I(w)| -> inf (sampled, I(W)/I(W/2) = "
            f"{self.I_growth_ratio:.4g})",
        ]
        return "\n".join(lines)


def check_hypotheses(
    profile: NonlinearityProfile,
    params: ModelParams,
    sample_range=(-10.0, 10.0),
    samples: int = 2001,
) -> HypothesisReport:
    lo, hi = float(sample_range[0]), float(sample_range[1])
    if not lo <= 0.0 <= hi or lo == hi:
        raise ValueError(f"sample_range must contain 0, got {sample_range!r}")
    if samples < 100:
        raise ValueError(f"need at least 100 samples, got {samples}")

    threshold = params.alpha_threshold
    f0, fp0 = eval_pair(profile, 0.0)

    us = np.linspace(lo, hi, samples)
    # scan outward from the origin so the reported witness is the smallest |u|
    order = np.argsort(np.abs(us), kind="stable")
    us = us[order]
    with np.errstate(all="ignore"):
        vals = us * profile.ffp(us)
    bad = np.flatnonzero(~(vals >= 0.0))
    witness = float(us[bad[0]]) if bad.size else None

    top = hi if hi > 0 else lo
    i_full = abs(bogomolny(profile, top))
    i_half = abs(bogomolny(profile, 0.5 * top))
    ratio = i_full / i_half if i_half > 0 else (math.inf if i_full > 0 else 0.0)

    return HypothesisReport(
        alpha_ok=bool(params.alpha >= threshold),
        alpha_threshold=threshold,
        f_zero_ok=(f0 == 0.0),
        f_prime_zero_ok=(fp0 != 0.0),
        sign_condition_ok=witness is None,
        sign_witness=witness,
        I_divergence_ok=bool(ratio > 1.2),
        I_growth_ratio=float(ratio),
        sample_range=(lo, hi),
        samples=int(samples),
    )
