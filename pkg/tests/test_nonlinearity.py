import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
import sympy as sp
from scipy.integrate import quad

from radialcone.errors import ProfileError
from radialcone.nonlinearity import (
    BUILTIN_NAMES, ModelParams, adaptive_simpson, bogomolny, bogomolny_array, check_hypotheses,
    eval_pair, get_profile,
)

finite = st.floats(-20, 20, allow_nan=False)


def test_eval_pair_examples():
    an = get_profile("adkins_nappi")
    assert eval_pair(an, 0.0) == (0.0, 0.0)
    fu, fpu = eval_pair(an, math.pi / 2)
    assert fu == pytest.approx(math.pi / 2, abs=1e-15)
    assert fpu == pytest.approx(2.0, abs=1e-15)
    assert eval_pair(get_profile("linear"), 3.0) == (3.0, 1.0)


def test_eval_pair_rejects_non_finite():
    with pytest.raises(ValueError):
        eval_pair(get_profile("linear"), math.nan)


def test_unknown_profile_and_bad_parameters():
    with pytest.raises(ProfileError):
        get_profile("quartic")
    with pytest.raises(ProfileError):
        get_profile("linear", exponent=2.0)
    with pytest.raises(ProfileError):
        get_profile("power", exponent=0.5)


# max |f'''|/6 on [-10, 10]: the truncation constant of the central difference
_FD_CONSTANT = {"linear": 0.0, "cubic": 1.0, "adkins_nappi": 4 / 6, "power": 1.0, "sine": 1 / 6}


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_f_prime_matches_central_differences(name):
    prof = get_profile(name)
    u = np.random.default_rng(2024).uniform(-10, 10, 1000)
    k = 1e-4
    fd = (prof.f(u + k) - prof.f(u - k)) / (2 * k)
    rounding = 4e-16 * (1 + np.abs(prof.f(u))) / k
    assert np.all(np.abs(prof.f_prime(u) - fd) <= _FD_CONSTANT[name] * k * k + rounding)


@pytest.mark.parametrize("name", BUILTIN_NAMES)
@given(u=finite)
@settings(max_examples=40, deadline=None)
def test_builtins_are_odd(name, u):
    prof = get_profile(name)
    assert float(prof.f(-u)) == pytest.approx(-float(prof.f(u)), abs=1e-12)


def test_bogomolny_examples():
    lin = get_profile("linear")
    for name in BUILTIN_NAMES:
        assert bogomolny(get_profile(name), 0.0) == 0.0
    assert bogomolny(lin, 2.0) == 2.0
    assert bogomolny(lin, -2.0) == -2.0
    assert bogomolny(get_profile("adkins_nappi"), math.pi) == pytest.approx(math.pi**2 / 2, rel=1e-14)


@pytest.mark.parametrize("name", BUILTIN_NAMES)
@pytest.mark.parametrize("w", [-7.3, -1.0, 0.4, 2.5, 9.0])
def test_bogomolny_against_scipy_quad(name, w):
    prof = get_profile(name)
    ref, _ = quad(lambda v: abs(float(prof.f(v))), 0.0, w, limit=200, epsabs=1e-12, epsrel=1e-12)
    assert bogomolny(prof, w) == pytest.approx(ref, rel=1e-7, abs=1e-9)


nonzero = st.floats(1e-30, 20) | st.floats(-20, -1e-30)


@pytest.mark.parametrize("name", BUILTIN_NAMES)
@given(w=st.just(0.0) | nonzero)
@settings(max_examples=40, deadline=None)
def test_bogomolny_sign(name, w):
    value = bogomolny(get_profile(name), w) * w
    assert value > 0.0 if w != 0 else value == 0.0


@pytest.mark.parametrize("name", BUILTIN_NAMES)
@given(a=st.floats(0, 10), b=st.floats(0, 10))
@settings(max_examples=40, deadline=None)
def test_bogomolny_monotone_in_modulus(name, a, b):
    lo, hi = sorted((a, b))
    prof = get_profile(name)
    assert abs(bogomolny(prof, hi)) >= abs(bogomolny(prof, lo)) - 1e-9


def test_adkins_nappi_small_w_series():
    an = get_profile("adkins_nappi")
    for w in (1e-8, 3e-3, 9.9e-3, 1.01e-2, 0.05):
        x = sp.Float(w, 50)
        exact = float((x**2 - sp.sin(x) ** 2) / 2)
        assert bogomolny(an, w) == pytest.approx(exact, rel=1e-11)
        assert bogomolny(an, -w) == -bogomolny(an, w)


def test_bogomolny_array_matches_scalar():
    w = np.linspace(-4, 4, 17)
    sine = get_profile("sine")
    assert np.allclose(bogomolny_array(sine, w), [bogomolny(sine, x) for x in w])


def test_adaptive_simpson_orientation():
    assert adaptive_simpson(math.cos, 0.0, 1.0) == pytest.approx(math.sin(1.0), rel=1e-10)
    assert adaptive_simpson(math.cos, 1.0, 0.0) == pytest.approx(-math.sin(1.0), rel=1e-10)


def test_hypotheses_adkins_nappi():
    rep = check_hypotheses(get_profile("adkins_nappi"), ModelParams(3, 4.0))
    assert rep.alpha_ok and rep.alpha_threshold == 4.0
    assert rep.f_zero_ok
    assert not rep.f_prime_zero_ok
    assert not rep.all_ok


def test_hypotheses_linear_two_dimensions():
    rep = check_hypotheses(get_profile("linear"), ModelParams(2, 3.0))
    assert rep.alpha_threshold == 3.0
    assert rep.all_ok


def test_hypotheses_sine_sign_witness():
    rep = check_hypotheses(get_profile("sine"), ModelParams(3, 4.0))
    assert not rep.sign_condition_ok
    # u sin u cos u first turns negative just past pi/2
    w = abs(rep.sign_witness)
    assert math.pi / 2 <= w <= 1.7
    u = rep.sign_witness
    assert u * math.sin(u) * math.cos(u) < 0
    assert 3 * math.sin(3) * math.cos(3) < 0


@given(n=st.integers(2, 9), alpha=st.floats(0.1, 20))
@settings(max_examples=80, deadline=None)
def test_alpha_threshold_is_direct_comparison(n, alpha):
    rep = check_hypotheses(get_profile("linear"), ModelParams(n, alpha), samples=101)
    assert rep.alpha_ok == (alpha >= max(2 * (n - 1), n + 1))


def test_model_params_validation():
    with pytest.raises(ValueError):
        ModelParams(1, 4.0)
    with pytest.raises(ValueError):
        ModelParams(3, 0.0)
    with pytest.raises(ValueError):
        ModelParams(2.5, 4.0)


def test_report_renders_and_serialises():
    rep = check_hypotheses(get_profile("sine"), ModelParams(3, 4.0))
    d = rep.to_dict()
    assert d["sign_condition_ok"] is False
    assert "[FAIL] u f(u) f'(u) >= 0" in rep.render()
