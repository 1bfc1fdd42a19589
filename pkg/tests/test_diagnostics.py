import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from radialcone import diagnostics as D
from radialcone._numerics import radial_integral
from radialcone.errors import DiagnosticsError
from radialcone.nonlinearity import ModelParams, get_profile
from radialcone.solver import FieldState, RadialGrid, SolverConfig, evolve, make_bump, zero_state

from helpers import bump_run, smooth_run, zero_run

AN = get_profile("adkins_nappi")
P34 = ModelParams(3, 4.0)


def test_density_null_direction():
    e_plus, e_minus, m = D.density_values(0.0, 1.0, -1.0, 0.7, P34, AN)
    assert (e_plus, m, e_plus + m) == (1.0, -1.0, 0.0)
    assert e_minus == 1.0


def test_density_adkins_nappi_at_half_pi():
    e_plus, _, _ = D.density_values(math.pi / 2, 0.0, 0.0, 1.0, P34, AN)
    assert e_plus == pytest.approx(1 + math.pi**2 / 8, rel=1e-15)


@pytest.mark.parametrize("name", ["linear", "adkins_nappi", "sine"])
@given(u=st.floats(-5, 5), ut=st.floats(-5, 5), ur=st.floats(-5, 5), r=st.floats(0.01, 3),
       n=st.integers(2, 5), alpha=st.floats(1, 6))
@settings(max_examples=50, deadline=None)
def test_null_energy_identity(name, u, ut, ur, r, n, alpha):
    prof = get_profile(name)
    params = ModelParams(n, alpha)
    e_plus, _, m = D.density_values(u, ut, ur, r, params, prof)
    expected = (0.5 * (ut + ur) ** 2 + 0.5 * (n - 1) * math.sin(u) ** 2 / r**2
                + float(prof.f(u)) ** 2 / (2 * r**alpha))
    # exact up to rounding of the kinetic terms, which cancel when ut = -ur
    assert e_plus + m == pytest.approx(expected, rel=1e-12, abs=1e-15 * (ut * ut + ur * ur))


def test_zero_state_densities():
    g = RadialGrid.from_radius(2.0, 1 / 64)
    d = D.densities(zero_state(g), P34, AN)
    assert not d.e_plus.any() and not d.e_minus.any() and not d.m.any()
    assert D.cone_energy(zero_state(g), 1.0, P34, AN) == 0.0


def test_cone_energy_of_unit_density():
    # u = 0, u_t = sqrt 2 gives e+ = 1, so E(1) = int_0^1 r^2 dr
    g = RadialGrid.from_radius(2.0, 1 / 64)
    s = FieldState(0.0, np.zeros(g.J), np.full(g.J, math.sqrt(2.0)), g)
    # the midpoint rule on r^2 is short by exactly h^2/12 over [0, 1]
    assert D.cone_energy(s, 1.0, P34, AN) == pytest.approx(1 / 3 - g.h**2 / 12, rel=1e-12)
    assert D.cone_energy(s, 1.0, P34, AN) == pytest.approx(1 / 3, rel=g.h**2)
    with pytest.raises(DiagnosticsError):
        D.cone_energy(s, 2.5, P34, AN)


@pytest.mark.parametrize("upper", [0.3, 1.0, 1.37])
@pytest.mark.parametrize("n", [2, 3, 4])
def test_radial_integral_against_closed_form(upper, n):
    x = sp.Symbol("x")
    ref = float(sp.integrate(sp.cos(x) * x ** (n - 1), (x, 0, upper)))
    errors = []
    for h in (1 / 128, 1 / 256):
        g = RadialGrid.from_radius(2.0, h)
        errors.append(abs(radial_integral(np.cos(g.r), h, upper, n) - ref))
        assert errors[-1] <= h**2 * upper
    assert 3.0 <= errors[0] / errors[1] <= 5.0


def test_zero_run_diagnostics_vanish():
    H = zero_run()
    assert D.flux(H, 0.125, 1.0) == 0.0
    assert D.energy_flux_residual(H, 0.125, 1.0) == 0.0
    assert D.bogomolny_history(H)[0] == 0.0
    for mult in (D.energy_multiplier(), D.scaling_multiplier(3)):
        rep = D.multiplier_residual(H, mult, D.region(H, 0.125, 1.0))
        assert rep.residual == 0.0 and rep.l1_residual == 0.0
    terms = D.energyint_decomposition(H, 0.125, 1.0)
    assert all(v == 0.0 for k, v in terms.items() if k not in ("S", "T"))
    for pair in D.lemma_bounds(H, 0.125, 0.5).values():
        assert pair.lhs == 0.0
    probes = D.apex_probes(H, D.dyadic_times(1.0, 3))
    assert probes["tip_energy"] == [0.0] * 3 and probes["sup_probe"] == [0.0] * 3
    assert probes["flux"] == [0.0] * 3


def test_region_and_time_mapping():
    H = bump_run(1 / 128)
    assert D.region(H, 0.25, 1.0).lab_time(0.25) == 0.75
    s = D.cone_state(H, 0.25)
    lab = H.slices[D.slice_index(H, 0.25)]
    assert s.t == pytest.approx(0.25) and np.array_equal(s.v, -lab.v)
    with pytest.raises(DiagnosticsError):
        D.region(H, 0.5, 0.25)
    with pytest.raises(DiagnosticsError):
        D.flux(H, 0.125, 1.5)


def test_flux_is_nonnegative_and_additive():
    H = bump_run(1 / 256)
    f1, f2 = D.flux(H, 0.125, 0.5), D.flux(H, 0.5, 1.0)
    assert f1 >= -1e-10 and f2 >= -1e-10
    assert D.flux(H, 0.125, 1.0) == pytest.approx(f1 + f2, rel=1e-12, abs=1e-20)


def test_energy_ledger_consistency():
    H = bump_run(1 / 256)
    led = D.energy_ledger(H)
    assert np.all(np.diff(led.times) > 0)
    assert led.min_pair_flux() >= -1e-10
    assert led.max_residual <= 1e-4 * led.energies[-1]
    d = led.to_dict()
    assert d["min_flux"] == led.min_flux


def test_flux_decay_towards_apex():
    H = bump_run(1 / 256)
    F = D.flux_decay(H, D.dyadic_times(1.0, 5))
    assert all(a >= b for a, b in zip(F, F[1:]))
    assert F[-1] <= 1e-2 * F[0]


def test_bogomolny_linear_ramp():
    # u = r, n = 2, alpha = 3: |I(u)| = r^2/2 against the bound r^2/sqrt(2)
    g = RadialGrid.from_radius(1.0, 1 / 256)
    s = FieldState(0.0, g.r.copy(), np.zeros(g.J), g)
    v, rad = D.bogomolny_check(s, ModelParams(2, 3.0), get_profile("linear"))
    r0 = g.r[0]
    assert v <= 0.0
    assert v == pytest.approx(r0**2 * (0.5 - 1 / math.sqrt(2)), rel=1e-2)
    assert rad == r0


def test_bogomolny_zero_and_bad_alpha():
    g = RadialGrid.from_radius(1.0, 1 / 64)
    assert D.bogomolny_check(zero_state(g), P34, AN)[0] == 0.0
    with pytest.raises(ValueError):
        D.bogomolny_check(zero_state(g), ModelParams(3, 3.5), AN)


@pytest.mark.parametrize("name", ["linear", "cubic", "adkins_nappi", "sine"])
@given(a=st.just(0.0) | st.floats(1e-4, 3) | st.floats(-3, -1e-4),
       c=st.floats(0.2, 1.5), w=st.floats(0.1, 0.4))
@settings(max_examples=15, deadline=None)
def test_bogomolny_inequality_on_random_bumps(name, a, c, w):
    # exact in the continuum; near equality the quadrature defect is O(h^2 a^2)
    g = RadialGrid.from_radius(3.0, 1 / 256)
    s = make_bump(a, c, w, g, cutoff=min(3.0, 0.99 * c / w))
    v, _ = D.bogomolny_check(s, P34, get_profile(name))
    assert v <= 10 * g.h**2 * a * a


def test_sup_probe_is_monotone_in_T():
    H = bump_run(1 / 256)
    scales = np.linspace(0.05, 1.0, 12)
    vals = [D.sup_probe(H, T) for T in scales]
    assert all(a <= b for a, b in zip(vals, vals[1:]))


@given(a=st.floats(-2, 2), v=st.floats(-2, 2), T=st.floats(0.05, 1.9))
@settings(max_examples=30, deadline=None)
def test_tip_energy_nonnegative(a, v, T):
    g = RadialGrid.from_radius(2.0, 1 / 64)
    s = make_bump(a, 1.0, 0.2, g)
    s = FieldState(T, s.u, v * s.u, g)
    assert D.tip_energy(s, T, P34, AN) >= 0.0


def test_tip_energy_of_zero_state():
    g = RadialGrid.from_radius(2.0, 1 / 64)
    assert D.tip_energy(zero_state(g), 1.0, P34, AN) == 0.0


def test_smooth_run_probes_decrease():
    H = smooth_run()
    probes = D.apex_probes(H, D.dyadic_times(0.5, 5))
    tip, sup = probes["tip_energy"], probes["sup_probe"]
    assert all(x > y for x, y in zip(tip, tip[1:]))
    assert all(x > y for x, y in zip(sup, sup[1:]))


def test_diagnostics_are_pure():
    H = bump_run(1 / 128)
    calls = [
        lambda: D.energy_flux_residual(H, 0.125, 1.0),
        lambda: D.energy_ledger(H).to_dict(),
        lambda: D.multiplier_residual(H, D.scaling_multiplier(3), D.region(H, 0.125, 1.0)).to_dict(),
        lambda: D.energyint_decomposition(H, 0.125, 1.0),
        lambda: {k: f.to_dict() for k, f in D.fit_lemma_constants(H, [0.5, 0.25]).items()},
        lambda: D.apex_probes(H, [1.0, 0.5]),
    ]
    for call in calls:
        assert repr(call()) == repr(call())


def _negated(history):
    grid = history.grid
    data = history.slices[0]
    return evolve(history.config, FieldState(data.t, -data.u, -data.v, grid), grid,
                  history.params, history.profile)


def test_energyint_terms_under_negation():
    # every term is a product of two odd factors, so all are even under u -> -u
    H = bump_run(1 / 128)
    M = _negated(H)
    a = D.energyint_decomposition(H, 0.125, 1.0)
    b = D.energyint_decomposition(M, 0.125, 1.0)
    for key in a:
        assert b[key] == pytest.approx(a[key], rel=1e-12, abs=1e-22)
    assert abs(a["residual"]) <= 1e-3 * abs(a["Sigma_T"])


def test_energyint_balances_at_second_order():
    res = [D.energyint_decomposition(bump_run(h), 0.125, 1.0)["residual"]
           for h in (1 / 128, 1 / 256)]
    assert abs(res[1]) < abs(res[0]) / 3


def test_lemma_fit_structure():
    H = bump_run(1 / 128)
    fits = D.fit_lemma_constants(H, D.dyadic_times(0.5, 3))
    assert set(fits) == set(D.BOUND_NAMES)
    for fit in fits.values():
        assert fit.scales == sorted(fit.scales, reverse=True)
        assert all(x <= y for x, y in zip(fit.constants, fit.constants[1:]))
        assert fit.growth >= 1.0


def test_multiplier_window_errors():
    H = bump_run(1 / 128)
    with pytest.raises(DiagnosticsError):
        D.multiplier_residual(H, D.energy_multiplier(), D.ConeRegion(0.125, 1.0, 2.0))


def test_multiplier_finite_difference_fallback():
    m = D.Multiplier("fd", lambda t, r: t * r, lambda t, r: t + 0 * r, lambda t, r: r * r)
    t, r = np.array([0.3]), np.array([0.7])
    assert m.partial("a_t", t, r)[0] == pytest.approx(0.7, rel=1e-8)
    assert m.partial("c_r", t, r)[0] == pytest.approx(1.4, rel=1e-8)


# -- symbolic oracle for the multiplier identity --------------------------------

_t, _r = sp.symbols("t r", positive=True)
_U = 0.3 * _r * sp.exp(-_r**2) * sp.cos(_t) + 0.1 * _r**2 * _t
_A, _B, _C = _t**2 + _r, _t * _r, 1 + _t * _r**2


@pytest.mark.parametrize("n,alpha", [(2, 3.0), (3, 4.0), (4, 6.5)])
def test_multiplier_identity_against_sympy(n, alpha):
    """For any smooth u, P_t - Q_r - RHS = r^(n-1) (a u_t + b u_r + c u) * PDE residual."""
    u = _U
    f = u - sp.sin(u) * sp.cos(u)
    ffp = f * (1 - sp.cos(2 * u))
    ut, ur = sp.diff(u, _t), sp.diff(u, _r)
    pot = sp.Rational(n - 1, 2) * sp.sin(u) ** 2 / _r**2 + f**2 / (2 * _r**alpha)
    kin = (ut**2 + ur**2) / 2
    w = _r ** (n - 1)
    P = w * (_A * (kin + pot) + _B * ut * ur + _C * u * ut)
    Q = w * (_A * ut * ur + _B * (kin - pot) + _C * u * ur)
    pde = (sp.diff(u, _t, 2) - sp.diff(u, _r, 2) - (n - 1) / _r * ur
           + sp.Rational(n - 1, 2) * sp.sin(2 * u) / _r**2 + ffp / _r**alpha)
    expected = sp.diff(P, _t) - sp.diff(Q, _r) - w * (_A * ut + _B * ur + _C * u) * pde

    args = (_t, _r)
    lam = lambda e: sp.lambdify(args, e, "numpy")  # noqa: E731
    mult = D.Multiplier(
        "test", lam(_A), lam(_B), lam(_C),
        lam(sp.diff(_A, _t)), lam(sp.diff(_A, _r)), lam(sp.diff(_B, _t)),
        lam(sp.diff(_B, _r)), lam(sp.diff(_C, _t)), lam(sp.diff(_C, _r)),
    )
    rng = np.random.default_rng(7)
    tt, rr = rng.uniform(0.1, 1.0, 25), rng.uniform(0.2, 1.5, 25)
    uu, uut, uur = lam(u)(tt, rr), lam(ut)(tt, rr), lam(ur)(tt, rr)
    params = ModelParams(n, alpha)
    got = D.multiplier_rhs(tt, rr, uu, uut, uur, params, AN, mult)
    want = lam(expected)(tt, rr)
    assert np.allclose(got, want, rtol=1e-10, atol=1e-12)
    Pn, Qn = D.multiplier_fluxes(tt, rr, uu, uut, uur, params, AN, mult)
    assert np.allclose(Pn, lam(P)(tt, rr), rtol=1e-13)
    assert np.allclose(Qn, lam(Q)(tt, rr), rtol=1e-13)


def test_scaling_multiplier_reduces_to_named_volume_terms():
    n, alpha = sp.Integer(3), sp.Integer(4)
    u, r = sp.symbols("u r", positive=True)
    f = sp.Function("f")
    c = (n - 1) / 2
    # a = t, b = r, c = (n-1)/2: kinetic coefficients vanish
    coeff_ut2 = sp.Rational(1, 2) * (1 - 1 - (n - 1) + 2 * c)
    coeff_ur2 = sp.Rational(1, 2) * (1 - 1 + (n - 1) - 2 * c)
    assert coeff_ut2 == 0 and coeff_ur2 == 0
    rhs = ((2 + (n - 3)) * (n - 1) / 2 * sp.sin(u) ** 2 / r**2
           + (2 + n - 1 - alpha) * f(u) ** 2 / (2 * r**alpha)
           - c * u * ((n - 1) / 2 * sp.sin(2 * u) / r**2 + f(u) * sp.Symbol("fp") / r**alpha))
    named = ((n - 1) ** 2 / 2 * sp.sin(u) ** 2 / r**2
             - (n - 1) ** 2 / 4 * u * sp.sin(2 * u) / r**2
             - (alpha - (n + 1)) * f(u) ** 2 / (2 * r**alpha)
             - c * u * f(u) * sp.Symbol("fp") / r**alpha)
    assert sp.simplify(rhs - named) == 0
