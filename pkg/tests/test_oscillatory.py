from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperlab.minkowski import HyperboloidPoint, LorentzBoost, hyperboloid_lift
from hyperlab.oscillatory import (FIT_RHO_GRID, CorrectionBudgetError, FitConditionError, QuadratureError,
                                  QuadratureSpec, closed_form_coefficients, expansion_table, extract_Lk,
                                  fit_rate, integrate_wavepacket, integrate_wavepacket_tensor, prefactor,
                                  recursive_corrections, verify_fexp)
from hyperlab.profiles import HyperboloidProfile, MomentumProfile, ProfileSum, RadialProfile

ORIGIN = HyperboloidPoint.origin()
RHO = np.geomspace(30.0, 300.0, 17)
# reference value for the radius-0.5 bump at its centre, rho = 50 (adaptive and tensor schemes agree to 1e-15)
BUMP_HALF_RHO50 = complex(-0.005136060209060936, 0.026484478500451627)


def test_zero_profile_integrates_to_zero():
    f = HyperboloidProfile(ORIGIN, 1.0, 0.0)
    assert integrate_wavepacket(f, 50.0, ORIGIN) == 0
    assert np.all(integrate_wavepacket(f, RHO, ORIGIN) == 0)


def test_dual_scheme_reference_value():
    f = HyperboloidProfile(ORIGIN, 0.5)
    adaptive = integrate_wavepacket(f, 50.0, ORIGIN, QuadratureSpec(abs_tol=1e-12))
    tensor = integrate_wavepacket_tensor(f, 50.0, ORIGIN)
    assert abs(adaptive - tensor) <= 1e-8
    assert abs(adaptive - BUMP_HALF_RHO50) <= 1e-8


def test_leading_term_ratio_tends_to_one():
    f = HyperboloidProfile(ORIGIN, 2.5)
    rho = np.array([30.0, 300.0])
    ratio = integrate_wavepacket(f, rho, ORIGIN) / (prefactor(rho) * f(np.zeros(3)))
    err = np.abs(ratio - 1)
    assert err[1] < err[0]
    # O(1/rho): the error shrinks by about the ratio of the rho values
    assert err[0] / err[1] == pytest.approx(10.0, rel=0.2)


def test_negative_rho_is_conjugate():
    f = HyperboloidProfile(HyperboloidPoint((0.1, 0, 0)), 1.5)
    v = HyperboloidPoint((0.2, 0, 0))
    assert integrate_wavepacket(f, -40.0, v) == pytest.approx(np.conj(integrate_wavepacket(f, 40.0, v)), abs=1e-12)


def test_quadrature_failure_reports_best_value():
    # a kink inside the support spoils the spectral convergence of the radial rule
    kink = RadialProfile(ORIGIN, 1.0, lambda d: np.abs(d - 0.5), "kink")
    with pytest.raises(QuadratureError) as info:
        integrate_wavepacket(kink, 200.0, HyperboloidPoint((0.3, 0, 0)),
                             QuadratureSpec(abs_tol=1e-13, max_subdivisions=64))
    assert info.value.value is not None and info.value.achieved > 1e-13


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(abs_tol=0.0)
    with pytest.raises(ValueError):
        QuadratureSpec(oscillation_resolution=4)


@settings(max_examples=10)
@given(st.floats(-2, 2), st.floats(-2, 2))
def test_oracle_linearity(a, b):
    f1 = HyperboloidProfile(ORIGIN, 1.5)
    f2 = HyperboloidProfile(HyperboloidPoint((0.3, 0, 0)), 1.0)
    v = HyperboloidPoint((0.1, 0.1, 0))
    combo = ProfileSum([(a, f1), (b, f2)])
    spec = QuadratureSpec(abs_tol=1e-11)
    lhs = integrate_wavepacket(combo, 40.0, v, spec)
    rhs = a * integrate_wavepacket(f1, 40.0, v, spec) + b * integrate_wavepacket(f2, 40.0, v, spec)
    assert abs(lhs - rhs) <= 1e-8 * (1 + abs(a) + abs(b))


@settings(max_examples=10)
@given(st.floats(-1.0, 1.0), st.sampled_from([(1, 0, 0), (0, 1, 1), (1, -1, 2)]))
def test_oracle_lorentz_covariance(eta, n):
    L = LorentzBoost.pure(eta, n)
    f = HyperboloidProfile(HyperboloidPoint((0.2, 0, 0)), 1.2)
    v = HyperboloidPoint((0.1, -0.2, 0.05))
    spec = QuadratureSpec(abs_tol=1e-11)
    assert abs(integrate_wavepacket(f.boosted(L), 60.0, L.apply(v), spec)
               - integrate_wavepacket(f, 60.0, v, spec)) <= 1e-9


def test_extract_Lk_leading_coefficient():
    for f, v in ((HyperboloidProfile(ORIGIN, 2.5), ORIGIN),
                 (HyperboloidProfile(HyperboloidPoint((0.5, 0, 0)), 3.0), HyperboloidPoint((0.6, 0.1, 0)))):
        fit = extract_Lk(f, v, 3, RHO)
        assert abs(fit.coefficients[0] - f(np.array(v.vs))) <= 1e-6


def test_extract_Lk_zero_profile():
    fit = extract_Lk(HyperboloidProfile(ORIGIN, 1.0, 0.0), ORIGIN, 3, RHO)
    assert np.all(fit.coefficients == 0)


def test_extract_Lk_split_grid_cross_validation():
    f = HyperboloidProfile(ORIGIN, 3.0)
    grid = np.geomspace(25.0, 400.0, 33)
    c_even = extract_Lk(f, ORIGIN, 3, grid[::2]).coefficients[1]
    c_odd = extract_Lk(f, ORIGIN, 3, grid[1::2]).coefficients[1]
    assert abs(c_even - c_odd) <= 0.02 * abs(c_even)
    assert abs(c_even - closed_form_coefficients(f, ORIGIN, 1)[1]) <= 0.02 * abs(c_even)


def test_extract_Lk_input_checks():
    f = HyperboloidProfile(ORIGIN, 2.0)
    with pytest.raises(ValueError):
        extract_Lk(f, ORIGIN, 4, RHO)
    with pytest.raises(ValueError):
        extract_Lk(f, ORIGIN, 3, np.geomspace(30, 100, 10))
    with pytest.raises(FitConditionError):
        extract_Lk(f, ORIGIN, 3, RHO, max_condition=10.0)


@pytest.mark.parametrize("N", [0, 1, 2])
def test_expansion_remainder_rates(N):
    f = HyperboloidProfile(HyperboloidPoint((0.52, 0, 0)), 3.0)
    rows = expansion_table(f, HyperboloidPoint((0.52, 0, 0)), N, RHO)
    assert rows[0].terms[0] == pytest.approx(f(np.array([0.52, 0, 0])))
    fit = fit_rate(RHO, [r.remainder_estimate for r in rows])
    assert fit.slope <= -(N + 1) + 0.3


def test_recursive_corrections_trivial():
    f = HyperboloidProfile(ORIGIN, 1.0)
    assert recursive_corrections(f, 0) == [f]
    zero = recursive_corrections(HyperboloidProfile(ORIGIN, 1.0, 0.0), 2)
    pts = np.array([[0.0, 0, 0], [0.3, 0, 0]])
    assert all(np.all(fk(pts) == 0) for fk in zero)


def test_recursive_correction_removes_first_order():
    f = HyperboloidProfile(ORIGIN, 2.5)
    f0, f1 = recursive_corrections(f, 1)
    v = ORIGIN
    corrected = integrate_wavepacket(f0, RHO, v) + integrate_wavepacket(f1, RHO, v) / RHO
    resid = np.abs(corrected / prefactor(RHO) - f(np.array(v.vs)))
    assert fit_rate(RHO, resid).slope <= -2


def test_fitted_first_coefficient_matches_closed_form_inside():
    f = HyperboloidProfile(ORIGIN, 3.0)
    exact = recursive_corrections(f, 1)[1]
    for t in (0.0, 0.75):
        p = HyperboloidPoint.from_rapidity(t)
        c1 = extract_Lk(f, p, 3, FIT_RHO_GRID).coefficients[1]
        assert abs(c1 + exact(np.array([[math.sinh(t), 0, 0]]))[0]) <= 1e-4


def test_fitted_corrections_over_budget_raise():
    f = HyperboloidProfile(ORIGIN, 1.0)
    v_grid = [HyperboloidPoint.from_rapidity(t) for t in np.linspace(0.0, 1.0, 3)]
    with pytest.raises(CorrectionBudgetError):
        recursive_corrections(f, 1, v_grid, method="fit", rho_grid=np.geomspace(20, 400, 13))


def _samples(n, seed=3):
    r = np.random.default_rng(seed)
    vs = r.normal(size=(n, 3)) * 0.2
    return hyperboloid_lift(vs) * (1 + r.uniform(-0.1, 0.1, n))[:, None]


def test_verify_fexp_rates():
    chi = MomentumProfile.default(1.0, HyperboloidProfile(ORIGIN, 2.0))
    f = HyperboloidProfile(ORIGIN, 2.5)
    lam = np.geomspace(30, 300, 8)
    assert verify_fexp(chi, f, 0, lam, _samples(3)).slope <= -0.8
    assert verify_fexp(chi, f, 2, lam, _samples(2)).slope <= -2.6


def test_verify_fexp_outside_support():
    chi = MomentumProfile.default(1.0, HyperboloidProfile(ORIGIN, 0.5))
    far = hyperboloid_lift(np.array([[3.0, 0, 0]]))
    fit = verify_fexp(chi, HyperboloidProfile(ORIGIN, 1.0), 0, np.geomspace(30, 300, 4), far)
    assert fit.zeros == 4
