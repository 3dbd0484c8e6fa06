from __future__ import annotations

import math

import numpy as np
import pytest

from hyperlab import decay
from hyperlab.asymptotic import support_gap, weighted_profile_norm
from hyperlab.freefield import (ModeGrid, QuadraticField, build_field_operator, field_coefficients,
                                point_field, smear_field, translate_operator)
from hyperlab.minkowski import HyperboloidPoint, LorentzBoost, RejectedInput
from hyperlab.profiles import HyperboloidProfile, PositionBump

G1 = PositionBump(radius=1.0)
G2 = PositionBump(center=(0.5, 0.0, 0.0, 0.0), radius=1.0)
OFFSETS = decay.spacelike_offsets(np.geomspace(0.05, 20.0, 12), [0.0, 1.0])
# minimal c for kappa = 4, r = 1 on OFFSETS (shell quadrature, closed angular integral)
C_KAPPA4 = 0.06318165929970741


@pytest.fixture(scope="module")
def base_scan():
    return decay.fit_assumption_2_1(G1, G2, OFFSETS, 4.0, 1.0)


# -- commutator function ----------------------------------------------------

def test_real_test_functions_give_imaginary_commutator():
    for a in ([0.0, 0.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.5], [0.3, 0.0, 0.0, 2.0]):
        v = decay.pauli_jordan_smeared(G1, G2, a)
        assert abs(v.real) <= 1e-12 * max(abs(v), 1e-300) + 1e-16


def test_equal_time_disjoint_bumps_commute():
    small = PositionBump(radius=0.5)
    vals = decay.pauli_jordan_scan(small, small, [[0.0, 0.0, 0.0, z] for z in (1.2, 2.0, 4.0)])
    ref = abs(decay.pauli_jordan_smeared(small, small, [0.5, 0.0, 0.0, 0.0]))
    assert np.all(np.abs(vals) <= 1e-10 * ref)


def test_antisymmetry():
    a = np.array([0.4, 0.0, 0.0, 1.3])
    v12 = decay.pauli_jordan_smeared(G1, G2, a)
    v21 = decay.pauli_jordan_smeared(G2, G1, -a)
    assert abs(v12 + v21) <= 1e-12 * abs(v12)
    assert abs(v12 - np.conj(v21)) <= 1e-12 * abs(v12)


def test_fock_matrix_crosscheck(grid, basis):
    g1 = PositionBump(radius=1.0, nodes=64)
    g2 = PositionBump(center=(0.3, 0.0, 0.2, 0.0), radius=0.8, nodes=64)
    A = build_field_operator(grid, basis, g1)
    B = build_field_operator(grid, basis, g2)
    for a in ([0.0, 0.0, 0.0, 0.0], [0.5, 1.0, -0.3, 2.0], [-1.0, 0.0, 0.0, 3.0]):
        Ba = translate_operator(basis, B, a)
        fock = (A.mat @ (Ba.mat @ basis.vacuum) - Ba.mat @ (A.mat @ basis.vacuum))[0]
        shell = decay.pauli_jordan_smeared(g1, g2, a, grid=grid)
        assert abs(fock - shell) <= 1e-8 * abs(shell)


def test_lattice_and_continuum_methods_agree_for_fine_lattice():
    # the lattice sum is a Riemann sum of the shell integral; with a fine lattice both agree closely
    g = PositionBump(radius=1.0)
    fine = ModeGrid(1.0, 0.2, 6.0)
    a = [0.5, 0.0, 0.0, 0.7]
    cont = decay.pauli_jordan_smeared(g, g, a)
    lat = decay.pauli_jordan_smeared(g, g, a, grid=fine)
    assert abs(lat - cont) <= 1e-3 * abs(cont)


def test_axial_method_needs_z_offsets():
    with pytest.raises(RejectedInput):
        decay.pauli_jordan_scan(G1, G2, [[0.0, 1.0, 0.0, 0.0]], method="axial")


# -- template fits ------------------------------------------------------------

def test_kappa4_constant_regression(base_scan):
    assert base_scan.passed
    assert abs(base_scan.fitted_params["c"] - C_KAPPA4) <= 1e-9 * C_KAPPA4
    assert np.all(base_scan.values <= base_scan.template() * (1 + 1e-12))


def test_smaller_kappa_also_dominates(base_scan):
    alt = decay.fit_assumption_2_1(G1, G2, OFFSETS, 3.5, 1.0, values=base_scan.values)
    assert alt.passed


def test_timelike_offset_rejected():
    with pytest.raises(RejectedInput):
        decay.fit_assumption_2_1(G1, G2, [[2.0, 0.0, 0.0, 1.0]] + list(OFFSETS))


def test_short_scan_rejected():
    with pytest.raises(RejectedInput):
        decay.fit_template(decay.spacelike_offsets([1.0, 2.0, 3.0]), [1e-2, 1e-3, 1e-4], 4.0, 1.0)


def test_slowly_decaying_data_fail_template():
    offs = decay.spacelike_offsets(np.geomspace(0.1, 100, 10))
    x = decay.spacelike_excess(offs)
    res = decay.fit_template(offs, 1.0 / (1.0 + x) ** 2, 4.0, 1.0)
    assert res.verdict == "assumption fails"


def test_boosted_frame_passes():
    res = decay.boosted_frame_scan(G1, G2, OFFSETS, LorentzBoost.pure(0.5, (0.0, 0.0, 1.0)), 4.0, 1.0)
    assert res.passed


def test_smearing_narrow_and_zero(base_scan):
    narrow = decay.smearing_preservation_check(G1, G2, PositionBump.normalized(0.1), OFFSETS, base=base_scan)
    assert narrow["smeared"].passed and narrow["relative_change"] < 0.1
    zero = decay.smearing_preservation_check(G1, G2, PositionBump(radius=0.1, amplitude=0.0), OFFSETS,
                                             base=base_scan)
    assert np.all(zero["smeared"].values == 0)


# -- hyperboloid commutators --------------------------------------------------

def _disjoint_pair():
    x = math.sinh(0.45)
    return (HyperboloidProfile(HyperboloidPoint((x, 0, 0)), 0.3),
            HyperboloidProfile(HyperboloidPoint((-x, 0, 0)), 0.3))


def test_hyperboloid_scan_rejections(setup):
    f1, f2 = _disjoint_pair()
    base = smear_field(point_field(setup.grid), G1)
    gap = support_gap(f1, f2)
    with pytest.raises(RejectedInput):
        decay.hyperboloid_commutator_scan(setup, base, base, f1, f2, [30.0, 60.0], gap)
    with pytest.raises(RejectedInput):
        decay.hyperboloid_commutator_scan(setup, base, base, f1, f1, [30.0, 60.0], 0.0)


def test_zero_profile_commutator_vanishes(setup):
    f1, _ = _disjoint_pair()
    base = smear_field(point_field(setup.grid), G1)
    zero = HyperboloidProfile(HyperboloidPoint.origin(), 0.3, 0.0)
    scan = decay.hyperboloid_commutator_scan(setup, base, base, f1, zero, [30.0, 60.0], 0.1)
    assert np.all(scan.norms == 0) and scan.rate is None


def test_disjoint_hyperboloid_decay(setup):
    f1, f2 = _disjoint_pair()
    base = smear_field(point_field(setup.grid), G1)
    scan = decay.hyperboloid_commutator_scan(setup, base, base, f1, f2, [30.0, 57.7, 111.0, 213.5], 0.15, 3)
    assert scan.worst_slope <= -0.5


def test_overlap_integral_matches_weighted_norm():
    f = HyperboloidProfile(HyperboloidPoint((0.2, 0.1, 0.0)), 0.7)
    assert abs(decay.overlap_integral(f, f) - weighted_profile_norm(f) ** 2) <= 1e-12 * decay.overlap_integral(f, f)


def test_diagonal_bound_rejects_disjoint_pairs(setup):
    f1, f2 = _disjoint_pair()
    base = smear_field(point_field(setup.grid), G1)
    with pytest.raises(RejectedInput):
        decay.diagonal_bound_check(setup, base, base, [(f1, f2)])


# -- cluster function ---------------------------------------------------------

@pytest.fixture(scope="module")
def wick_pair():
    grid = ModeGrid(1.0, 0.25, 0.75)
    g = PositionBump(radius=0.5, nodes=64)
    return grid, [g, g.shifted([1.0, 0.0, 0.0, 0.0])], decay.wick_fields(grid, [g, g.shifted([1.0, 0, 0, 0])])


def test_cluster_closed_form_matches_fock(wick_pair, basis):
    grid, _, (w1, w2) = wick_pair
    fields = [w1, w2, w1, w2]
    for y1, y2, y in (([0.1, 0.2, 0.0, 0.0], [0.0, 0.0, 0.3, 0.1], [0.0, 0.0, 0.0, 0.0]),
                      ([0.0, 0.3, 0.0, 0.0], [0.2, 0.0, 0.0, 0.0], [0.5, 4.0, 0.0, 0.0])):
        closed = decay.cluster_function_K(fields, y1, y2, y)
        fock = decay.cluster_function_K_fock(basis, fields, y1, y2, y)
        assert abs(closed) > 0
        assert abs(closed - fock) <= 1e-8 * abs(closed)


def test_elementary_field_cluster_function_vanishes(wick_pair, basis):
    grid, bumps, _ = wick_pair
    lin = [field_coefficients(grid, g) for g in bumps + bumps]
    assert abs(decay.cluster_function_K_fock(basis, lin, [0.1, 0, 0, 0], [0, 0.2, 0, 0], [0, 3.0, 0, 0])) <= 1e-14


def test_cluster_point_validation():
    with pytest.raises(RejectedInput):
        decay.ClusterPoint(np.array([0.0, 2.0, 0, 0]), np.zeros(4), np.zeros(4), 1.0, 0j)


def test_hypothesis_points_in_region():
    r = np.random.default_rng(4)
    for y1, y2, y in decay.hypothesis_points(r, 0.5, 8.0, 6, 12.0, (0.0, 0.25)):
        assert np.linalg.norm(y1) <= 0.5 and np.linalg.norm(y2) <= 0.5
        assert np.linalg.norm(y[1:]) >= abs(y[0]) + 8.0 * 0.5 - 1e-12


def test_cluster_template_scan_passes(wick_pair):
    grid, _, (w1, w2) = wick_pair
    scan = decay.cluster_template_scan([w1, w2, w1, w2], [0.5, 0.75], np.random.default_rng(0), n_per_d=4)
    assert scan.passed and scan.c2 > 0


# -- vacuum clustering ----------------------------------------------------------

def test_vacuum_correlation_matches_fock(wick_pair, basis):
    _, _, (w1, _) = wick_pair
    for y in ([0.0, 1.0, 0.0, 0.0], [0.5, 3.0, 1.0, 0.0]):
        closed = decay.vacuum_correlation(w1, w1.adjoint(), y)
        assert abs(closed - decay.vacuum_correlation_fock(basis, w1, w1.adjoint(), y)) <= 1e-10 * abs(closed)


def test_ahr_checks():
    w1, = decay.wick_fields(ModeGrid(1.0, 0.2, 1.0), [PositionBump(radius=0.5, nodes=64)])
    ys = [[t, t + x, 0.0, 0.0] for t in (0.0, 1.0) for x in (1.0, 3.0, 6.0, 12.0)]
    same = decay.ahr_bound_check(w1, w1, ys, 1.5)
    assert len(same.skipped) == 2  # excess 1 < 2r
    assert same.passed
    adj = decay.ahr_bound_check(w1, w1.adjoint(), ys, 1.5)
    assert adj.values[np.argmax(adj.excess)] <= 1e-2 * adj.values.max()
    ann = QuadraticField(w1.grid, np.zeros_like(w1.C), np.zeros_like(w1.N), w1.D, 0.0, "annihilator")
    assert np.all(decay.ahr_bound_check(w1, ann, ys, 1.5).values == 0)
