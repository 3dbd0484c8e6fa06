from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import sparse

from hyperlab.decay import pauli_jordan_smeared
from hyperlab.freefield import (BasisOverflowError, FockBasis, ModeGrid, RankAmbiguityError, build_field_operator,
                                build_wick_square, dump_operator, field_coefficients, graded_commutator,
                                kernel_projector, kernel_projector_lemma_check, ladder_matrices, load_operator,
                                operator_norm, random_lemma_matrix, region_box, region_origin, region_shell,
                                region_whole, spectral_projector, translate_operator, translation,
                                two_particle_inner, vacuum_complement, wick_square_coefficients)
from hyperlab.minkowski import HyperboloidPoint
from hyperlab.profiles import HyperboloidProfile, MomentumProfile, PositionBump

SMALL = ModeGrid(1.0, 0.5, 0.5)  # 7 modes


@pytest.fixture(scope="module")
def small_basis():
    return FockBasis(SMALL, 3)


def _chi_plus():
    return MomentumProfile.default(1.0, HyperboloidProfile(HyperboloidPoint.origin(), 1.0))


# -- grid and basis ------------------------------------------------------------

def test_grid_energies_and_count(grid):
    assert grid.size == 123
    assert np.all(grid.energies >= grid.mass)
    assert np.allclose(grid.weights, grid.spacing ** 3 / ((2 * np.pi) ** 3 * 2 * grid.energies))
    assert SMALL.size == 7


def test_basis_dimension_and_vacuum(small_basis):
    assert small_basis.dim == sum(math.comb(7 + n - 1, n) for n in range(4))
    assert small_basis.states[0] == ()
    assert np.all(small_basis.momenta[0] == 0)


def test_basis_overflow_guard():
    with pytest.raises(BasisOverflowError):
        FockBasis(ModeGrid(1.0, 0.25, 0.75), 3, max_dim=5000)


# -- field operators -----------------------------------------------------------

def test_ccr_defect_only_on_top_layer(small_basis):
    b = small_basis
    low = b.numbers < b.n_max
    for j in range(SMALL.size):
        aj, _ = ladder_matrices(b, j)
        for k in range(SMALL.size):
            _, akd = ladder_matrices(b, k)
            comm = (aj @ akd - akd @ aj).toarray()
            expected = np.eye(b.dim) * (j == k)
            assert np.allclose(comm[:, low], expected[:, low], rtol=0, atol=1e-14)
            if j == k:
                top = np.nonzero(~low)[0]
                assert np.all(np.abs(comm[top, top] - 1) > 0.5)


def test_single_mode_ccr():
    g = ModeGrid(1.0, 0.25, 0.0)
    b = FockBasis(g, 4)
    a, ad = ladder_matrices(b, 0)
    comm = (a @ ad - ad @ a).toarray()
    assert np.allclose(np.diag(comm)[:-1], 1.0) and np.count_nonzero(comm - np.diag(np.diag(comm))) == 0
    assert comm[-1, -1] == -4  # top layer: -n


def test_positive_support_has_no_annihilation_part(grid, basis):
    chi = _chi_plus()
    fld = field_coefficients(grid, chi)
    assert np.all(fld.annihilate == 0)
    op = build_field_operator(grid, basis, chi)
    rows, cols = op.mat.nonzero()
    assert np.all(basis.numbers[rows] == basis.numbers[cols] + 1)
    vec = op @ basis.vacuum
    expected = (2 * np.pi) ** 4 * np.sum(grid.weights * np.abs(chi.hat(grid.four_momenta)) ** 2)
    assert abs(np.vdot(vec, vec).real - expected) <= 1e-12 * expected


def test_build_rejects_foreign_grid(basis):
    with pytest.raises(ValueError):
        build_field_operator(SMALL, basis, _chi_plus())


def test_vacuum_commutator_matches_shell_sum(grid, basis):
    g1 = PositionBump(radius=1.0, nodes=64)
    g2 = PositionBump(center=(0.3, 0.5, 0.0, 0.0), radius=0.8, nodes=64)
    A = build_field_operator(grid, basis, g1)
    B = build_field_operator(grid, basis, g2)
    value = (graded_commutator(A, B) @ basis.vacuum)[0]
    oracle = pauli_jordan_smeared(g1, g2, np.zeros(4), 1.0, grid=grid)
    assert abs(value - oracle) <= 1e-10 * abs(oracle)


def test_truncation_levels_agree_on_common_block():
    g = ModeGrid(1.0, 0.5, 0.5)
    chi = PositionBump(radius=1.0, nodes=64)
    small = build_field_operator(g, FockBasis(g, 2), chi).dense()
    big = build_field_operator(g, FockBasis(g, 3), chi).dense()
    n = small.shape[0]
    assert np.array_equal(big[:n, :n], small)


# -- Wick squares --------------------------------------------------------------

def test_wick_square_vacuum_expectation_and_norm(grid, basis):
    g = PositionBump(radius=1.0, nodes=64)
    q = wick_square_coefficients(grid, g)
    W = q.matrix(basis)
    vec = W @ basis.vacuum
    assert vec[0] == 0
    # Wick contraction: ||:phi^2:(g) Omega||^2 = 2 sum_kl |C_kl|^2
    assert abs(np.vdot(vec, vec).real - two_particle_inner(q.C, q.C).real) <= 1e-12 * abs(two_particle_inner(q.C, q.C))


def test_wick_square_hermitian_for_real_bump(grid, basis):
    W = build_wick_square(grid, basis, PositionBump(center=(0.2, 0.1, 0.0, -0.3), radius=0.9, nodes=64))
    assert abs(W.mat - W.adjoint().mat).max() <= 1e-12 * W.max_entry()


def test_wick_commutator_closed_form_matches_matrices():
    g = ModeGrid(1.0, 0.5, 0.5)
    b = FockBasis(g, 4)
    q1 = wick_square_coefficients(g, PositionBump(radius=1.0, nodes=64))
    q2 = wick_square_coefficients(g, PositionBump(center=(0.5, 0.3, 0.0, 0.0), radius=0.7, nodes=64))
    lhs = graded_commutator(q1.matrix(b), q2.matrix(b)).dense()
    rhs = q1.commutator(q2).matrix(b).dense()
    keep = b.numbers <= b.n_max - 2  # columns where the truncation does not interfere
    assert np.allclose(lhs[:, keep], rhs[:, keep], atol=1e-13 * np.abs(rhs).max())


# -- projectors and translations ----------------------------------------------

def test_origin_projector_is_vacuum(small_basis):
    E = spectral_projector(small_basis, region_origin).dense()
    expected = np.zeros_like(E)
    expected[0, 0] = 1
    assert np.array_equal(E, expected)
    assert np.array_equal(spectral_projector(small_basis, region_whole).dense(), np.eye(small_basis.dim))
    perp = vacuum_complement(small_basis).dense()
    assert np.array_equal(perp + expected, np.eye(small_basis.dim))


def test_shell_projector_is_identity_on_one_particle_sector(small_basis):
    mask = np.diag(spectral_projector(small_basis, region_shell(1.0)).dense()).real
    assert np.all(mask[small_basis.numbers == 1] == 1)
    assert mask[0] == 0


@settings(max_examples=30)
@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4), st.lists(st.floats(0, 3), min_size=4, max_size=4))
def test_projectors_idempotent_and_selfadjoint(lo, width):
    b = FockBasis(SMALL, 2)
    E = spectral_projector(b, region_box(lo, np.add(lo, width))).dense()
    assert np.array_equal(E @ E, E)
    assert np.array_equal(E, E.conj().T)


def test_momentum_transfer_rule_random_regions(grid, basis, rng):
    chi = _chi_plus()
    op = build_field_operator(grid, basis, chi)
    emin = chi.mass_center - chi.shell_halfwidth  # p0 >= sqrt(p^2) >= emin on supp chi_hat
    P = basis.momenta
    done = 0
    while done < 20:
        i = rng.integers(basis.dim)
        w = rng.uniform(0.1, 1.0, 4)
        lo1, hi1 = P[i] - w, P[i] + w
        lo2 = P[rng.integers(basis.dim)] - rng.uniform(0.1, 1.0, 4)
        hi2 = lo2 + rng.uniform(0.1, 2.0, 4)
        hi2[0] = min(hi2[0], lo1[0] + emin - 1e-9)
        if hi2[0] <= lo2[0]:
            continue
        E1 = spectral_projector(basis, region_box(lo1, hi1)).mat
        E2 = spectral_projector(basis, region_box(lo2, hi2)).mat
        prod = E2 @ op.mat @ E1
        assert prod.nnz == 0 or abs(prod).max() == 0
        done += 1


def test_translation_basics(small_basis):
    b = small_basis
    A = build_field_operator(SMALL, b, PositionBump(radius=1.0, nodes=64))
    assert abs(translate_operator(b, A, np.zeros(4)).mat - A.mat).max() == 0
    a, c = np.array([0.3, 1.0, -0.5, 2.0]), np.array([-1.2, 0.4, 0.0, 0.7])
    Ua, Uc, Uac = (translation(b, x).mat for x in (a, c, a + c))
    assert abs(Ua @ Uc - Uac).max() <= 1e-14
    assert abs(Ua @ Ua.conj().T - sparse.identity(b.dim)).max() <= 1e-14
    k = 3
    idx = b.one_particle(k)
    w, kv = SMALL.energies[k], SMALL.momenta[k]
    assert abs(Ua.diagonal()[idx] - np.exp(1j * (w * a[0] - kv @ a[1:]))) <= 1e-14


def test_commutator_norm_translation_invariant(rng):
    g = ModeGrid(1.0, 0.5, 0.5)
    b = FockBasis(g, 4)
    W1 = build_wick_square(g, b, PositionBump(radius=1.0, nodes=64))
    W2 = build_wick_square(g, b, PositionBump(center=(0.0, 0.5, 0.0, 0.0), radius=0.7, nodes=64))
    for _ in range(3):
        x, y = rng.normal(size=4), rng.normal(size=4)
        lhs = graded_commutator(translate_operator(b, W1, x), translate_operator(b, W2, y)).norm()
        rhs = graded_commutator(W1, translate_operator(b, W2, y - x)).norm()
        assert abs(lhs - rhs) <= 1e-12 * rhs


def test_fermionic_bracket_branch():
    c = np.array([[0.0, 1.0], [0.0, 0.0]])
    assert np.array_equal(graded_commutator(c, c.T, sign=+1), np.eye(2))
    assert np.array_equal(graded_commutator(c, c, sign=+1), np.zeros((2, 2)))


def test_operator_norm_sparse_matches_dense(rng):
    M = rng.normal(size=(40, 40))
    M[M < 1] = 0
    assert abs(operator_norm(sparse.csr_matrix(M)) - np.linalg.norm(M, 2)) <= 1e-12 * np.linalg.norm(M, 2)
    assert operator_norm(sparse.csr_matrix((5, 5))) == 0.0


# -- kernel projector inequalities -------------------------------------------

def test_jordan_block_equality():
    rep = kernel_projector_lemma_check(np.array([[0.0, 1.0], [0.0, 0.0]]), 2)
    assert rep.kernel_dim == 2
    assert abs(rep.lhs1 - 1.0) <= 1e-15 and abs(rep.rhs1 - 1.0) <= 1e-15
    assert rep.satisfied


def test_normal_matrix_with_trivial_kernel():
    A = np.diag([1.0, 2.0, 3.0j])
    assert np.array_equal(kernel_projector(A, 3), np.zeros((3, 3)))
    rep = kernel_projector_lemma_check(A, 3)
    assert rep.lhs1 == 0 and rep.lhs2 == 0 and rep.satisfied


def test_random_matrices_no_violations(rng):
    bad = 0
    for i in range(500):
        n = (2, 3, 4)[i % 3]
        k = int(rng.integers(0, n + 1))
        while True:
            try:
                rep = kernel_projector_lemma_check(random_lemma_matrix(rng, 8, k), n)
                break
            except RankAmbiguityError:
                continue
        bad += not rep.satisfied
    assert bad == 0


def test_ambiguous_rank_demands_tolerance():
    A = np.diag([1.0, 1e-9])
    with pytest.raises(RankAmbiguityError):
        kernel_projector(A, 1)
    P = kernel_projector(A, 1, rank_tol=1e-6)
    assert np.allclose(P, np.diag([0.0, 1.0]))


def test_lemma_rejects_non_square():
    with pytest.raises(ValueError):
        kernel_projector_lemma_check(np.zeros((2, 3)), 2)


# -- dumps ----------------------------------------------------------------------

def test_dump_round_trip(tmp_path, small_basis):
    A = build_field_operator(SMALL, small_basis, PositionBump(radius=1.0, nodes=64))
    path = tmp_path / "op.npz"
    dump_operator(path, A)
    B = load_operator(path, small_basis)
    assert B.label == A.label
    assert (A.mat != B.mat).nnz == 0
    with pytest.raises(ValueError):
        load_operator(path, FockBasis(SMALL, 2))
