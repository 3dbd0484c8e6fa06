"""Registry of checked claims: id -> descriptive reference label and acceptance criterion."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Claim:
    id: str
    ref: str
    criterion: int | None
    summary: str


_CLAIMS = [
    Claim("expand.remainder_rates", "stationary-phase remainder rates", 1,
          "|oracle - N-term expansion| decays like rho^-(N+1) for N = 0, 1, 2"),
    Claim("expand.leading_coefficient", "leading stationary-phase coefficient", 1,
          "fitted rho^0 coefficient equals f(v)"),
    Claim("outfield.convergence_rate", "hyperboloid average converges to the shell operator", 2,
          "rescaled diamond-smeared field approaches the shell operator like 1/lambda"),
    Claim("outfield.limit_verdict", "existence of the out-field limit", None,
          "extrapolated limit reached and verdict is converged"),
    Claim("outfield.conjugation", "conjugation of hyperboloid smearing", None,
          "Psi(chi)[lam, f]^* equals Psi^*(conj chi)[lam, conj f] as matrices"),
    Claim("outfield.one_particle", "shell operator on the vacuum", 3,
          "Psi'_Lambda[f] Omega equals (2pi)^2 f(P/m) E_0 Psi Omega"),
    Claim("outfield.momentum_transfer", "momentum transfer of the out field", 4,
          "E(D2) Psi_out[f] E(D1) = 0 when D2 misses m supp f + D1"),
    Claim("rates.two_operator_product", "two-operator product on the vacuum", 10,
          "Psi_1^* Psi_2 Omega approaches the closed-form vacuum multiple"),
    Claim("rates.eta_independence", "independence of the time-averaging exponent", 10,
          "limits for two eta agree within the extrapolation error"),
    Claim("rates.commutator_limits", "asymptotic commutators of disjoint averages", None,
          "commutators of time-averaged fields with disjoint supports vanish quickly"),
    Claim("decay.commutator_template", "spacelike commutator decay template", None,
          "c/(r + |a| - |a0|)^kappa dominates the smeared commutator function"),
    Claim("decay.commutator_template_alt", "spacelike commutator decay template, smaller kappa", None,
          "template with the alternative kappa also dominates"),
    Claim("decay.boost_covariance", "decay template in a boosted frame", None,
          "the template fit passes for boosted test functions"),
    Claim("decay.smearing_narrow", "decay bounds under extra smearing", None,
          "narrow extra smearing changes the constant by a small amount"),
    Claim("decay.smearing_wide", "decay bounds under wide smearing", None,
          "wide extra smearing keeps the template satisfied"),
    Claim("decay.smearing_zero", "decay bounds under zero smearing", None,
          "zero smearing function gives a zero commutator"),
    Claim("decay.disjoint_hyperboloid", "disjoint hyperboloid averages commute asymptotically", 5,
          "commutator norms decay in lam1*lam2 uniformly over bounded ratios"),
    Claim("decay.overlap_diagonal", "diagonal hyperboloid commutator bound", 6,
          "one constant times the (v0)^3 overlap integral bounds the diagonal commutators"),
    Claim("cluster.wick_template", "cluster function template", 9,
          "|K| is dominated by c2 d^M / (|y| - |y0|)^eps on the hypothesis region"),
    Claim("cluster.elementary_vanishes", "cluster function of the elementary field", 9,
          "K vanishes for linear fields because their commutators are central"),
    Claim("cluster.fock_crosscheck", "cluster function Fock-matrix evaluation", 9,
          "matrix evaluation agrees with the contraction closed form"),
    Claim("cluster.ahr_doubling", "vacuum clustering envelope", None,
          "doubling |y| - |y0| lowers the correlation at least fourfold"),
    Claim("cluster.ahr_adjoint", "vacuum clustering for an operator and its adjoint", None,
          "correlation of B and B^* decays at large spacelike separation"),
    Claim("cluster.ahr_annihilator", "vacuum clustering for an annihilator", None,
          "correlation vanishes when the right operator annihilates the vacuum"),
    Claim("geom.inequalities", "geometric facts for scaled hyperboloid points", 8,
          "no violations in the random admissible sweep"),
    Claim("geom.difference_region", "difference set of velocity balls", 8,
          "all sampled differences lie in the bounding region"),
    Claim("lemma.random_matrices", "kernel-projector norm inequalities", 7,
          "no violations over random matrices"),
    Claim("lemma.jordan_equality", "kernel-projector bound for a Jordan block", 7,
          "2x2 nilpotent Jordan block attains equality"),
    Claim("harness.reproducible_csv", "byte-reproducible experiment tables", 11,
          "re-running a table-producing experiment yields identical CSV bytes"),
]

CLAIMS = {c.id: c for c in _CLAIMS}

# experiment name -> claim ids it produces
EXPERIMENT_CLAIMS = {
    "expand": ["expand.remainder_rates", "expand.leading_coefficient"],
    "outfield": ["outfield.convergence_rate", "outfield.limit_verdict", "outfield.conjugation",
                 "outfield.one_particle", "outfield.momentum_transfer"],
    "rates": ["rates.two_operator_product", "rates.eta_independence", "rates.commutator_limits"],
    "decay": ["decay.commutator_template", "decay.commutator_template_alt", "decay.boost_covariance",
              "decay.smearing_narrow", "decay.smearing_wide", "decay.smearing_zero",
              "decay.disjoint_hyperboloid", "decay.overlap_diagonal"],
    "cluster": ["cluster.wick_template", "cluster.elementary_vanishes", "cluster.fock_crosscheck",
                "cluster.ahr_doubling", "cluster.ahr_adjoint", "cluster.ahr_annihilator"],
    "geom": ["geom.inequalities", "geom.difference_region", "harness.reproducible_csv"],
    "lemma": ["lemma.random_matrices", "lemma.jordan_equality"],
}


def ref_for(claim_id: str) -> str:
    return CLAIMS[claim_id].ref


def claims_for_criterion(n: int) -> list:
    return [c.id for c in _CLAIMS if c.criterion == n]
