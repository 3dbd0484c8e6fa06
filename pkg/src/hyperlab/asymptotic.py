"""Hyperboloid-averaged fields, their time averages and large-lambda limits on
the free-field instance.

Every free-field operator here is linear in the ladder operators, so the work
happens on mode coefficients (``LinearField``) and matrices are built only to
take norms or to act on the truncated Fock space.  All modes of the lattice
lie exactly on the mass shell, so a mode k is evaluated at rho = lambda m and
v = k/m.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import sparse

from .freefield import (TWO_PI_SQ, FockBasis, LinearField, ModeGrid, OperatorMatrix, point_field,
                        projector_mask, smear_field)
from .minkowski import HyperboloidPoint, RejectedInput, hyperbolic_distance, minkowski_dot
from .oscillatory import (ROUNDING_FACTOR, QuadratureError, QuadratureSpec, RateFit, _gauss_panels,
                          _general_sphere_average, _radial_sphere_average, _s_range, fit_rate, prefactor)
from .profiles import RadialProfile, ScaledKernel, TimeKernel, diamond_transform, time_kernel_fourier, time_kernel_scaled

__all__ = ["RateFit", "fit_rate"]

PHASE = np.exp(-0.75j * np.pi)
DEFAULT_LAMBDA_GRID = np.geomspace(30.0, 300.0, 12)


@dataclass
class FreeFieldSetup:
    """Lattice, truncation and base field Psi shared by all constructions.

    ``base`` is the field being averaged (default phi at the origin);
    Delta is {p0 <= energy_cut * m} intersected with the particle numbers on
    which creation is not truncated.
    """

    grid: ModeGrid = field(default_factory=ModeGrid)
    n_max: int = 2
    max_dim: int = 10000
    base: LinearField | None = None
    energy_cut: float = 3.0
    spec: QuadratureSpec = field(default_factory=QuadratureSpec)

    def __post_init__(self):
        if self.base is None:
            self.base = point_field(self.grid)
        kk = self.grid.four_momenta
        root = np.sqrt(minkowski_dot(kk, kk))
        if np.max(np.abs(root - self.grid.mass)) > 1e-12 * self.grid.mass:
            raise RejectedInput("lattice modes are off the mass shell")

    @property
    def mass(self) -> float:
        return self.grid.mass

    @cached_property
    def basis(self) -> FockBasis:
        return FockBasis(self.grid, self.n_max, self.max_dim)

    @cached_property
    def delta_mask(self) -> np.ndarray:
        b = self.basis
        return (b.momenta[:, 0] <= self.energy_cut * self.mass + 1e-12) & (b.numbers <= self.n_max - 1)

    @cached_property
    def delta_projector(self):
        return sparse.diags(self.delta_mask.astype(complex), format="csr")

    @cached_property
    def directions(self) -> list:
        return [HyperboloidPoint(tuple(k / self.mass)) for k in self.grid.momenta]

    def matrix(self, fld: LinearField) -> OperatorMatrix:
        return fld.matrix(self.basis)

    def restricted_norm(self, fld: LinearField) -> float:
        """||A E(Delta)|| for a linear field A."""
        mat = fld.matrix(self.basis).mat @ self.delta_projector
        return OperatorMatrix(self.basis, mat).norm()


# -- hyperboloid averages ----------------------------------------------------

class ShellIntegrals:
    """e^{-i rho} I(f; rho, k/m), rho > 0, for many lattice modes on one shared s-grid.

    With s = sqrt(cosh r - 1) the sphere averages G_k(s) do not depend on rho,
    so the grid and G are built once and every rho (or every time average over
    rho) costs one matrix product.  The grid is refined until values at
    rho_max agree with the doubled grid to ``spec.abs_tol`` in units of |pref|.
    """

    def __init__(self, setup: FreeFieldSetup, f, modes, rho_max: float):
        self.modes = np.asarray(modes, dtype=int)
        spec = setup.spec
        dirs = [setup.directions[j] for j in self.modes]
        ranges = np.array([_s_range(f, v) for v in dirs]).reshape(-1, 2)
        s_lo = float(ranges[:, 0].min()) if len(ranges) else 0.0
        s_hi = float(ranges[:, 1].max()) if len(ranges) else 0.0
        self.empty = len(self.modes) == 0 or s_hi <= s_lo
        if self.empty:
            return
        radial = isinstance(f, RadialProfile)
        centre = np.array(f.center.vs) if radial else None

        if radial:
            # G depends on the mode only through its distance to the profile centre
            dist = np.array([float(hyperbolic_distance(np.array(v.vs), centre)) for v in dirs])
            keys, which = np.unique(np.round(dist, 13), return_inverse=True)
            first = [int(np.nonzero(which == i)[0][0]) for i in range(len(keys))]

        def build(panels, nx):
            s, w = _gauss_panels(s_lo, s_hi, panels, spec.panel_nodes)
            if radial:
                G = np.array([_radial_sphere_average(f, dist[i], s, nx) for i in first], dtype=complex)[which]
            else:
                G = np.array([_general_sphere_average(f, v, s, 32, 32) for v in dirs])
            return s, w[None, :] * 2.0 * s * s * np.sqrt(2.0 + s * s) * G

        probe = np.array([0.5 * rho_max, rho_max])
        periods = (s_hi - s_lo) * rho_max * s_hi / math.pi
        panels = max(4, int(math.ceil(periods * spec.oscillation_resolution / spec.panel_nodes)))
        nx = spec.inner_nodes
        s, amp = build(panels, nx)
        coarse = self._eval(s, amp, probe)
        scale = np.abs(prefactor(probe))
        while True:
            s2, amp2 = build(2 * panels, 2 * nx)
            fine = self._eval(s2, amp2, probe)
            err = float(np.max(np.abs(fine - coarse) / scale))
            floor = float(ROUNDING_FACTOR * np.finfo(float).eps * 2 * np.pi * np.max(np.sum(np.abs(amp2), axis=1))
                          / scale.min())
            if err <= max(spec.abs_tol, floor):
                self.s, self.amp = s2, amp2
                return
            panels *= 2
            nx *= 2
            if 2 * panels > spec.max_subdivisions:
                raise QuadratureError(f"tolerance {spec.abs_tol:g} not reached (achieved {err:.3g})",
                                      value=fine, achieved=err)
            s, amp, coarse = s2, amp2, fine

    @staticmethod
    def _eval(s, amp, rho):
        return 2.0 * np.pi * amp @ np.exp(1j * np.outer(s * s, rho))

    def values(self, rho) -> np.ndarray:
        """Shape (modes, len(rho))."""
        rho = np.atleast_1d(np.asarray(rho, dtype=float))
        if self.empty:
            return np.zeros((len(self.modes), len(rho)), dtype=complex)
        return self._eval(self.s, self.amp, rho)

    def weighted_sum(self, rho, weights) -> np.ndarray:
        """sum_j weights_j * values(rho_j), without forming the full table."""
        if self.empty:
            return np.zeros(len(self.modes), dtype=complex)
        rho = np.asarray(rho, dtype=float)
        kern = np.exp(1j * np.outer(self.s * self.s, rho)) @ np.asarray(weights)
        return 2.0 * np.pi * self.amp @ kern


def _integrals(setup, f, modes, rho_max, sign):
    """Integrals for I(f; sign*rho, .): negative rho uses conj I(conj f; |rho|, .)."""
    return ShellIntegrals(setup, f if sign > 0 else f.conj(), modes, rho_max)


def hyperboloid_average(setup: FreeFieldSetup, fld: LinearField, f, lams):
    """Coefficients of fld[lam, f] = (lam/2pi)^(3/2) int fld(lam v) f(v) dmu(v).

    Returns (create, annihilate) arrays of shape (len(lams), modes).
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    if np.any(lams <= 0):
        raise RejectedInput("lambda must be positive")
    M = setup.grid.size
    create = np.zeros((len(lams), M), dtype=complex)
    annihilate = np.zeros((len(lams), M), dtype=complex)
    if f.is_zero():
        return create, annihilate
    m = setup.mass
    rho = m * lams
    scale = (lams / (2 * np.pi)) ** 1.5 * np.exp(1j * rho)
    for sign, coeff, out in ((1.0, fld.create, create), (-1.0, fld.annihilate, annihilate)):
        modes = np.nonzero(coeff != 0)[0]
        if len(modes) == 0:
            continue
        table = _integrals(setup, f, modes, float(rho.max()), sign).values(rho)
        table = (table * scale[None, :]) if sign > 0 else np.conj(table * scale[None, :])
        out[:, modes] = (table * coeff[modes, None]).T
    return create, annihilate


def smeared_field(setup: FreeFieldSetup, chi, f, lam: float) -> LinearField:
    """Psi(chi)[lam, f] as mode coefficients."""
    base = smear_field(setup.base, chi)
    c, a = hyperboloid_average(setup, base, f, [lam])
    return LinearField(setup.grid, c[0], a[0], f"Psi(chi)[{lam:g},f]")


def hyperboloid_smear(setup: FreeFieldSetup, chi, f, lam: float) -> OperatorMatrix:
    """Matrix of Psi(chi)[lam, f] = Psi(F_lam)."""
    return setup.matrix(smeared_field(setup, chi, f, lam))


def conjugation_defect(setup: FreeFieldSetup, chi, f, lam: float) -> float:
    """max |Psi(chi)[lam,f]^* - Psi^*(conj chi)[lam, conj f]| over matrix entries."""
    from .profiles import ConjugateFunction

    lhs = hyperboloid_smear(setup, chi, f, lam).adjoint()
    base_adj = setup.base.adjoint()
    smeared = smear_field(base_adj, ConjugateFunction(chi))
    c, a = hyperboloid_average(setup, smeared, f.conj(), [lam])
    rhs = setup.matrix(LinearField(setup.grid, c[0], a[0]))
    return (lhs - rhs).max_entry()


def rescaled_sequence(setup: FreeFieldSetup, chi, f, lams):
    """Coefficients of e^{-i(lam m + 3pi/4)} Psi(chi^diamond)[lam, f] for each lam."""
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    base = smear_field(setup.base, diamond_transform(chi))
    c, a = hyperboloid_average(setup, base, f, lams)
    phase = (PHASE * np.exp(-1j * lams * setup.mass))[:, None]
    return c * phase, a * phase


def _as_fields(setup, create, annihilate, label):
    return [LinearField(setup.grid, c, a, label) for c, a in zip(create, annihilate)]


# -- primed and time-averaged fields ----------------------------------------

@dataclass(frozen=True)
class PrimedField:
    field: LinearField
    operator: OperatorMatrix
    shell_exact: bool


def primed_coefficients(setup: FreeFieldSetup, chi, f, h: TimeKernel, Lambda: float) -> tuple:
    """int h~(Lambda[sqrt(p^2)-m]) chi_hat(p) f(p/sqrt p^2) Psi(p) dp on the lattice."""
    if Lambda <= 0:
        raise RejectedInput("Lambda must be positive")
    kk = setup.grid.four_momenta
    m = setup.mass
    root = np.sqrt(minkowski_dot(kk, kk))
    offshell = root - m
    exact = bool(np.all(np.abs(offshell) <= 1e-12 * m))
    htil = time_kernel_fourier(h, Lambda * offshell)
    htil = np.broadcast_to(htil, (setup.grid.size,))
    fv = np.asarray(f(setup.grid.momenta / root[:, None]), dtype=complex)
    create = TWO_PI_SQ * htil * np.asarray(chi.hat(kk)) * fv * setup.base.create
    # -k lies on the lower shell where f(p/sqrt p^2) vanishes
    annihilate = np.zeros(setup.grid.size, dtype=complex)
    return LinearField(setup.grid, create, annihilate, "Psi'"), exact


def primed_field(setup: FreeFieldSetup, chi, f, h: TimeKernel, Lambda: float) -> PrimedField:
    fld, exact = primed_coefficients(setup, chi, f, h, Lambda)
    return PrimedField(fld, setup.matrix(fld), exact)


def _kernel_average(setup, chi, f, kern: ScaledKernel, tol: float, nodes: int = 16, max_panels: int = 4096):
    lo, hi = kern.support
    if lo <= 0:
        raise RejectedInput("kernel support must lie in lambda > 0")
    base = smear_field(setup.base, diamond_transform(chi))
    m = setup.mass
    M = setup.grid.size
    parts = []
    for sign, coeff in ((1.0, base.create), (-1.0, base.annihilate)):
        modes = np.nonzero(coeff != 0)[0]
        if len(modes) and not f.is_zero():
            parts.append((sign, modes, coeff[modes], _integrals(setup, f, modes, m * hi, sign)))

    def evaluate(panels):
        lam, w = kern.nodes(nodes, panels)
        g = w * (lam / (2 * np.pi)) ** 1.5
        out = {1.0: np.zeros(M, dtype=complex), -1.0: np.zeros(M, dtype=complex)}
        for sign, modes, coeff, ints in parts:
            if sign > 0:
                out[sign][modes] = PHASE * ints.weighted_sum(m * lam, g) * coeff
            else:
                # e^{-i lam m} conj(e^{i lam m} V) = conj(e^{2 i lam m} V)
                out[sign][modes] = PHASE * np.conj(ints.weighted_sum(m * lam, g * np.exp(2j * m * lam))) * coeff
        return out[1.0], out[-1.0]

    panels = 2
    prev = evaluate(panels)
    while True:
        panels *= 2
        if panels > max_panels:
            raise RuntimeError("time average did not converge")
        cur = evaluate(panels)
        scale = max(1.0, float(np.max(np.abs(cur[0]))), float(np.max(np.abs(cur[1]))))
        err = max(float(np.max(np.abs(cur[0] - prev[0]))), float(np.max(np.abs(cur[1] - prev[1]))))
        if err <= tol * scale:
            return cur
        prev = cur


def time_averaged_field(setup: FreeFieldSetup, chi, f, h: TimeKernel, Lambda: float, eta: float = 1.0,
                        tol: float = 1e-11) -> LinearField:
    """Psi^eta_Lambda[f] = int h^eta_Lambda(lam) e^{-i(lam m+3pi/4)} Psi(chi^diamond)[lam, f] dlam."""
    kern = time_kernel_scaled(h, Lambda, eta, setup.mass)
    c, a = _kernel_average(setup, chi, f, kern, tol)
    return LinearField(setup.grid, c, a, f"Psi^{eta:g}_{Lambda:g}[f]")


# -- extrapolation ------------------------------------------------------------

@dataclass
class Extrapolation:
    limit: np.ndarray
    error: float
    vanishing: np.ndarray
    method: str


def _vanishing_components(lams, values, min_slope=-1.0):
    """Components whose modulus decays with an accelerating log-log slope.

    Sequences tending to a nonzero constant flatten; sequences with zero
    limit and no power-law terms (all expansion coefficients zero) steepen.
    """
    mag = np.abs(values)
    zero = np.all(mag == 0, axis=0)
    out = zero.copy()
    half = len(lams) // 2
    lx = np.log(lams)
    live = np.nonzero(~zero & np.all(mag > 0, axis=0))[0]
    if len(live) and half >= 2:
        ly = np.log(mag[:, live])
        s1 = np.polyfit(lx[:half], ly[:half], 1)[0]
        s2 = np.polyfit(lx[half:], ly[half:], 1)[0]
        out[live] = (s2 < min_slope) & (s2 < s1)
    return out


def extrapolate(lams, values) -> Extrapolation:
    """Richardson limit of values(lam) = L + a/lam + ..., per component.

    ``values`` has shape (len(lams), n).  Components classified as vanishing
    get the limit 0.  The error estimate is the change between the last two
    Richardson values.
    """
    lams = np.asarray(lams, dtype=float)
    values = np.asarray(values)
    if len(lams) < 3 or np.any(np.diff(lams) <= 0):
        raise ValueError("need at least three increasing abscissae")
    van = _vanishing_components(lams, values)

    def rich(i):
        return (lams[i] * values[i] - lams[i - 1] * values[i - 1]) / (lams[i] - lams[i - 1])

    r1, r0 = rich(-1), rich(-2)
    limit = np.where(van, 0.0, r1)
    err = float(np.linalg.norm(np.where(van, 0.0, r1 - r0)))
    return Extrapolation(limit, err, van, "richardson")


@dataclass
class OutFieldResult:
    limit: OperatorMatrix
    field: LinearField
    rate: RateFit
    shell_rate: RateFit
    error: float
    verdict: str
    vanishing_modes: np.ndarray
    lams: np.ndarray
    norms: np.ndarray
    shell_norms: np.ndarray

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "error": self.error, "rate": self.rate.to_dict(),
                "shell_rate": self.shell_rate.to_dict()}


def out_field(setup: FreeFieldSetup, chi, f, lams=None, h: TimeKernel | None = None,
              require_plateau: bool = True) -> OutFieldResult:
    """Limit of e^{-i(lam m+3pi/4)} Psi(chi^diamond)[lam, f] E(Delta) along ``lams``.

    The rate fits ||(X(lam) - limit) E(Delta)||; the shell rate fits the
    distance to the primed (shell) operator.  A sequence that does not
    approach its extrapolated value gives the verdict "no asymptotic field".
    """
    if require_plateau and not (getattr(chi, "plateau", False) and chi.covers(f, setup.mass)):
        raise RejectedInput("chi_hat must equal one on a neighbourhood of m supp f")
    lams = DEFAULT_LAMBDA_GRID if lams is None else np.asarray(lams, dtype=float)
    c, a = rescaled_sequence(setup, chi, f, lams)
    M = setup.grid.size
    ext = extrapolate(lams, np.concatenate([c, a], axis=1))
    fld = LinearField(setup.grid, ext.limit[:M], ext.limit[M:], "Psi_out[f]")
    seq = _as_fields(setup, c, a, "X")
    norms = np.array([setup.restricted_norm(x - fld) for x in seq])
    rate = fit_rate(lams, norms)
    primed, _ = primed_coefficients(setup, chi, f, h or TimeKernel(), float(lams[-1]))
    shell_norms = np.array([setup.restricted_norm(x - primed) for x in seq])
    shell_rate = fit_rate(lams, shell_norms)
    scale = max(float(np.max(norms)), 1e-300)
    if rate.zeros == len(lams) or float(np.max(norms)) == 0.0:
        verdict = "converged"
    elif rate.slope >= 0 or norms[-1] >= 0.5 * scale and rate.slope > -0.2:
        verdict = "no asymptotic field"
    else:
        verdict = "converged"
    return OutFieldResult(setup.matrix(fld), fld, rate, shell_rate, ext.error, verdict, ext.vanishing[:M],
                          lams, norms, shell_norms)


def chi_independence(setup: FreeFieldSetup, chi1, chi2, f, lams=None, factor: float = 10.0,
                     floor: float = 1e-12) -> dict:
    """Compare out-field limits obtained with two admissible chi."""
    r1 = out_field(setup, chi1, f, lams)
    r2 = out_field(setup, chi2, f, lams)
    diff = setup.restricted_norm(r1.field - r2.field)
    bound = factor * (r1.error + r2.error) + floor
    return {"difference": diff, "bound": bound, "errors": [r1.error, r2.error], "agree": diff <= bound}


# -- momentum transfer -------------------------------------------------------

def shell_support_box(f, m: float) -> tuple:
    """Exact coordinate bounding box of m * (closed hyperbolic ball of f)."""
    c = np.asarray(f.center.vs, dtype=float)
    R = f.radius
    c0 = math.sqrt(1.0 + c @ c)
    eta = math.asinh(math.sqrt(c @ c))
    ch, sh = math.cosh(R), math.sinh(R)
    lo = [math.cosh(max(eta - R, 0.0))]
    hi = [ch * c0 + sh * math.sqrt(c @ c)]
    for ci in c:
        spread = sh * math.sqrt(1.0 + ci * ci)
        lo.append(ch * ci - spread)
        hi.append(ch * ci + spread)
    return m * np.array(lo), m * np.array(hi)


def _boxes_disjoint(lo1, hi1, lo2, hi2):
    return bool(np.any(hi1 < lo2) or np.any(hi2 < lo1))


def random_region_pairs(rng: np.random.Generator, setup: FreeFieldSetup, f, n: int, max_tries: int = 100000):
    """Box pairs (Delta1, Delta2) with Delta2 - Delta1 disjoint from the box of m supp f.

    Both boxes are required to contain at least one basis state and to be
    such that the test is not vacuous: some mode outside m supp f links them.
    """
    P = setup.basis.momenta
    flo, fhi = shell_support_box(f, setup.mass)
    kk = setup.grid.four_momenta
    pairs = []
    tries = 0
    while len(pairs) < n:
        tries += 1
        if tries > max_tries:
            raise RuntimeError("could not generate region pairs")
        i1, i2 = rng.integers(len(P), size=2)
        w1 = rng.uniform(0.05, 0.8, size=4) * setup.mass
        w2 = rng.uniform(0.05, 0.8, size=4) * setup.mass
        lo1, hi1 = P[i1] - w1, P[i1] + w1
        lo2, hi2 = P[i2] - w2, P[i2] + w2
        dlo, dhi = lo2 - hi1, hi2 - lo1
        if not _boxes_disjoint(dlo, dhi, flo, fhi):
            continue
        link = np.all((kk >= dlo) & (kk <= dhi), axis=1)
        if not link.any():
            continue
        pairs.append(((lo1, hi1), (lo2, hi2)))
    return pairs


def projected_max_entry(op: OperatorMatrix, region1, region2) -> float:
    """max |E(Delta2) A E(Delta1)| entry for box regions."""
    P = op.basis.momenta
    m1 = np.all((P >= region1[0]) & (P <= region1[1]), axis=1)
    m2 = np.all((P >= region2[0]) & (P <= region2[1]), axis=1)
    sub = op.mat[np.nonzero(m2)[0]][:, np.nonzero(m1)[0]]
    return float(np.max(np.abs(sub.data))) if sub.nnz else 0.0


def difference_transfer_check(setup: FreeFieldSetup, op: OperatorMatrix, nu: float, rng: np.random.Generator,
                              n: int = 20) -> dict:
    """E(Delta2) op E(Delta1) for boxes with Delta2 - Delta1 outside m (D_nu - D_nu)."""
    from .minkowski import support_difference_bound

    region = support_difference_bound(nu)
    P = op.basis.momenta
    worst, used, tries = 0.0, 0, 0
    while used < n and tries < 200000:
        tries += 1
        i1, i2 = rng.integers(len(P), size=2)
        m1 = np.all(np.abs(P - P[i1]) <= 0.3 * setup.mass, axis=1)
        m2 = np.all(np.abs(P - P[i2]) <= 0.3 * setup.mass, axis=1)
        diffs = P[np.nonzero(m2)[0]][:, None, :] - P[np.nonzero(m1)[0]][None, :, :]
        if np.any(region.contains(diffs.reshape(-1, 4) / setup.mass)):
            continue
        sub = op.mat[np.nonzero(m2)[0]][:, np.nonzero(m1)[0]]
        worst = max(worst, float(np.max(np.abs(sub.data))) if sub.nnz else 0.0)
        used += 1
    return {"pairs": used, "max_entry": worst}


# -- norm bound and one-particle limit ----------------------------------------

def weighted_profile_norm(f, n_radial: int = 48, n_polar: int = 32, n_azimuth: int = 32) -> float:
    """|| (v0)^(3/2) f ||_{L2(H+, dmu)} by ball quadrature."""
    from .minkowski import ball_quadrature

    pts, w, _ = ball_quadrature(f.center, f.radius, n_radial, n_polar, n_azimuth)
    v0 = np.sqrt(1.0 + np.sum(pts * pts, axis=1))
    return float(math.sqrt(np.sum(w * v0 ** 3 * np.abs(f(pts)) ** 2)))


def norm_bound_fit(setup: FreeFieldSetup, chi_for, profiles, h: TimeKernel | None = None) -> dict:
    """Ratios ||Psi_out[f] E(Delta)|| / ||(v0)^(3/2) f|| over a family of f.

    Uses the primed (shell) operator, which equals the out-field limit on the
    free instance.
    """
    h = h or TimeKernel()
    ratios = []
    for f in profiles:
        fld, _ = primed_coefficients(setup, chi_for(f), f, h, 1.0)
        ratios.append(setup.restricted_norm(fld) / weighted_profile_norm(f))
    ratios = np.array(ratios)
    return {"ratios": ratios, "C": float(ratios.max()), "spread": float(ratios.max() / ratios.min())}


def one_particle_defect(setup: FreeFieldSetup, chi, f, h: TimeKernel, Lambda: float) -> float:
    """|| Psi'_Lambda[f] Omega - (2pi)^2 f(P/m) E_0 Psi Omega ||."""
    basis = setup.basis
    lhs = primed_field(setup, chi, f, h, Lambda).operator.mat @ basis.vacuum
    psi_omega = setup.base.one_particle_vector(basis)
    P = basis.momenta
    p2 = minkowski_dot(P, P)
    on_shell = (P[:, 0] > 0) & (np.abs(np.sqrt(np.maximum(p2, 0)) - setup.mass) <= 1e-9 * setup.mass)
    root = np.sqrt(np.where(on_shell, p2, 1.0))
    fP = np.where(on_shell, np.asarray(f(P[:, 1:] / root[:, None]), dtype=complex), 0.0)
    rhs = TWO_PI_SQ * fP * psi_omega
    return float(np.linalg.norm(lhs - rhs))


def spectral_condition_profile(setup: FreeFieldSetup, fld: LinearField, mus) -> np.ndarray:
    """|| (E_mu - E_0) Psi Omega || for each mu."""
    from .freefield import region_shell

    vec = fld.one_particle_vector(setup.basis)
    e0 = projector_mask(setup.basis, region_shell(setup.mass, 0.0))
    out = []
    for mu in mus:
        emu = projector_mask(setup.basis, region_shell(setup.mass, mu))
        out.append(float(np.linalg.norm(vec[emu & ~e0])))
    return np.array(out)


# -- commutator limits ------------------------------------------------------

def support_gap(f1, f2) -> float:
    """gamma_12 with cosh gamma_12 = inf v1.v2 over the two supports."""
    d = float(hyperbolic_distance(np.array(f1.center.vs), np.array(f2.center.vs)))
    return d - f1.radius - f2.radius


def _apply_sharp(fld: LinearField, star: bool) -> LinearField:
    return fld.adjoint() if star else fld


@dataclass
class CommutatorReport:
    Lambdas: np.ndarray
    norms: dict
    rates: dict
    double_norms: np.ndarray | None
    gap: float
    norm_kind: str = "c-number modulus"

    def to_dict(self) -> dict:
        return {"gap": self.gap, "norm_kind": self.norm_kind,
                "rates": {k: v.to_dict() for k, v in self.rates.items()},
                "double_commutator_max": None if self.double_norms is None else float(np.max(self.double_norms))}


def double_commutator_norm(setup: FreeFieldSetup, A: LinearField, B: LinearField, C: LinearField) -> float:
    """||[A, [B, C]] E|| with E onto particle numbers untouched by the truncation."""
    basis = setup.basis
    keep = np.nonzero(setup.delta_mask & (basis.numbers <= basis.n_max - 2))[0]
    a, b, c = (setup.matrix(x).mat for x in (A, B, C))
    cols = sparse.identity(basis.dim, dtype=complex, format="csr")[:, keep]
    inner = b @ (c @ cols) - c @ (b @ cols)
    outer = a @ inner - (b @ (c @ (a @ cols)) - c @ (b @ (a @ cols)))
    if outer.shape[1] == 0:
        return 0.0
    return float(np.linalg.norm(outer.toarray(), 2))


def check_kernel_gap(h1: TimeKernel, h2: TimeKernel, gap: float):
    """Reject kernel supports allowing lambda1/lambda2 outside [e^-gap, e^gap]."""
    ratio = max(h1.tau2 / h2.tau1, h2.tau2 / h1.tau1)
    if gap <= 0:
        raise RejectedInput("supports are not disjoint (gamma_12 <= 0)")
    if math.log(ratio) >= gap:
        raise RejectedInput(f"kernel supports allow log-ratio {math.log(ratio):.3g} >= gamma_12 = {gap:.3g}")


def asymptotic_commutator_check(setup: FreeFieldSetup, chi, f1, f2, Lambdas, h1: TimeKernel, h2: TimeKernel,
                                f3=None, eta: float = 1.0) -> CommutatorReport:
    """||[Psi_1Lambda[f1]#, Psi_2Lambda[f2]#] E(Delta)|| for all four # choices.

    Free-field commutators of linear fields are multiples of the identity, so
    the norm is the modulus of the c-number.  With ``f3`` the double
    commutator [Psi_1, [Psi_2, Psi_3]] is evaluated as well.
    """
    gap = support_gap(f1, f2)
    check_kernel_gap(h1, h2, gap)
    Lambdas = np.asarray(Lambdas, dtype=float)
    norms = {(s1, s2): [] for s1 in (False, True) for s2 in (False, True)}
    doubles = [] if f3 is not None else None
    for L in Lambdas:
        A = time_averaged_field(setup, chi, f1, h1, L, eta)
        B = time_averaged_field(setup, chi, f2, h2, L, eta)
        for s1, s2 in norms:
            norms[(s1, s2)].append(abs(_apply_sharp(A, s1).commutator(_apply_sharp(B, s2))))
        if f3 is not None:
            C = time_averaged_field(setup, chi, f3, h2, L, eta)
            doubles.append(double_commutator_norm(setup, A, B, C))
    names = {(False, False): "Psi1,Psi2", (False, True): "Psi1,Psi2*", (True, False): "Psi1*,Psi2",
             (True, True): "Psi1*,Psi2*"}
    norms_named = {names[k]: np.array(v) for k, v in norms.items()}
    rates = {k: fit_rate(Lambdas, v) for k, v in norms_named.items()}
    return CommutatorReport(Lambdas, norms_named, rates, None if doubles is None else np.array(doubles), gap)


# -- two-operator products ---------------------------------------------------

@dataclass
class ProductReport:
    Lambdas: np.ndarray
    values: np.ndarray
    rhs: complex
    residuals: np.ndarray
    relative: np.ndarray
    rate: RateFit

    def to_dict(self) -> dict:
        return {"rhs": [self.rhs.real, self.rhs.imag], "final_relative_residual": float(self.relative[-1]),
                "final_residual": float(self.residuals[-1]), "rate": self.rate.to_dict()}


def two_operator_rhs(setup: FreeFieldSetup, f1, f2, base1: LinearField | None = None,
                     base2: LinearField | None = None) -> complex:
    """(2pi)^4 (Psi1 Omega, (conj f1 f2)(P/m) E_0 Psi2 Omega)."""
    b1 = base1 or setup.base
    b2 = base2 or setup.base
    v = setup.grid.momenta / setup.mass
    w = np.conj(np.asarray(f1(v), dtype=complex)) * np.asarray(f2(v), dtype=complex)
    return complex(TWO_PI_SQ ** 2 * np.sum(np.conj(b1.create) * w * b2.create))


def two_operator_product_check(setup: FreeFieldSetup, chi, f1, f2, Lambdas, h: TimeKernel,
                               eta: float = 1.0 / 3.0) -> ProductReport:
    """Psi^eta_1Lambda[f1]^* Psi^eta_2Lambda[f2] Omega against the closed-form limit times Omega."""
    if not (0 < eta <= 1):
        raise RejectedInput("eta must lie in (0, 1]")
    basis = setup.basis
    Lambdas = np.asarray(Lambdas, dtype=float)
    rhs = two_operator_rhs(setup, f1, f2)
    vals, res = [], []
    target = np.zeros(basis.dim, dtype=complex)
    target[0] = rhs
    for L in Lambdas:
        A = setup.matrix(time_averaged_field(setup, chi, f1, h, L, eta))
        B = setup.matrix(time_averaged_field(setup, chi, f2, h, L, eta))
        vec = A.adjoint().mat @ (B.mat @ basis.vacuum)
        vals.append(vec[0])
        res.append(float(np.linalg.norm(vec - target)))
    res = np.array(res)
    rel = res / abs(rhs) if rhs != 0 else res
    return ProductReport(Lambdas, np.array(vals), rhs, res, rel, fit_rate(Lambdas, res))


def eta_comparison(setup: FreeFieldSetup, chi, f, Lambdas, h: TimeKernel, etas=(0.5, 1.0),
                   factor: float = 10.0, floor: float = 1e-12) -> dict:
    """Psi^eta_Lambda[f] Omega for two eta: distance along Lambda and agreement of the extrapolated limits."""
    Lambdas = np.asarray(Lambdas, dtype=float)
    seqs = {}
    for eta in etas:
        seqs[eta] = np.array([time_averaged_field(setup, chi, f, h, L, eta).create for L in Lambdas])
    e1, e2 = etas
    dist = np.linalg.norm(seqs[e1] - seqs[e2], axis=1)
    x1 = extrapolate(Lambdas, seqs[e1])
    x2 = extrapolate(Lambdas, seqs[e2])
    diff = float(np.linalg.norm(x1.limit - x2.limit))
    bound = factor * (x1.error + x2.error) + floor
    return {"distance": dist, "rate": fit_rate(Lambdas, dist), "limit_difference": diff,
            "errors": [x1.error, x2.error], "bound": bound, "agree": diff <= bound}
