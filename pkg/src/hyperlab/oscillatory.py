"""Oscillatory integrals over H+ and their large-rho expansion.

The central object is

    I(f; rho, v) = int f(u) exp(i rho v.u) dmu(u)

which for large rho behaves like pref(rho) * sum_k rho^-k L_k f(v) with
pref(rho) = exp(3 pi i/4) (2 pi/rho)^(3/2) exp(i rho).

Quadrature works in normal coordinates about v: with r the geodesic distance
from v and s = sqrt(cosh r - 1) the phase becomes rho (1 + s^2), and

    I = 2 pi exp(i rho) int 2 s^2 sqrt(2 + s^2) exp(i rho s^2) G(s) ds

where G(s) is the sphere average of f at distance r (times 2).  G does not
depend on rho, so a whole rho grid costs one evaluation of G.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline

from .minkowski import HyperboloidPoint, LorentzBoost, ball_quadrature, hyperbolic_distance
from .profiles import HyperboloidProfile, RadialProfile
from .series import radial_laplacian_powers, spherical_mean_coefficients


class QuadratureError(RuntimeError):
    """Tolerance not reached; carries the best estimate and achieved error."""

    def __init__(self, message, value=None, achieved=None):
        super().__init__(message)
        self.value = value
        self.achieved = achieved


class FitConditionError(RuntimeError):
    def __init__(self, message, condition):
        super().__init__(message)
        self.condition = condition


class CorrectionBudgetError(RuntimeError):
    pass


@dataclass(frozen=True)
class QuadratureSpec:
    """abs_tol bounds the error of I / |pref(rho)|, i.e. of the bracket in the
    expansion.  max_subdivisions caps the number of radial panels."""

    abs_tol: float = 1e-9
    max_subdivisions: int = 1 << 14
    oscillation_resolution: int = 8
    panel_nodes: int = 16
    inner_nodes: int = 64

    def __post_init__(self):
        if self.abs_tol <= 0:
            raise ValueError("abs_tol must be positive")
        if self.oscillation_resolution < 8:
            raise ValueError("need at least 8 nodes per phase period")

    def to_config(self) -> dict:
        return {"abs_tol": self.abs_tol, "max_subdivisions": self.max_subdivisions,
                "oscillation_resolution": self.oscillation_resolution}


def prefactor(rho):
    rho = np.asarray(rho, dtype=float)
    return np.exp(0.75j * np.pi) * (2 * np.pi / rho) ** 1.5 * np.exp(1j * rho)


DEFAULT_RHO_GRID = np.geomspace(30.0, 300.0, 17)
# the fitted corrections cross-check two interleaved halves, each of which must span a decade
FIT_RHO_GRID = np.geomspace(20.0, 400.0, 25)

# accepted error never needs to beat this multiple of eps times the summand size
ROUNDING_FACTOR = 64.0


@lru_cache(maxsize=64)
def leggauss(n: int):
    """Cached Gauss-Legendre nodes and weights on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _gauss_panels(lo, hi, panels, nodes):
    x, w = leggauss(nodes)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    pts = (mid[:, None] + half[:, None] * x[None, :]).reshape(-1)
    wts = (half[:, None] * w[None, :]).reshape(-1)
    return pts, wts


def _radial_sphere_average(f, a, s, nx):
    """G(s) for a radial profile whose centre sits at distance a from v."""
    cosh_r = 1.0 + s * s
    r = np.arccosh(cosh_r)
    sinh_r = s * np.sqrt(2.0 + s * s)
    if a == 0.0:
        return 2.0 * f.radial(r)
    sinh_a = math.sinh(a)
    # cosh d - 1 = 2 sinh^2((r-a)/2) + sinh r sinh a (1 - x)
    base = 2.0 * np.sinh(0.5 * (r - a)) ** 2
    room = (math.cosh(f.radius) - 1.0) - base
    span = np.clip(room / (sinh_r * sinh_a), 0.0, 2.0)  # length of the x interval
    xg, wg = leggauss(nx)
    t = 0.5 * (xg + 1.0)  # fraction of the interval, measured from x = 1
    one_minus_x = span[:, None] * t[None, :]
    cd1 = base[:, None] + (sinh_r * sinh_a)[:, None] * one_minus_x
    d = 2.0 * np.arcsinh(np.sqrt(0.5 * np.maximum(cd1, 0.0)))
    vals = f.radial(d)
    return (vals * (0.5 * wg)[None, :]).sum(axis=1) * span


def _general_sphere_average(f, v, s, n_polar, n_azimuth):
    r = np.arccosh(1.0 + s * s)
    c, wc = leggauss(n_polar)
    phi = 2 * np.pi * np.arange(n_azimuth) / n_azimuth
    st = np.sqrt(1 - c * c)
    dirs = np.stack([st[:, None] * np.cos(phi)[None, :], st[:, None] * np.sin(phi)[None, :],
                     np.broadcast_to(c[:, None], (n_polar, n_azimuth))], axis=-1).reshape(-1, 3)
    wdir = np.repeat(wc, n_azimuth) / n_azimuth
    boost = LorentzBoost.to_point(v)
    out = np.empty(len(s), dtype=complex)
    for i, ri in enumerate(r):
        local = np.concatenate([np.full((len(dirs), 1), np.cosh(ri)), np.sinh(ri) * dirs], axis=1)
        pts = boost.apply(local)[:, 1:]
        out[i] = np.sum(wdir * f(pts))
    return out


def _s_range(f, v):
    """Range of s = sqrt(cosh r - 1) covering supp f, r the distance from v."""
    if isinstance(f, RadialProfile):
        balls = [(f.center, f.radius)]
    else:
        balls = f.support_balls()
    lo, hi = np.inf, 0.0
    for center, radius in balls:
        a = hyperbolic_distance(np.array(v.vs), np.array(center.vs))
        lo = min(lo, max(0.0, a - radius))
        hi = max(hi, a + radius)
    if not isinstance(f, RadialProfile):
        lo = 0.0
    return math.sqrt(math.cosh(lo) - 1.0), math.sqrt(math.cosh(hi) - 1.0)


def _oscillatory_sum(s, w, G, rho):
    amp = w * 2.0 * s * s * np.sqrt(2.0 + s * s) * G
    phase = np.exp(1j * np.outer(rho, s * s))
    # second value: size of the summands, which sets the rounding floor
    return 2.0 * np.pi * np.exp(1j * rho) * (phase @ amp), 2.0 * np.pi * np.sum(np.abs(amp))


def integrate_wavepacket(f, rho, v: HyperboloidPoint, spec: QuadratureSpec | None = None,
                         n_polar: int = 48, n_azimuth: int = 48):
    """I(f; rho, v) for scalar or array rho (negative rho allowed).

    Radial profiles use a sphere average along the geodesic circle; any other
    callable (e.g. a ProfileSum) uses a full polar/azimuth sphere quadrature.
    """
    spec = spec or QuadratureSpec()
    scalar = np.ndim(rho) == 0
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    out = np.zeros(rho.shape, dtype=complex)
    if f.is_zero():
        return out[0] if scalar else out
    if np.any(rho == 0):
        raise ValueError("rho must be nonzero")
    pos, neg = rho > 0, rho < 0
    if np.any(pos):
        out[pos] = _integrate_positive(f, rho[pos], v, spec, n_polar, n_azimuth)
    if np.any(neg):
        out[neg] = np.conj(_integrate_positive(f.conj(), -rho[neg], v, spec, n_polar, n_azimuth))
    return out[0] if scalar else out


def _integrate_positive(f, rho, v, spec, n_polar, n_azimuth):
    s_lo, s_hi = _s_range(f, v)
    if s_hi <= s_lo:
        return np.zeros(len(rho), dtype=complex)
    radial = isinstance(f, RadialProfile)
    if radial:
        a = hyperbolic_distance(np.array(v.vs), np.array(f.center.vs))

    def estimate(panels, nx):
        s, w = _gauss_panels(s_lo, s_hi, panels, spec.panel_nodes)
        if radial:
            G = _radial_sphere_average(f, a, s, nx)
        else:
            G = _general_sphere_average(f, v, s, n_polar, n_azimuth)
        return _oscillatory_sum(s, w, G, rho)

    rmax = float(np.max(rho))
    # local phase frequency rho * 2 s peaks at s_hi
    periods = (s_hi - s_lo) * rmax * s_hi / math.pi
    panels = max(4, int(math.ceil(periods * spec.oscillation_resolution / spec.panel_nodes)))
    scale = np.abs(prefactor(rho))
    nx = spec.inner_nodes
    coarse, _ = estimate(panels, nx)
    while True:
        fine, size = estimate(2 * panels, 2 * nx if radial else nx)
        err = float(np.max(np.abs(fine - coarse) / scale))
        floor = float(np.max(ROUNDING_FACTOR * np.finfo(float).eps * size / scale))
        if err <= max(spec.abs_tol, floor):
            return fine
        panels *= 2
        if 2 * panels > spec.max_subdivisions:
            raise QuadratureError(f"tolerance {spec.abs_tol:g} not reached (achieved {err:.3g})",
                                  value=fine, achieved=err)
        coarse = fine


def integrate_wavepacket_tensor(f, rho, v: HyperboloidPoint, n_radial=96, n_polar=64, n_azimuth=64):
    """Independent scheme: fixed tensor grid in geodesic polar coordinates about
    the profile centre, with the phase exp(i rho v.u) evaluated directly."""
    pts, wts, _ = ball_quadrature(f.center, f.radius, n_radial, n_polar, n_azimuth)
    u0 = np.sqrt(1 + np.sum(pts * pts, axis=1))
    vu = v.v0 * u0 - pts @ np.array(v.vs)
    vals = f(pts) * wts
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    res = np.exp(1j * np.outer(rho, vu)) @ vals
    return res[0] if res.size == 1 else res


# -- closed-form expansion coefficients ---------------------------------------

def _double_factorial_ratio(k):
    # (2/sqrt(pi)) Gamma(k + 3/2) = (2k+1)!! / 2^k
    return math.prod(range(1, 2 * k + 2, 2)) / 2 ** k


def expansion_operators(kmax: int) -> list:
    """L_k as complex polynomials in the Laplacian of H+ (lowest degree first).

    L_k = i^k (2k+1)!!/2^k p_k(Delta + 1) with p_k from
    series.spherical_mean_coefficients.
    """
    polys = spherical_mean_coefficients(kmax)
    ops = []
    for k, p in enumerate(polys):
        coeffs = np.zeros(len(p), dtype=complex)
        for n, c in enumerate(p):
            for j in range(n + 1):
                coeffs[j] += float(c) * math.comb(n, j)
        ops.append((1j) ** k * _double_factorial_ratio(k) * coeffs)
    return ops


def _poly_mul(a, b):
    return np.convolve(a, b)


def correction_polynomials(N: int) -> list:
    """Polynomials Q_k in the Laplacian with f_k = Q_k(Delta) f."""
    ops = expansion_operators(N)
    Q = [np.array([1.0 + 0j])]
    for k in range(1, N + 1):
        acc = np.zeros(1, dtype=complex)
        for j in range(k):
            term = _poly_mul(ops[k - j], Q[j])
            if len(term) > len(acc):
                acc = np.pad(acc, (0, len(term) - len(acc)))
            acc[:len(term)] -= term
        Q.append(acc)
    return Q


def apply_laplacian_polynomial(f: HyperboloidProfile, coeffs, d):
    """(sum_j coeffs[j] Delta^j f) at geodesic distances d from the centre of f."""
    d = np.atleast_1d(np.asarray(d, dtype=float))
    J = len(coeffs) - 1
    inside = d < f.radius
    out = np.zeros(d.shape, dtype=complex)
    if np.any(inside):
        jets = f.radial_jet(d[inside], 2 * J + 2)
        lap = radial_laplacian_powers(jets, d[inside], J)
        out[inside] = np.tensordot(np.asarray(coeffs), lap, axes=(0, 0))
    return out


def closed_form_coefficients(f: HyperboloidProfile, v: HyperboloidPoint, kmax: int) -> np.ndarray:
    """L_k f(v) for k = 0..kmax from the Laplacian-polynomial representation."""
    d = f.distance(v)
    return np.array([apply_laplacian_polynomial(f, op, d)[0] for op in expansion_operators(kmax)])


# -- fitted expansion coefficients -------------------------------------------

@dataclass(frozen=True)
class LkFit:
    coefficients: np.ndarray
    condition: float
    residual_rms: float
    rho_grid: np.ndarray


def extract_Lk(f, v: HyperboloidPoint, kmax: int = 3, rho_grid=None,
               spec: QuadratureSpec | None = None, max_condition: float = 1e8) -> LkFit:
    """Least-squares fit of I/pref on a rho grid to sum_k c_k rho^-k."""
    if not 0 <= kmax <= 3:
        raise ValueError("kmax must lie in 0..3")
    rho = np.asarray(DEFAULT_RHO_GRID if rho_grid is None else rho_grid, dtype=float)
    if rho.min() <= 0 or rho.max() / rho.min() < 10.0 * (1 - 1e-12):
        raise ValueError("rho grid must be positive and span at least one decade")
    if len(rho) < kmax + 2:
        raise ValueError("rho grid too short for the requested order")
    x = rho.min() / rho
    V = np.vander(x, kmax + 1, increasing=True)
    cond = float(np.linalg.cond(V))
    if cond > max_condition:
        raise FitConditionError(f"fit condition number {cond:.3g} exceeds {max_condition:.3g}", cond)
    S = integrate_wavepacket(f, rho, v, spec) / prefactor(rho)
    coef, *_ = np.linalg.lstsq(V.astype(complex), S, rcond=None)
    resid = S - V @ coef
    return LkFit(coef * rho.min() ** np.arange(kmax + 1), cond,
                 float(np.sqrt(np.mean(np.abs(resid) ** 2))), rho)


@dataclass(frozen=True)
class ExpansionResult:
    rho: float
    v: HyperboloidPoint
    terms: np.ndarray
    remainder_estimate: float
    oracle: complex


def expansion_table(f, v: HyperboloidPoint, N: int, rho_grid, spec=None, coefficients=None) -> list:
    """Oracle versus truncated expansion on a rho grid, one ExpansionResult per rho.

    ``remainder_estimate`` is |I/pref - sum_{k<=N} rho^-k L_k f(v)|.
    """
    rho = np.asarray(rho_grid, dtype=float)
    if coefficients is None:
        coefficients = closed_form_coefficients(f, v, N)
    oracle = integrate_wavepacket(f, rho, v, spec)
    out = []
    for r, val in zip(rho, oracle):
        terms = np.array([coefficients[k] * r ** -k for k in range(N + 1)])
        rem = abs(val / prefactor(r) - terms.sum())
        out.append(ExpansionResult(float(r), v, terms, float(rem), complex(val)))
    return out


# -- recursive corrections ----------------------------------------------------

def recursive_corrections(f: HyperboloidProfile, N: int, v_grid=None, method: str = "closed_form",
                          spec: QuadratureSpec | None = None, rho_grid=None,
                          budget: float = 0.05) -> list:
    """Radial profiles f_0 = f, f_1, ..., f_N with f_k = -sum_{j<k} L_{k-j} f_j.

    ``closed_form`` applies the Laplacian polynomials exactly.  ``fit`` builds
    each f_k from extract_Lk on the points of ``v_grid`` (their distances to
    the centre of f), interpolating in the squared distance; fit errors are
    estimated from two disjoint halves of the rho grid and must stay below
    ``budget`` relative to the largest fitted value.
    """
    if not 0 <= N <= 3:
        raise ValueError("N must lie in 0..3")
    out = [f]
    if N == 0:
        return out
    if f.is_zero():
        return out + [RadialProfile(f.center, f.radius, lambda d: np.zeros(np.shape(d), complex),
                                    f"f_{k}") for k in range(1, N + 1)]
    if method == "closed_form":
        for k, Q in enumerate(correction_polynomials(N)[1:], start=1):
            out.append(RadialProfile(f.center, f.radius,
                                     lambda d, Q=Q: apply_laplacian_polynomial(f, Q, d).reshape(np.shape(d)),
                                     f"f_{k}"))
        return out
    if method != "fit":
        raise ValueError(f"unknown method {method!r}")
    if v_grid is None:
        v_grid = [HyperboloidPoint.from_rapidity(t) for t in np.linspace(0, f.radius, 25)]
    dist = np.array([hyperbolic_distance(np.array(p.vs), np.array(f.center.vs)) for p in v_grid])
    order = np.argsort(dist)
    dist = dist[order]
    points = [v_grid[i] for i in order]
    if dist[0] > 1e-12 or dist[-1] < f.radius * (1 - 1e-12):
        raise ValueError("v_grid must reach from the centre to the support edge")
    rho = np.asarray(FIT_RHO_GRID if rho_grid is None else rho_grid, dtype=float)
    # L_m f_j at every grid point, m = 1..N-j
    applied = {}
    for k in range(1, N + 1):
        j = k - 1
        fits, err = [], 0.0
        for p in points:
            full = extract_Lk(out[j], p, 3, rho, spec).coefficients
            even = extract_Lk(out[j], p, 3, rho[::2], spec).coefficients
            odd = extract_Lk(out[j], p, 3, rho[1::2], spec).coefficients
            fits.append(full)
            err = max(err, float(np.max(np.abs(even[1:N - j + 1] - odd[1:N - j + 1]))))
        fits = np.array(fits)
        scale = float(np.max(np.abs(fits[:, 1:N - j + 1]))) or 1.0
        if err > budget * scale:
            raise CorrectionBudgetError(f"fit error {err:.3g} exceeds budget for f_{k}")
        for m in range(1, N - j + 1):
            applied[(m, j)] = fits[:, m]
        vals = -sum(applied[(k - i, i)] for i in range(k))
        vals[-1] = 0.0
        out.append(_spline_profile(f, dist, vals, f"f_{k}"))
    return out


def _spline_profile(f, dist, vals, label):
    x = dist ** 2
    re = CubicSpline(x, vals.real)
    im = CubicSpline(x, vals.imag)
    return RadialProfile(f.center, f.radius, lambda d: re(np.asarray(d) ** 2) + 1j * im(np.asarray(d) ** 2), label)


# -- remainder bound ---------------------------------------------------------

@dataclass(frozen=True)
class RateFit:
    """Least-squares line through (log x, log y)."""

    xs: np.ndarray
    ys: np.ndarray
    slope: float
    intercept: float
    r2: float
    zeros: int = 0

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "r2": self.r2, "points": len(self.xs),
                "zeros": self.zeros}


def fit_rate(xs, ys) -> RateFit:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if np.any(np.diff(xs) <= 0):
        raise ValueError("abscissae must be strictly increasing")
    keep = ys > 0
    zeros = int((~keep).sum())
    xs, ys = xs[keep], ys[keep]
    if len(xs) < 2:
        return RateFit(xs, ys, -np.inf, -np.inf, 1.0, zeros)
    lx, ly = np.log(xs), np.log(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    pred = slope * lx + intercept
    ss = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 - np.sum((ly - pred) ** 2) / ss if ss > 0 else 1.0
    return RateFit(xs, ys, float(slope), float(intercept), float(r2), zeros)


def fexp_remainder(chi, f, N: int, lam, p, corrections=None, spec=None):
    """R_hat_lambda(p) for momenta p (n, 4) at scale lam."""
    p = np.atleast_2d(np.asarray(p, dtype=float))
    corrections = corrections or recursive_corrections(f, N)
    out = np.zeros(len(p), dtype=complex)
    chival = np.asarray(chi.hat(p))
    for i, (pi, c) in enumerate(zip(p, chival)):
        if c == 0:
            continue
        mass = math.sqrt(pi[0] ** 2 - pi[1:] @ pi[1:])
        v = HyperboloidPoint(tuple(pi[1:] / mass))
        rho = lam * mass
        bracket = sum(rho ** -j * integrate_wavepacket(fj, rho, v, spec) for j, fj in enumerate(corrections[:N + 1]))
        out[i] = c * np.exp(1j * rho) * (bracket / prefactor(rho) - f(v))
    return out


def verify_fexp(chi, f, N: int, lambda_grid, p_samples, spec=None, corrections=None) -> RateFit:
    """Fit of max_p |R_hat_lambda(p)| against lambda."""
    lam = np.asarray(lambda_grid, dtype=float)
    corrections = corrections or recursive_corrections(f, N)
    p = np.atleast_2d(np.asarray(p_samples, dtype=float))
    chival = np.asarray(chi.hat(p))
    if np.all(chival == 0):
        return fit_rate(lam, np.zeros(len(lam)))
    worst = np.zeros(len(lam))
    # group by sample so that each sphere average is shared over the lambda grid
    for pi, c in zip(p, chival):
        if c == 0:
            continue
        mass = math.sqrt(pi[0] ** 2 - pi[1:] @ pi[1:])
        v = HyperboloidPoint(tuple(pi[1:] / mass))
        rho = lam * mass
        bracket = sum(rho ** -j * integrate_wavepacket(fj, rho, v, spec) for j, fj in enumerate(corrections[:N + 1]))
        rem = np.abs(c * (bracket / prefactor(rho) - f(v)))
        worst = np.maximum(worst, rem)
    return fit_rate(lam, worst)
