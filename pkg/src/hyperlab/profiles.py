"""Test functions: bumps on H+, momentum-space profiles, time kernels and
spacetime position bumps, plus the derived multipliers and scalings.

Fourier convention: g_hat(p) = (2 pi)^-2 int g(x) exp(i p.x) d^4x with the
Minkowski product p.x.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .minkowski import (HyperboloidPoint, LorentzBoost, RejectedInput, hyperbolic_distance,
                        minkowski_dot)
from .series import bump_jet


def smooth_bump(t):
    """exp(-1/(1-t^2)) for |t| < 1, zero elsewhere."""
    t = np.asarray(t, dtype=float)
    inside = np.abs(t) < 1.0
    ts = np.where(inside, t, 0.0)
    return np.where(inside, np.exp(-1.0 / (1.0 - ts * ts)), 0.0)


def smooth_step(x):
    """C-infinity transition: 1 for x <= 0, 0 for x >= 1."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(x < 1.0, np.exp(-1.0 / np.maximum(1.0 - x, 1e-300)), 0.0)
        b = np.where(x > 0.0, np.exp(-1.0 / np.maximum(x, 1e-300)), 0.0)
    return a / (a + b)


def _as_spatial(v):
    if isinstance(v, HyperboloidPoint):
        return np.array(v.vs)
    return np.asarray(v, dtype=float)


class RadialProfile:
    """Function on H+ depending only on the geodesic distance to ``center``
    and vanishing beyond ``radius``.

    ``radial`` maps distances to (possibly complex) values.
    """

    def __init__(self, center: HyperboloidPoint, radius: float, radial, label: str = "radial"):
        if radius <= 0:
            raise RejectedInput("support radius must be positive")
        self.center = center
        self.radius = float(radius)
        self._radial = radial
        self.label = label

    def radial(self, d):
        d = np.asarray(d, dtype=float)
        out = self._radial(d)
        return np.where(d < self.radius, out, 0.0)

    def distance(self, v):
        return hyperbolic_distance(_as_spatial(v), np.array(self.center.vs))

    def __call__(self, v):
        return self.radial(self.distance(v))

    @property
    def support_nu(self) -> float:
        """Bound nu with supp f inside {|v| <= nu}."""
        return float(np.sinh(self.center.rapidity + self.radius))

    def conj(self) -> RadialProfile:
        return RadialProfile(self.center, self.radius, lambda d: np.conj(self._radial(d)),
                             self.label + "*")

    def scaled(self, c) -> RadialProfile:
        return RadialProfile(self.center, self.radius, lambda d: c * self._radial(d), self.label)

    def boosted(self, boost: LorentzBoost) -> RadialProfile:
        """The function v -> f(boost^-1 v)."""
        return RadialProfile(boost.apply(self.center), self.radius, self._radial, self.label)

    def is_zero(self) -> bool:
        return False


class HyperboloidProfile(RadialProfile):
    """Smooth bump amplitude * exp(-1/(1-t^2)), t = dist(v, center)/radius."""

    def __init__(self, center: HyperboloidPoint, radius: float, amplitude: float = 1.0):
        self.amplitude = float(amplitude)
        super().__init__(center, radius, self._bump, label="bump")

    def _bump(self, d):
        return self.amplitude * smooth_bump(np.asarray(d) / self.radius)

    def radial_jet(self, d, order: int) -> np.ndarray:
        """Taylor coefficients in the geodesic distance around each d."""
        return self.amplitude * bump_jet(d, self.radius, order)

    def radial_derivatives(self, d, order: int) -> np.ndarray:
        jet = self.radial_jet(d, order + 1)
        return jet * np.array([math.factorial(k) for k in range(order + 1)], dtype=float)

    def conj(self) -> HyperboloidProfile:
        return self

    def scaled(self, c):
        if np.isreal(c):
            return HyperboloidProfile(self.center, self.radius, self.amplitude * float(np.real(c)))
        return super().scaled(c)

    def boosted(self, boost: LorentzBoost) -> HyperboloidProfile:
        return HyperboloidProfile(boost.apply(self.center), self.radius, self.amplitude)

    def is_zero(self) -> bool:
        return self.amplitude == 0.0

    def to_config(self) -> dict:
        return {"center": list(self.center.vs), "radius": self.radius, "amplitude": self.amplitude}

    @classmethod
    def from_config(cls, cfg: dict) -> HyperboloidProfile:
        return cls(HyperboloidPoint(tuple(cfg["center"])), cfg["radius"], cfg.get("amplitude", 1.0))

    def __repr__(self):
        return f"HyperboloidProfile(center={self.center.vs}, radius={self.radius}, amplitude={self.amplitude})"


class ProfileSum:
    """Finite linear combination of radial profiles (not radial in general)."""

    def __init__(self, terms):
        self.terms = tuple((complex(c), p) for c, p in terms)

    def __call__(self, v):
        out = 0.0
        for c, p in self.terms:
            out = out + c * p(v)
        return out

    @property
    def support_nu(self) -> float:
        return max(p.support_nu for _, p in self.terms)

    def support_balls(self):
        return [(p.center, p.radius) for _, p in self.terms]

    def conj(self) -> ProfileSum:
        return ProfileSum([(np.conj(c), p.conj()) for c, p in self.terms])

    def is_zero(self) -> bool:
        return all(c == 0 or p.is_zero() for c, p in self.terms)


class ZeroProfile:
    """The zero function on H+."""

    center = HyperboloidPoint.origin()
    radius = 1.0
    support_nu = 0.0

    def __call__(self, v):
        return np.zeros(np.shape(_as_spatial(v))[:-1])

    def radial(self, d):
        return np.zeros(np.shape(d))

    def conj(self):
        return self

    def is_zero(self) -> bool:
        return True


def _momentum_split(p):
    """Return (mass sqrt(p^2), unit direction spatial part, mask of p in V+)."""
    p = np.asarray(p, dtype=float)
    p2 = minkowski_dot(p, p)
    p2 = np.asarray(p2)
    pos = (p[..., 0] > 0) & (p2 > 0)
    mass = np.sqrt(np.where(pos, p2, 1.0))
    vs = p[..., 1:] / mass[..., None]
    return np.where(pos, mass, 0.0), vs, pos


@dataclass(frozen=True)
class MomentumProfile:
    """chi_hat(p) = shell(sqrt(p^2)) * angular(p/sqrt(p^2)) on V+, zero elsewhere.

    Without plateau the shell factor is the bump in (sqrt(p^2)-m)/delta and the
    angular factor is the bump profile.  With plateau, both factors are exact
    ones on the inner set |sqrt(p^2)-m| <= plateau_shell and
    dist(v, angular.center) <= plateau_angle, with smooth fall-off outside.
    """

    mass_center: float
    shell_halfwidth: float
    angular: HyperboloidProfile
    plateau: bool = False
    plateau_shell: float | None = None
    plateau_angle: float | None = None

    def __post_init__(self):
        m, delta = self.mass_center, self.shell_halfwidth
        if m <= 0 or delta <= 0:
            raise RejectedInput("mass center and shell halfwidth must be positive")
        if delta >= m:
            raise RejectedInput("support touches the light cone (shell halfwidth >= mass)")
        if self.plateau:
            if self.plateau_shell is None:
                object.__setattr__(self, "plateau_shell", 0.1 * m)
            if self.plateau_angle is None:
                object.__setattr__(self, "plateau_angle", 0.5 * self.angular.radius)
            if not (0 < self.plateau_shell < delta and 0 < self.plateau_angle < self.angular.radius):
                raise RejectedInput("plateau must sit strictly inside the support")

    @classmethod
    def default(cls, m: float, angular: HyperboloidProfile, plateau=False, **kw) -> MomentumProfile:
        return cls(m, 0.2 * m, angular, plateau, **kw)

    def _factors(self, mass, vs):
        delta = self.shell_halfwidth
        dist = self.angular.distance(vs)
        if not self.plateau:
            return smooth_bump((mass - self.mass_center) / delta), self.angular.amplitude * smooth_bump(
                dist / self.angular.radius)
        ds = np.abs(mass - self.mass_center)
        shell = np.where(ds <= self.plateau_shell, 1.0,
                         smooth_step((ds - self.plateau_shell) / (delta - self.plateau_shell)))
        ang = np.where(dist <= self.plateau_angle, 1.0,
                       smooth_step((dist - self.plateau_angle) / (self.angular.radius - self.plateau_angle)))
        return shell, ang

    def hat(self, p):
        mass, vs, pos = _momentum_split(p)
        shell, ang = self._factors(mass, vs)
        return np.where(pos, shell * ang, 0.0)

    __call__ = hat

    def in_support(self, p) -> np.ndarray:
        mass, vs, pos = _momentum_split(p)
        return pos & (np.abs(mass - self.mass_center) < self.shell_halfwidth) & (
            self.angular.distance(vs) < self.angular.radius)

    def in_plateau(self, p) -> np.ndarray:
        if not self.plateau:
            return np.zeros(np.shape(p)[:-1], dtype=bool)
        mass, vs, pos = _momentum_split(p)
        return pos & (np.abs(mass - self.mass_center) <= self.plateau_shell) & (
            self.angular.distance(vs) <= self.plateau_angle)

    def support_margin(self) -> float:
        """Lower bound of p0 - |p| over the support (positive: inside V+)."""
        mmin = self.mass_center - self.shell_halfwidth
        eta = self.angular.center.rapidity + self.angular.radius
        return float(mmin * np.exp(-eta))

    def covers(self, f, m: float) -> bool:
        """True if chi_hat is identically one on a neighbourhood of m supp f."""
        if not self.plateau or abs(m - self.mass_center) >= self.plateau_shell:
            return False
        gap = hyperbolic_distance(np.array(f.center.vs), np.array(self.angular.center.vs))
        return gap + f.radius < self.plateau_angle

    def to_config(self) -> dict:
        out = {"mass_center": self.mass_center, "shell_halfwidth": self.shell_halfwidth,
               "angular": self.angular.to_config(), "plateau": self.plateau}
        if self.plateau:
            out["plateau_shell"] = self.plateau_shell
            out["plateau_angle"] = self.plateau_angle
        return out

    @classmethod
    def from_config(cls, cfg: dict) -> MomentumProfile:
        return cls(cfg["mass_center"], cfg["shell_halfwidth"], HyperboloidProfile.from_config(cfg["angular"]),
                   cfg.get("plateau", False), cfg.get("plateau_shell"), cfg.get("plateau_angle"))


class MomentumFunction:
    """Wraps an arbitrary callable p -> complex as a momentum-space function."""

    def __init__(self, func, label="function"):
        self._func = func
        self.label = label

    def hat(self, p):
        return self._func(np.asarray(p, dtype=float))

    __call__ = hat


class ConjugateFunction(MomentumFunction):
    """Momentum function of the complex conjugate test function:
    conj(chi)_hat(p) = conj(chi_hat(-p))."""

    def __init__(self, base):
        super().__init__(lambda p: np.conj(base.hat(-p)), label="conj")
        self.base = base


class ProductFunction(MomentumFunction):
    """Convolution in position space, i.e. (2 pi)^2 times the product of hats."""

    def __init__(self, first, second):
        super().__init__(lambda p: (2 * np.pi) ** 2 * first.hat(p) * second.hat(p), label="convolution")
        self.parts = (first, second)

    @property
    def spatially_isotropic(self) -> bool:
        return all(getattr(g, "spatially_isotropic", False) for g in self.parts)

    @property
    def localization_radius(self) -> float:
        return sum(g.localization_radius for g in self.parts)


class LinearCombination(MomentumFunction):
    def __init__(self, terms):
        terms = tuple(terms)
        super().__init__(lambda p: sum(c * g.hat(p) for c, g in terms), label="combination")


class PositionBump:
    """Spacetime bump amplitude * exp(-1/(1-|x-c|_E^2/r^2)) (Euclidean radius).

    Its Fourier transform is e^{i q.c} |q|_E^-1 int G(s) J1(|q|_E s) s^2 ds,
    evaluated by Gauss-Legendre quadrature in s.
    """

    def __init__(self, center=(0.0, 0.0, 0.0, 0.0), radius: float = 1.0, amplitude: float = 1.0,
                 nodes: int = 400):
        if radius <= 0:
            raise RejectedInput("bump radius must be positive")
        self.center = np.asarray(center, dtype=float).reshape(4)
        self.radius = float(radius)
        self.amplitude = float(amplitude)
        x, w = np.polynomial.legendre.leggauss(nodes)
        self._s = 0.5 * self.radius * (x + 1)
        self._w = 0.5 * self.radius * w * self.amplitude * smooth_bump(self._s / self.radius)

    def __call__(self, x):
        x = np.asarray(x, dtype=float) - self.center
        return self.amplitude * smooth_bump(np.linalg.norm(x, axis=-1) / self.radius)

    def radial_transform(self, q):
        q = np.atleast_1d(np.asarray(q, dtype=float))
        flat = q.reshape(-1)
        out = np.empty_like(flat)
        small = flat < 1e-8
        s, w = self._s, self._w
        out[small] = 0.5 * np.sum(w * s ** 3)
        big = ~small
        idx = np.nonzero(big)[0]
        ws = w * s * s
        for lo in range(0, len(idx), 4096):  # blocks keep the Bessel table small
            sel = idx[lo:lo + 4096]
            out[sel] = special.j1(flat[sel, None] * s[None, :]) @ ws / flat[sel]
        return out.reshape(q.shape)

    def hat(self, p):
        p = np.asarray(p, dtype=float)
        qe = np.linalg.norm(p, axis=-1)
        phase = np.exp(1j * minkowski_dot(p, np.broadcast_to(self.center, p.shape)))
        return phase * self.radial_transform(qe).reshape(qe.shape)

    @classmethod
    def normalized(cls, radius: float, center=(0.0, 0.0, 0.0, 0.0), nodes: int = 400) -> PositionBump:
        """Bump with unit spacetime integral."""
        unit = cls(center, radius, 1.0, nodes)
        return cls(center, radius, 1.0 / ((2 * np.pi) ** 2 * float(unit.radial_transform(0.0)[0])), nodes)

    def shifted(self, a) -> PositionBump:
        return PositionBump(self.center + np.asarray(a, float), self.radius, self.amplitude, len(self._s))

    @property
    def localization_radius(self) -> float:
        return self.radius

    @property
    def spatially_isotropic(self) -> bool:
        return bool(np.all(self.center[1:] == 0.0))


class DiamondFunction(MomentumFunction):
    """(p^2)^(3/4) chi_hat(p); ``inverse`` divides instead."""

    def __init__(self, chi, inverse=False):
        self.base = chi
        power = -0.75 if inverse else 0.75

        def func(p):
            val = chi.hat(p)
            p2 = np.asarray(minkowski_dot(p, p))
            safe = np.where(p2 > 0, p2, 1.0)
            return np.where(p2 > 0, safe ** power * val, 0.0)

        super().__init__(func, label="inverse diamond" if inverse else "diamond")
        self.plateau = False


def diamond_transform(chi):
    """Pointwise multiplier (p^2)^(3/4) applied to chi_hat."""
    margin = getattr(chi, "support_margin", None)
    if margin is not None and margin() <= 0:
        raise RejectedInput("support touches the light cone")
    return DiamondFunction(chi)


def inverse_diamond_transform(chi):
    return DiamondFunction(chi, inverse=True)


def F_lambda_hat(chi, f, lam: float, p, spec=None):
    """(lam/2pi)^(3/2) chi_hat(p) int f(v) exp(i lam p.v) dmu(v) at momenta p (..., 4)."""
    from .oscillatory import QuadratureSpec, integrate_wavepacket

    if lam <= 0:
        raise RejectedInput("lambda must be positive")
    spec = spec or QuadratureSpec()
    p = np.asarray(p, dtype=float)
    flat = p.reshape(-1, 4)
    out = np.zeros(len(flat), dtype=complex)
    cval = np.asarray(chi.hat(flat)).reshape(-1)
    p2 = minkowski_dot(flat, flat)
    for i in np.nonzero(cval != 0)[0]:
        if p2[i] <= 0:
            raise RejectedInput("momentum not timelike where chi_hat is nonzero")
        mass = math.sqrt(p2[i])
        sign = 1.0 if flat[i, 0] > 0 else -1.0
        v = HyperboloidPoint(tuple(sign * flat[i, 1:] / mass))
        val = integrate_wavepacket(f, sign * lam * mass, v, spec)
        out[i] = (lam / (2 * np.pi)) ** 1.5 * cval[i] * val
    return out.reshape(p.shape[:-1]) if p.ndim > 1 else out[0]


@dataclass(frozen=True)
class TimeKernel:
    """Normalized smooth bump on [tau1, tau2] within (0, inf)."""

    tau1: float = 0.5
    tau2: float = 1.5
    norm: float = field(init=False, repr=False)

    def __post_init__(self):
        if not (0 < self.tau1 < self.tau2):
            raise RejectedInput("kernel support must be an interval inside (0, inf)")
        val, _ = integrate.quad(lambda t: float(smooth_bump(t)), -1, 1, epsabs=0.0, epsrel=1e-13, limit=200)
        object.__setattr__(self, "norm", 0.5 * (self.tau2 - self.tau1) * val)

    @property
    def support(self):
        return (self.tau1, self.tau2)

    def __call__(self, lam):
        t = (2 * np.asarray(lam, dtype=float) - self.tau1 - self.tau2) / (self.tau2 - self.tau1)
        return smooth_bump(t) / self.norm

    def nodes(self, n: int = 64, panels: int = 1):
        """Gauss-Legendre nodes and weights (kernel included) on the support."""
        x, w = np.polynomial.legendre.leggauss(n)
        edges = np.linspace(self.tau1, self.tau2, panels + 1)
        lam = np.concatenate([0.5 * (b - a) * (x + 1) + a for a, b in zip(edges[:-1], edges[1:])])
        wt = np.concatenate([0.5 * (b - a) * w for a, b in zip(edges[:-1], edges[1:])])
        return lam, wt * self(lam)

    def to_config(self) -> dict:
        return {"tau1": self.tau1, "tau2": self.tau2}


@dataclass(frozen=True)
class ScaledKernel:
    """h^eta_Lambda(lam) = s^-1 h(s^-1 (lam - Lambda) + 1) with s = (m Lambda)^eta / m."""

    base: TimeKernel
    Lambda: float
    eta: float
    mass: float

    def __post_init__(self):
        if self.Lambda <= 0 or not (0 < self.eta <= 1) or self.mass <= 0:
            raise RejectedInput("need Lambda > 0, 0 < eta <= 1, m > 0")

    @property
    def scale(self) -> float:
        return (self.mass * self.Lambda) ** self.eta / self.mass

    @property
    def support(self):
        s = self.scale
        return (self.Lambda + (self.base.tau1 - 1) * s, self.Lambda + (self.base.tau2 - 1) * s)

    def __call__(self, lam):
        s = self.scale
        if self.eta == 1.0:
            return self.base(np.asarray(lam, dtype=float) / self.Lambda) / self.Lambda
        return self.base((np.asarray(lam, dtype=float) - self.Lambda) / s + 1.0) / s

    def nodes(self, n: int = 64, panels: int = 1):
        x, w = self.base.nodes(n, panels)
        s = self.scale
        return self.Lambda + (x - 1.0) * s, w


def time_kernel_scaled(h: TimeKernel, Lambda: float, eta: float = 1.0, m: float = 1.0) -> ScaledKernel:
    return ScaledKernel(h, float(Lambda), float(eta), float(m))


def time_kernel_fourier(h: TimeKernel, omega, nodes_per_panel: int = 32):
    """h_tilde(omega) = int exp(i omega lam) h(lam) dlam by composite Gauss-Legendre."""
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    out = np.empty(omega.shape, dtype=complex)
    for i, om in enumerate(omega.reshape(-1)):
        width = h.tau2 - h.tau1
        panels = max(8, int(np.ceil(abs(om) * width / (2 * np.pi))) * 2)
        lam, w = h.nodes(nodes_per_panel, panels)
        out.reshape(-1)[i] = np.sum(w * np.exp(1j * om * lam))
    return out if out.size > 1 else out[0]
