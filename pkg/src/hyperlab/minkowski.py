"""Minkowski vectors, the unit hyperboloid H+ and Lorentz boosts.

Signature is (+,-,-,-).  Arrays of four-vectors use the trailing axis for
the components ``(x0, x1, x2, x3)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

METRIC = np.diag([1.0, -1.0, -1.0, -1.0])


class RejectedInput(ValueError):
    """Raised when an input violates a documented precondition."""


def _finite(arr, what):
    arr = np.asarray(arr, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise RejectedInput(f"{what} must be finite")
    return arr


@dataclass(frozen=True)
class FourVector:
    x0: float
    xs: tuple

    def __post_init__(self):
        xs = tuple(float(c) for c in _finite(self.xs, "spatial part").reshape(3))
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "x0", float(_finite(self.x0, "time component")))

    @classmethod
    def from_array(cls, arr) -> FourVector:
        arr = np.asarray(arr, dtype=float).reshape(4)
        return cls(arr[0], tuple(arr[1:]))

    @property
    def array(self) -> np.ndarray:
        return np.array((self.x0,) + self.xs)

    @property
    def spatial_norm(self) -> float:
        return float(np.linalg.norm(self.xs))

    def square(self) -> float:
        return minkowski_dot(self, self)

    def __add__(self, other):
        return FourVector.from_array(self.array + other.array)

    def __sub__(self, other):
        return FourVector.from_array(self.array - other.array)

    def __neg__(self):
        return FourVector.from_array(-self.array)

    def scaled(self, s: float) -> FourVector:
        return FourVector.from_array(s * self.array)


@dataclass(frozen=True)
class HyperboloidPoint:
    """Point of the future unit hyperboloid, stored through its spatial part."""

    vs: tuple

    def __post_init__(self):
        vs = tuple(float(c) for c in _finite(self.vs, "velocity").reshape(3))
        object.__setattr__(self, "vs", vs)

    @classmethod
    def origin(cls) -> HyperboloidPoint:
        return cls((0.0, 0.0, 0.0))

    @classmethod
    def from_rapidity(cls, eta: float, direction=(1.0, 0.0, 0.0)) -> HyperboloidPoint:
        n = np.asarray(direction, dtype=float)
        n = n / np.linalg.norm(n)
        return cls(tuple(np.sinh(eta) * n))

    @property
    def v0(self) -> float:
        return float(np.sqrt(1.0 + np.dot(self.vs, self.vs)))

    @property
    def array(self) -> np.ndarray:
        return np.array((self.v0,) + self.vs)

    def four(self) -> FourVector:
        return FourVector(self.v0, self.vs)

    @property
    def rapidity(self) -> float:
        return float(np.arcsinh(np.linalg.norm(self.vs)))


def minkowski_dot(a, b):
    """Minkowski product ``a0 b0 - a.b`` for FourVectors or (..., 4) arrays."""
    a = a.array if isinstance(a, (FourVector, HyperboloidPoint)) else np.asarray(a, float)
    b = b.array if isinstance(b, (FourVector, HyperboloidPoint)) else np.asarray(b, float)
    out = a[..., 0] * b[..., 0] - np.sum(a[..., 1:] * b[..., 1:], axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def measure_weight(v: HyperboloidPoint) -> float:
    """Density of the invariant measure against d^3v, i.e. 1/v0."""
    return 1.0 / v.v0


def hyperboloid_lift(vs) -> np.ndarray:
    """Map spatial velocities (..., 3) to points (..., 4) on H+."""
    vs = np.asarray(vs, dtype=float)
    v0 = np.sqrt(1.0 + np.sum(vs * vs, axis=-1))
    return np.concatenate([v0[..., None], vs], axis=-1)


def hyperbolic_distance(v, u):
    """Geodesic distance on H+ between points given as spatial parts (..., 3).

    Uses 2 asinh(sqrt(-(v-u)^2)/2), which stays accurate for nearby points.
    """
    v = np.asarray(v.vs if isinstance(v, HyperboloidPoint) else v, dtype=float)
    u = np.asarray(u.vs if isinstance(u, HyperboloidPoint) else u, dtype=float)
    dv = v - u
    v0 = np.sqrt(1.0 + np.sum(v * v, axis=-1))
    u0 = np.sqrt(1.0 + np.sum(u * u, axis=-1))
    dt = np.sum(dv * (v + u), axis=-1) / (v0 + u0)
    chord2 = np.maximum(np.sum(dv * dv, axis=-1) - dt * dt, 0.0)
    out = 2.0 * np.arcsinh(0.5 * np.sqrt(chord2))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class LorentzBoost:
    """Orthochronous Lorentz transformation acting on column four-vectors."""

    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        mat = _finite(self.matrix, "boost matrix").reshape(4, 4).copy()
        if not np.allclose(mat.T @ METRIC @ mat, METRIC, atol=1e-10, rtol=0):
            raise RejectedInput("matrix does not preserve the Minkowski metric")
        if mat[0, 0] < 1.0 - 1e-12:
            raise RejectedInput("matrix is not orthochronous")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def identity(cls) -> LorentzBoost:
        return cls(np.eye(4))

    @classmethod
    def pure(cls, rapidity: float, direction=(1.0, 0.0, 0.0)) -> LorentzBoost:
        n = np.asarray(direction, dtype=float)
        n = n / np.linalg.norm(n)
        ch, sh = np.cosh(rapidity), np.sinh(rapidity)
        mat = np.eye(4)
        mat[0, 0] = ch
        mat[0, 1:] = sh * n
        mat[1:, 0] = sh * n
        mat[1:, 1:] += (ch - 1.0) * np.outer(n, n)
        return cls(mat)

    @classmethod
    def to_point(cls, v: HyperboloidPoint) -> LorentzBoost:
        """Pure boost taking the rest point (1,0,0,0) to v."""
        speed = np.linalg.norm(v.vs)
        if speed == 0.0:
            return cls.identity()
        return cls.pure(np.arcsinh(speed), v.vs)

    @classmethod
    def rotation(cls, angle: float, axis=(0.0, 0.0, 1.0)) -> LorentzBoost:
        n = np.asarray(axis, dtype=float)
        n = n / np.linalg.norm(n)
        cross = np.array([[0, -n[2], n[1]], [n[2], 0, -n[0]], [-n[1], n[0], 0]])
        rot = np.eye(3) + np.sin(angle) * cross + (1 - np.cos(angle)) * cross @ cross
        mat = np.eye(4)
        mat[1:, 1:] = rot
        return cls(mat)

    def compose(self, other: LorentzBoost) -> LorentzBoost:
        """Return self after other."""
        return LorentzBoost(self.matrix @ other.matrix)

    def inverse(self) -> LorentzBoost:
        return LorentzBoost(METRIC @ self.matrix.T @ METRIC)

    def apply(self, x):
        """Apply to a FourVector, HyperboloidPoint or (..., 4) array."""
        if isinstance(x, HyperboloidPoint):
            return HyperboloidPoint(tuple((self.matrix @ x.array)[1:]))
        if isinstance(x, FourVector):
            return FourVector.from_array(self.matrix @ x.array)
        return np.asarray(x, dtype=float) @ self.matrix.T

    def apply_spatial(self, vs) -> np.ndarray:
        """Boost hyperboloid points given by spatial parts (..., 3)."""
        return self.apply(hyperboloid_lift(vs))[..., 1:]


def ball_quadrature(center: HyperboloidPoint, radius: float, n_radial=48, n_polar=32, n_azimuth=32):
    """Nodes and weights for the invariant measure on a geodesic ball of H+.

    Gauss-Legendre in geodesic radius and cos(polar angle), trapezoid in the
    azimuth, mapped from normal coordinates at ``center``.  Returns spatial
    parts (N, 3), weights (N,), and the geodesic radius of every node.
    """
    r, wr = np.polynomial.legendre.leggauss(n_radial)
    r = 0.5 * radius * (r + 1.0)
    wr = 0.5 * radius * wr
    c, wc = np.polynomial.legendre.leggauss(n_polar)
    phi = 2.0 * np.pi * np.arange(n_azimuth) / n_azimuth
    wphi = np.full(n_azimuth, 2.0 * np.pi / n_azimuth)
    R, C, PHI = np.meshgrid(r, c, phi, indexing="ij")
    W = (wr * np.sinh(r) ** 2)[:, None, None] * wc[None, :, None] * wphi[None, None, :]
    S = np.sqrt(1.0 - C * C)
    dirs = np.stack([S * np.cos(PHI), S * np.sin(PHI), C], axis=-1)
    local = np.concatenate([np.cosh(R)[..., None], np.sinh(R)[..., None] * dirs], axis=-1)
    pts = LorentzBoost.to_point(center).apply(local.reshape(-1, 4))
    return pts[:, 1:], W.reshape(-1), R.reshape(-1)


@dataclass(frozen=True)
class Inequality:
    name: str
    lhs: float
    rhs: float
    holds: bool


@dataclass(frozen=True)
class GeomReport:
    inequalities: tuple
    satisfied: bool


GEOM_SLACK = 1e-12


def _geom_margins(v1, v2, lam1, lam2, beta, sigma):
    """Vectorized core of geom_bounds: returns dict name -> (lhs, rhs, applicable)."""
    v1 = np.asarray(v1, float)
    v2 = np.asarray(v2, float)
    w = lam1[..., None] * v1 - lam2[..., None] * v2
    wn = np.linalg.norm(w, axis=-1)
    t = np.abs(lam1 * np.sqrt(1 + np.sum(v1 * v1, -1)) - lam2 * np.sqrt(1 + np.sum(v2 * v2, -1)))
    dl = np.abs(lam1 - lam2)
    out = {
        "energy_difference": (t, dl + beta * wn, np.ones_like(wn, dtype=bool)),
        "spacelike_excess": ((1 - beta) * wn - dl, wn - t, np.ones_like(wn, dtype=bool)),
    }
    if sigma is not None:
        ok = (dl <= sigma) & (wn >= 2 * sigma / (1 - beta))
        out["conditional_excess"] = (0.5 * (1 - beta) * wn, wn - t, ok)
        out["conditional_sigma"] = (np.full_like(wn, sigma), 0.5 * (1 - beta) * wn, ok)
    return out


def geom_bounds(v1: HyperboloidPoint, v2: HyperboloidPoint, lam1: float, lam2: float,
                nu: float, sigma: float | None = None) -> GeomReport:
    """Evaluate the elementary inequalities relating energy and momentum
    differences of two scaled hyperboloid points with |v_i| <= nu.

    The conditional pair is evaluated only when ``sigma`` is given and its
    hypotheses |lam1-lam2| <= sigma, |lam1 v1 - lam2 v2| >= 2 sigma/(1-beta)
    hold; otherwise it is reported as vacuously satisfied.
    """
    if nu <= 0 or lam1 <= 0 or lam2 <= 0:
        raise RejectedInput("nu and the scale factors must be positive")
    for v in (v1, v2):
        if np.linalg.norm(v.vs) > nu * (1 + 1e-15):
            raise RejectedInput("velocity outside the admissible ball |v| <= nu")
    beta = nu / np.sqrt(nu * nu + 1)
    res = _geom_margins(np.array(v1.vs), np.array(v2.vs), np.float64(lam1), np.float64(lam2), beta, sigma)
    items = []
    for name, (lhs, rhs, app) in res.items():
        lhs, rhs, app = float(lhs), float(rhs), bool(app)
        holds = (not app) or lhs <= rhs + GEOM_SLACK * (1 + abs(lhs) + abs(rhs))
        items.append(Inequality(name, lhs, rhs, holds))
    return GeomReport(tuple(items), all(i.holds for i in items))


def sample_ball(rng: np.random.Generator, nu: float, size: int) -> np.ndarray:
    """Uniform samples of spatial velocities in |v| <= nu."""
    x = rng.normal(size=(size, 3))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    return x * (nu * rng.random(size) ** (1 / 3))[:, None]


def geom_sweep(rng: np.random.Generator, n_samples: int, nu_range=(0.1, 5.0),
               lam_range=(0.1, 100.0)) -> dict:
    """Random admissible sweep of geom_bounds; returns violation counts per inequality."""
    nu = rng.uniform(*nu_range, size=n_samples)
    beta = nu / np.sqrt(nu * nu + 1)
    v1 = sample_ball(rng, 1.0, n_samples) * nu[:, None]
    v2 = sample_ball(rng, 1.0, n_samples) * nu[:, None]
    lam1 = np.exp(rng.uniform(*np.log(lam_range), size=n_samples))
    # half of the samples put lam2 close to lam1 so the conditional branch is exercised
    near = rng.random(n_samples) < 0.5
    lam2 = np.where(near, lam1 * (1 + rng.uniform(-0.05, 0.05, n_samples)),
                    np.exp(rng.uniform(*np.log(lam_range), size=n_samples)))
    sigma = np.abs(lam1 - lam2) * rng.uniform(1.0, 2.0, n_samples)
    res = _geom_margins(v1, v2, lam1, lam2, beta, sigma)
    counts = {}
    for name, (lhs, rhs, app) in res.items():
        bad = app & (lhs > rhs + GEOM_SLACK * (1 + np.abs(lhs) + np.abs(rhs)))
        counts[name] = {"violations": int(bad.sum()), "applicable": int(app.sum()),
                        "worst_margin": float(np.max(np.where(app, lhs - rhs, -np.inf)))}
    return counts


@dataclass(frozen=True)
class DifferenceRegion:
    """Cone-and-ball region {q : |q0|/|q| <= ratio_max, |q| <= radius_max}."""

    ratio_max: float
    radius_max: float

    def contains(self, q, slack=1e-12) -> np.ndarray:
        q = np.asarray(q, float)
        qn = np.linalg.norm(q[..., 1:], axis=-1)
        cone = np.abs(q[..., 0]) <= self.ratio_max * qn + slack
        return cone & (qn <= self.radius_max + slack)


def support_difference_bound(nu: float) -> DifferenceRegion:
    """Region containing all differences v - u with v, u in {|v| <= nu}."""
    if nu < 0:
        raise RejectedInput("nu must be non-negative")
    return DifferenceRegion(nu / np.sqrt(nu * nu + 1), 2.0 * nu)


def check_difference_region(nu: float, n_pairs: int, rng: np.random.Generator) -> int:
    """Number of sampled differences falling outside support_difference_bound(nu)."""
    region = support_difference_bound(nu)
    v = hyperboloid_lift(sample_ball(rng, nu, n_pairs))
    u = hyperboloid_lift(sample_ball(rng, nu, n_pairs))
    return int(np.sum(~region.contains(v - u)))
