"""Truncated Taylor series ("jets") used for exact derivatives of the bump
profiles and for powers of the radial hyperbolic Laplacian.

A jet is an array whose last axis holds Taylor coefficients c_0..c_{n-1}
of a function around some base point.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np


def jet_mul(a, b):
    n = a.shape[-1]
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=np.result_type(a, b))
    for i in range(n):
        out[..., i:] += a[..., i:i + 1] * b[..., :n - i]
    return out


def jet_exp(a):
    n = a.shape[-1]
    out = np.zeros_like(a)
    out[..., 0] = np.exp(a[..., 0])
    for k in range(1, n):
        acc = 0.0
        for j in range(1, k + 1):
            acc = acc + j * a[..., j] * out[..., k - j]
        out[..., k] = acc / k
    return out


def jet_recip(a):
    n = a.shape[-1]
    out = np.zeros_like(a)
    out[..., 0] = 1.0 / a[..., 0]
    for k in range(1, n):
        acc = 0.0
        for j in range(1, k + 1):
            acc = acc + a[..., j] * out[..., k - j]
        out[..., k] = -acc / a[..., 0]
    return out


def bump_jet(d, radius: float, order: int) -> np.ndarray:
    """Taylor coefficients of exp(-1/(1-x^2/R^2)) around each point ``d``.

    Points with d >= R get the zero jet (the function is flat there).
    """
    d = np.atleast_1d(np.asarray(d, dtype=float))
    u = np.zeros(d.shape + (order,))
    u[..., 0] = d
    if order > 1:
        u[..., 1] = 1.0
    den = -jet_mul(u, u) / radius ** 2
    den[..., 0] += 1.0
    inside = np.abs(d) < radius
    den[~inside, 0] = 1.0
    out = jet_exp(-jet_recip(den))
    out[~inside] = 0.0
    return out


def sinh_jet(d, order: int) -> np.ndarray:
    d = np.atleast_1d(np.asarray(d, dtype=float))
    out = np.empty(d.shape + (order,))
    for k in range(order):
        out[..., k] = (np.sinh(d) if k % 2 == 0 else np.cosh(d)) / math.factorial(k)
    return out


def radial_laplacian_powers(jet: np.ndarray, d, powers: int) -> np.ndarray:
    """Values of Delta^j F at distance d for j = 0..powers.

    ``jet`` holds at least 2*powers+2 Taylor coefficients of the radial
    function F around each d.  Uses Delta^j F = sinh(r)^-1 (d^2 - 1)^j (sinh r F),
    and the derivative of the bracket at r = 0.
    """
    need = 2 * powers + 2
    if jet.shape[-1] < need:
        raise ValueError(f"jet of order {need} required")
    d = np.atleast_1d(np.asarray(d, dtype=float))
    g = jet_mul(sinh_jet(d, need), jet[..., :need])
    derivs = g * np.array([math.factorial(k) for k in range(need)], dtype=float)
    out = []
    small = np.abs(d) < 1e-6
    sh = np.where(small, 1.0, np.sinh(np.where(small, 1.0, d)))
    for j in range(powers + 1):
        at_r = sum(math.comb(j, i) * (-1) ** (j - i) * derivs[..., 2 * i] for i in range(j + 1))
        at_0 = sum(math.comb(j, i) * (-1) ** (j - i) * derivs[..., 2 * i + 1] for i in range(j + 1))
        out.append(np.where(small, at_0, at_r / sh))
    return np.array(out)


def _poly_mul(p, q, n):
    out = [Fraction(0)] * n
    for i, a in enumerate(p[:n]):
        if a:
            for j, b in enumerate(q[:n - i]):
                out[i + j] += a * b
    return out


def spherical_mean_coefficients(kmax: int) -> list:
    """Exact rational polynomials p_k(mu), k = 0..kmax.

    p_k is the coefficient of s^(2k+1) in sinh(r sqrt(mu))/sqrt(2 mu) with
    r = arccosh(1 + s^2), written as a polynomial in mu (list of Fractions,
    lowest degree first).
    """
    n = kmax + 1
    # r = sqrt(2) s q(s^2) with q(t) = sum_j c_j (t/2)^j from r = 2 asinh(s/sqrt 2)
    q = []
    for j in range(n):
        c = Fraction((-1) ** j * math.factorial(2 * j), 4 ** j * math.factorial(j) ** 2 * (2 * j + 1))
        q.append(c / 2 ** j)
    polys = [[Fraction(0)] * (k + 1) for k in range(n)]
    power = [Fraction(1)] + [Fraction(0)] * (n - 1)  # q^(2m+1), starting from q^1
    power = _poly_mul(power, q, n)
    q2 = _poly_mul(q, q, n)
    for m in range(n):
        scale = Fraction(2 ** m, math.factorial(2 * m + 1))
        for k in range(m, n):
            polys[k][m] += scale * power[k - m]
        power = _poly_mul(power, q2, n)
    return polys
