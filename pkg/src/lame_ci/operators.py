"""Linear operators: dyadic band projection, moment-vanishing time mollifier,
Leray projection and a symmetric inverse divergence."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np

from . import field as F
from .field import TorusField


class OperatorError(ValueError):
    pass


# ------------------------------------------------------------ smooth steps

def smoothstep(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1, built from exp(-1/x)."""
    x = np.asarray(x, dtype=float)
    a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
    y = 1.0 - x
    b = np.where(y > 0, np.exp(-1.0 / np.where(y > 0, y, 1.0)), 0.0)
    return a / (a + b)


def radial_profile(r):
    """1 on [0, 1], 0 on [2, inf), smooth and monotone in between."""
    return smoothstep(2.0 - np.asarray(r, dtype=float))


# ------------------------------------------------------------ band projection

def dyadic_level(ell: float) -> int:
    return int(math.floor(math.log2(1.0 / ell)))


def band_multiplier(N: int, d: int, ell: float) -> np.ndarray:
    if ell == 0:
        return np.ones((N,) * d)
    J = dyadic_level(ell)
    return radial_profile(np.sqrt(F.ksq(N, d)) / 2.0**J)


def band_project_coeffs(coeffs, d: int, ell: float):
    if ell == 0:
        return coeffs
    return coeffs * band_multiplier(coeffs.shape[-1], d, ell)


def band_project(f: TorusField, ell: float) -> TorusField:
    """Littlewood-Paley projection onto frequencies below 2**(J+1), J = floor(log2 1/ell)."""
    if ell < 0:
        raise OperatorError("ell must be >= 0")
    return f._new(band_project_coeffs(f.coeffs, f.d, ell))


def band_radius(ell: float) -> float:
    """Largest |k| that survives band_project."""
    return math.inf if ell == 0 else 2.0 ** (dyadic_level(ell) + 1)


# ------------------------------------------------------------ time kernel

MAX_N0 = 40


@dataclass(frozen=True)
class TimeKernel:
    """phi(s) = bump(s) * poly(s) on (-1, 1) with unit mass and vanishing
    moments of orders 1..n0+3.

    ``poly`` holds Legendre-series coefficients (better conditioned than
    monomials).  ``nodes`` are Gauss-Legendre abscissae; ``weights[r]``
    integrate phi^{(r)}(s) g(s) exactly for polynomials g of degree
    < len(nodes).
    """
    n0: int
    poly: tuple
    nodes: np.ndarray
    weights: tuple       # weights[r] for derivative order r = 0, 1, 2
    moments: tuple       # int phi s^n for n = 0 .. 2 * len(nodes)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        inside = np.abs(s) < 1
        sc = np.where(inside, s, 0.0)
        bump = np.where(inside, np.exp(-1.0 / np.where(inside, 1.0 - sc**2, 1.0)), 0.0)
        return bump * np.polynomial.legendre.legval(sc, np.array(self.poly))

    def dump(self) -> str:
        lines = [f"# n0 = {self.n0}", "# Legendre coefficients of the polynomial factor"]
        lines += [repr(c) for c in self.poly]
        lines.append("# node weight dweight d2weight")
        for j, x in enumerate(self.nodes):
            lines.append(" ".join(repr(float(v)) for v in
                                  (x, self.weights[0][j], self.weights[1][j], self.weights[2][j])))
        return "\n".join(lines) + "\n"


def bump_moments(nmax: int, dps: int):
    """int_{-1}^{1} exp(-1/(1-s^2)) s^n ds for n <= nmax.

    With s = tanh(y) the integrand becomes exp(-cosh^2 y) tanh^n y sech^2 y,
    which decays doubly exponentially, so the trapezoid rule converges
    geometrically.
    """
    with mpmath.workdps(dps):
        h = mpmath.mpf(1) / 64
        K = int(mpmath.mpf(4.5) / h)
        acc = [mpmath.mpf(0)] * (nmax + 1)
        for j in range(0, K + 1):
            y = j * h
            c = mpmath.cosh(y)
            s = mpmath.tanh(y)
            p = mpmath.exp(-c * c) / (c * c) * h * (1 if j == 0 else 2)
            # symmetric nodes: odd moments cancel
            for n in range(0, nmax + 1, 2):
                acc[n] += p
                p *= s * s
        return acc


@lru_cache(maxsize=None)
def _bump_table():
    # one table serves every n0 <= MAX_N0 (precision and length of the largest)
    deg = MAX_N0 + 3
    m = math.ceil(3 * (MAX_N0 + 4) / 2)
    return tuple(bump_moments(deg + 2 * m + 2, 40 + 2 * MAX_N0))


def _legendre_monomials(deg: int):
    """Monomial coefficients of P_0..P_deg as exact mp rationals."""
    P = [[mpmath.mpf(1)], [mpmath.mpf(0), mpmath.mpf(1)]]
    for n in range(1, deg):
        a = [mpmath.mpf(0)] + [(2 * n + 1) * c / (n + 1) for c in P[n]]
        b = [n * c / (n + 1) for c in P[n - 1]] + [0, 0]
        P.append([x - y for x, y in zip(a, b)])
    return P[:deg + 1]


def _gauss_solve(A, b):
    """Gaussian elimination with partial pivoting on lists of mp numbers."""
    n = len(b)
    A = [row[:] + [v] for row, v in zip(A, b)]
    for k in range(n):
        piv = max(range(k, n), key=lambda r: abs(A[r][k]))
        A[k], A[piv] = A[piv], A[k]
        rk = A[k]
        for r in range(k + 1, n):
            f = A[r][k] / rk[k]
            if f:
                row = A[r]
                for c in range(k + 1, n + 1):
                    row[c] -= f * rk[c]
    x = [mpmath.mpf(0)] * n
    for k in range(n - 1, -1, -1):
        x[k] = (A[k][n] - mpmath.fsum(A[k][c] * x[c] for c in range(k + 1, n))) / A[k][k]
    return x


def _vandermonde_solve(xs, b):
    """Solve sum_k xs[k]^n w[k] = b[n], n < len(xs), in O(m^2) (Bjorck-Pereyra)."""
    n = len(xs) - 1
    b = list(b)
    for k in range(n):
        for i in range(n, k, -1):
            b[i] -= xs[k] * b[i - 1]
    for k in range(n - 1, -1, -1):
        for i in range(k + 1, n + 1):
            b[i] /= xs[i] - xs[i - k - 1]
        for i in range(k, n):
            b[i] -= b[i + 1]
    return b


@lru_cache(maxsize=None)
def build_time_kernel(n0: int) -> TimeKernel:
    if n0 < 1:
        raise OperatorError("n0 must be >= 1")
    if n0 > MAX_N0:
        raise OperatorError(f"moment system for n0 = {n0} is too ill-conditioned; "
                            f"use n0 <= {MAX_N0} (toy override)")
    deg = n0 + 3
    m = math.ceil(3 * (n0 + 4) / 2)
    dps = 40 + 2 * n0
    with mpmath.workdps(dps):
        mu = _bump_table()[:deg + 2 * m + 3]
        P = _legendre_monomials(deg)
        # A[n, j] = int bump * s^n * P_j
        # columns by the three-term recurrence s P_j = ((j+1) P_{j+1} + j P_{j-1}) / (2j+1)
        cols = [list(mu[:2 * deg + 1]), list(mu[1:2 * deg + 1])]
        for j in range(1, deg):
            prev, cur = cols[j - 1], cols[j]
            cols.append([((2 * j + 1) * cur[n + 1] - j * prev[n]) / (j + 1)
                         for n in range(len(cur) - 1)])
        a = _gauss_solve([[cols[j][n] for j in range(deg + 1)] for n in range(deg + 1)],
                         [mpmath.mpf(1)] + [mpmath.mpf(0)] * deg)
        c = [mpmath.fsum(a[j] * P[j][i] for j in range(i, deg + 1) if i < len(P[j]))
             for i in range(deg + 1)]
        mom = [mpmath.fsum(c[j] * mu[n + j] for j in range(deg + 1)) for n in range(2 * m + 1)]
        x, _ = np.polynomial.legendre.leggauss(m)
        xs = [mpmath.mpf(float(v)) for v in x]
        weights = []
        for r in range(3):
            # int phi^{(r)} s^n = (-1)^r n!/(n-r)! mom[n-r]
            b = [0 if n < r else (-1) ** r * mpmath.factorial(n)
                 / mpmath.factorial(n - r) * mom[n - r] for n in range(m)]
            w = _vandermonde_solve(xs, b)
            weights.append(np.array([float(v) for v in w]))
        return TimeKernel(n0=n0, poly=tuple(float(v) for v in a), nodes=np.array(x),
                          weights=tuple(weights), moments=tuple(float(v) for v in mom))


def mollify_callable(func, t: float, ell: float, kernel: TimeKernel, order: int = 0):
    """d^order/dt^order of (phi_ell * func)(t) by the kernel quadrature.

    ``func(s)`` may return any array; ell = 0 is only allowed for order 0.
    """
    if ell == 0:
        if order:
            raise OperatorError("derivatives of the identity mollifier are not defined here")
        return func(t)
    w = kernel.weights[order]
    acc = None
    for s, wk in zip(kernel.nodes, w):
        v = wk * np.asarray(func(t - ell * s))
        acc = v if acc is None else acc + v
    return acc / ell**order


def _lagrange(times, values, t, npts=8):
    """Local Lagrange interpolation in time of sampled values."""
    j = int(np.searchsorted(times, t))
    lo = min(max(j - npts // 2, 0), len(times) - npts)
    idx = np.arange(lo, lo + npts)
    ts = times[idx]
    w = np.ones(npts)
    for a in range(npts):
        for b in range(npts):
            if a != b:
                w[a] *= (t - ts[b]) / (ts[a] - ts[b])
    return np.tensordot(w, values[idx], axes=(0, 0))


def time_mollify(f: TorusField, ell: float, kernel: TimeKernel, target=None) -> TorusField:
    """Convolve in time with phi_ell; the output lives on the shrunk interval.

    Values between time nodes come from 8-point Lagrange interpolation.
    """
    if ell == 0:
        return f
    t0, t1 = f.interval
    lo, hi = t0 + ell, t1 - ell
    if target is not None:
        if target[0] < lo - 1e-14 or target[1] > hi + 1e-14:
            raise OperatorError(
                f"interval {f.interval} too short to mollify onto {target} with ell={ell}")
        lo, hi = target
    if hi <= lo:
        raise OperatorError("mollification leaves an empty interval")
    if len(f.times) < 8:
        raise OperatorError("need at least 8 time nodes")
    keep = (f.times >= lo - 1e-14) & (f.times <= hi + 1e-14)
    times = f.times[keep]
    out = np.stack([mollify_callable(lambda s: _lagrange(f.times, f.coeffs, s), t, ell, kernel)
                    for t in times])
    return TorusField(out, times, d=f.d, interval=(lo, hi), real=f.real)


# ------------------------------------------------------------ Leray / inverse divergence

def leray_coeffs(v, d: int):
    N = v.shape[-1]
    ks = F.kgrid(N, d)
    k2 = F.ksq(N, d).astype(float)
    safe = np.where(k2 == 0, 1.0, k2)
    kv = sum(ks[j] * v[j] for j in range(d))
    out = np.stack([v[j] - ks[j] * kv / safe for j in range(d)])
    out[(Ellipsis,) + (0,) * d] = 0.0
    return out


def leray_project(v: TorusField) -> TorusField:
    """Divergence-free, mean-free part of a vector field."""
    if v.rank != 1:
        raise OperatorError("Leray projection needs a vector field")
    return v._new(np.stack([leray_coeffs(c, v.d) for c in v.coeffs]))


@lru_cache(maxsize=None)
def _inverse_ksq(N: int, d: int) -> np.ndarray:
    # 1/|k|^2 with the mean (and only the mean) sent to 0
    k2 = F.ksq(N, d).astype(float)
    out = np.divide(1.0, k2, out=np.zeros_like(k2), where=k2 != 0)
    out[(0,) * d] = 0.0
    out.setflags(write=False)
    return out


def inverse_divergence_coeffs(v, d: int):
    """Symmetric matrix R with Div R = v - mean(v).

    With u = -Lap^{-1} v and P the Leray projector,
    R = (grad Pu + grad Pu^T)/4 + 3 (grad u + grad u^T)/4 - (Div u) Id / 2,
    assembled mode by mode as i (k (x) w + w (x) k) - i (k.u) Id / 2 with
    w = (Pu + 3u)/4.
    """
    N = v.shape[-1]
    k = F.kgrid(N, d)
    inv = _inverse_ksq(N, d)
    u = v * (-inv)
    ku = k[0] * u[0]
    for j in range(1, d):
        ku += k[j] * u[j]
    # w = (Pu + 3u)/4, pre-multiplied by i to save a pass per entry
    ku_scaled = ku * (-0.25j * inv)
    w = [1j * u[j] + k[j] * ku_scaled for j in range(d)]
    R = np.empty((d, d) + v.shape[1:], dtype=complex)
    for m in range(d):
        for n in range(m, d):
            np.multiply(k[n], w[m], out=R[m, n])
            R[m, n] += k[m] * w[n]
            if m == n:
                R[m, m] -= 0.5j * ku
            else:
                R[n, m] = R[m, n]
    return R


def inverse_divergence(v: TorusField) -> TorusField:
    if v.rank != 1:
        raise OperatorError("inverse divergence needs a vector field")
    return v._new(np.stack([inverse_divergence_coeffs(c, v.d) for c in v.coeffs]))
