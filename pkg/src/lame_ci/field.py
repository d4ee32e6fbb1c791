"""Spectral tensor fields on [t0, t1] x T^d with T = [-pi, pi).

Space is represented by Fourier coefficients c_k of f(x) = sum_k c_k e^{ik.x}
on the band |k_j| < N/2 (the Nyquist plane is always kept at zero).  Time is
sampled on a list of nodes.  The low-level functions work on bare coefficient
arrays whose last d axes are the wavevector axes in FFT order; the
``TorusField`` class bundles such an array with its time nodes.

Conventions used throughout the package:

* gradient of a vector u:  G[m, n] = d_n u_m
* divergence of a matrix:  (Div A)_p = sum_n d_n A[n, p]
"""
from __future__ import annotations

import json
import math
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

MAX_DERIVATIVE_ORDER = 4


class FieldError(ValueError):
    pass


# ------------------------------------------------------------ wave numbers

@lru_cache(maxsize=None)
def wavenumbers(N: int) -> np.ndarray:
    """Integer wave numbers in FFT order; the Nyquist entry is set to 0."""
    k = np.fft.fftfreq(N, 1.0 / N)
    if N % 2 == 0:
        k[N // 2] = 0.0
    k.setflags(write=False)
    return k


@lru_cache(maxsize=None)
def band_mask(N: int, d: int) -> np.ndarray:
    """Boolean mask of the retained band |k_j| < N/2."""
    m1 = np.ones(N, dtype=bool)
    if N % 2 == 0:
        m1[N // 2] = False
    m = m1
    for _ in range(d - 1):
        m = np.multiply.outer(m, m1)
    m.setflags(write=False)
    return m


def kgrid(N: int, d: int):
    """Broadcastable integer wave-number arrays, one per axis."""
    k = wavenumbers(N)
    out = []
    for j in range(d):
        shape = [1] * d
        shape[j] = N
        out.append(k.reshape(shape))
    return out


@lru_cache(maxsize=None)
def ksq(N: int, d: int) -> np.ndarray:
    out = sum(kj**2 for kj in kgrid(N, d))
    out = np.broadcast_to(out, (N,) * d).copy()
    out.setflags(write=False)
    return out


def grid_points(N: int, d: int):
    """Sample coordinates x_j = -pi + 2 pi j / N along every axis (meshgrid, ij)."""
    x = -np.pi + 2 * np.pi * np.arange(N) / N
    return np.meshgrid(*([x] * d), indexing="ij")


# ------------------------------------------------------------ transforms

def _phase(N: int, d: int):
    # grid starts at -pi, so coefficients pick up e^{-ik(-pi)} = (-1)^k
    s = np.where(np.fft.fftfreq(N, 1.0 / N) % 2 == 0, 1.0, -1.0)
    out = s
    for _ in range(d - 1):
        out = np.multiply.outer(out, s)
    return out


@lru_cache(maxsize=None)
def _phase_cached(N: int, d: int) -> np.ndarray:
    p = _phase(N, d)
    p.setflags(write=False)
    return p


def to_coeffs(values, d: int) -> np.ndarray:
    """Grid samples -> band-limited coefficients (last d axes are space)."""
    values = np.asarray(values)
    N = values.shape[-1]
    axes = tuple(range(-d, 0))
    c = sfft.fftn(values, axes=axes) / N**d
    c = c * _phase_cached(N, d)
    return c * band_mask(N, d)


def to_grid(coeffs, d: int, M: int | None = None, real: bool = True) -> np.ndarray:
    """Coefficients -> grid samples, optionally on a finer grid of size M."""
    coeffs = np.asarray(coeffs)
    N = coeffs.shape[-1]
    if M is not None and M != N:
        coeffs = resize(coeffs, d, M)
        N = M
    axes = tuple(range(-d, 0))
    v = sfft.ifftn(coeffs * _phase_cached(N, d), axes=axes) * N**d
    return v.real if real else v


def _index_map(N_from: int, N_to: int):
    k = np.fft.fftfreq(N_from, 1.0 / N_from).astype(int)
    lim = (min(N_from, N_to) - 1) // 2
    sel = np.nonzero(np.abs(k) <= lim)[0]
    dst = k[sel] % N_to
    return sel, dst


def resize(coeffs, d: int, M: int) -> np.ndarray:
    """Zero-pad or truncate coefficients to the band of grid size M."""
    coeffs = np.asarray(coeffs)
    N = coeffs.shape[-1]
    if M == N:
        return coeffs
    sel, dst = _index_map(N, M)
    lead = coeffs.shape[:-d]
    out = np.zeros(lead + (M,) * d, dtype=complex)
    src = coeffs
    ix_src = np.ix_(*([sel] * d))
    ix_dst = np.ix_(*([dst] * d))
    out[(Ellipsis,) + ix_dst] = src[(Ellipsis,) + ix_src]
    return out


def padded_size(N: int) -> int:
    """Grid size for alias-free quadratic products truncated back to N."""
    M = int(math.ceil(3 * N / 2))
    return M + (M % 2)


# ------------------------------------------------------------ calculus

def derivative(coeffs, d: int, alpha) -> np.ndarray:
    if len(alpha) != d:
        raise FieldError("multi-index length must equal the dimension")
    if sum(alpha) > MAX_DERIVATIVE_ORDER:
        raise FieldError(f"derivative order {sum(alpha)} exceeds {MAX_DERIVATIVE_ORDER}")
    N = coeffs.shape[-1]
    mult = 1.0 + 0j
    for kj, a in zip(kgrid(N, d), alpha):
        if a:
            mult = mult * (1j * kj) ** a
    return coeffs * mult


def grad(coeffs, d: int) -> np.ndarray:
    """Appends a trailing component axis n holding d_n of every component."""
    N = coeffs.shape[-1]
    ks = kgrid(N, d)
    return np.stack([1j * kj * coeffs for kj in ks], axis=-d - 1)


def div_vector(coeffs, d: int) -> np.ndarray:
    N = coeffs.shape[-1]
    ks = kgrid(N, d)
    return sum(1j * ks[n] * coeffs[n] for n in range(d))


def div_matrix(coeffs, d: int) -> np.ndarray:
    """(Div A)_p = sum_n d_n A[n, p]."""
    N = coeffs.shape[-1]
    ks = kgrid(N, d)
    return sum(1j * ks[n] * coeffs[n] for n in range(d))


def laplacian(coeffs, d: int) -> np.ndarray:
    N = coeffs.shape[-1]
    return -ksq(N, d) * coeffs


def grad_div(coeffs, d: int) -> np.ndarray:
    """grad(Div u) for a vector u."""
    return grad(div_vector(coeffs, d), d)


def mean(coeffs, d: int) -> np.ndarray:
    return coeffs[(Ellipsis,) + (0,) * d]


# ------------------------------------------------------------ products

class Padded:
    """Grid values on the 3/2-padded grid, for alias-free quadratic forms."""

    def __init__(self, d: int, N: int):
        self.d, self.N, self.M = d, N, padded_size(N)

    def grid(self, coeffs):
        return to_grid(coeffs, self.d, self.M)

    def coeffs(self, values):
        c = to_coeffs(values, self.d)
        return resize(c, self.d, self.N)


def flux_grid(G):
    """tr(G G^T) Id - G^T G for grid arrays G[m, n, ...]."""
    d = G.shape[0]
    tr = np.einsum("mn...,mn...->...", G, G)
    out = -np.einsum("mi...,mj...->ij...", G, G)
    for j in range(d):
        out[j, j] += tr
    return out


def cross_grid(Ga, Gb):
    """Symmetric bilinear form tr(2 Ga Gb^T) Id - Gb^T Ga - Ga^T Gb."""
    d = Ga.shape[0]
    tr = 2 * np.einsum("mn...,mn...->...", Ga, Gb)
    out = -np.einsum("mi...,mj...->ij...", Gb, Ga) - np.einsum("mi...,mj...->ij...", Ga, Gb)
    for j in range(d):
        out[j, j] += tr
    return out


def flux(gc, d: int) -> np.ndarray:
    """Dealiased tr(G G^T) Id - G^T G from gradient coefficients."""
    pad = Padded(d, gc.shape[-1])
    return pad.coeffs(flux_grid(pad.grid(gc)))


def cross(ga, gb, d: int) -> np.ndarray:
    pad = Padded(d, ga.shape[-1])
    return pad.coeffs(cross_grid(pad.grid(ga), pad.grid(gb)))


def multiply(a, b, d: int) -> np.ndarray:
    """Dealiased pointwise product a * b (broadcast over components)."""
    pad = Padded(d, a.shape[-1])
    return pad.coeffs(pad.grid(a) * pad.grid(b))


# ------------------------------------------------------------ time stencils

def fd_weights(nodes, x0: float, order: int) -> np.ndarray:
    """Finite-difference weights for the order-th derivative at x0 (Fornberg)."""
    z = np.asarray(nodes, dtype=float)
    n = len(z)
    c = np.zeros((n, order + 1))
    c1, c4 = 1.0, z[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, order)
        c2, c5, c4 = 1.0, c4, z[i] - x0
        for j in range(i):
            c3 = z[i] - z[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


def stencil_weights(times, order: int, accuracy: int = 6):
    """Per-node (indices, weights) for the order-th time derivative."""
    nt = len(times)
    # centered stencils of accuracy+1 points reach the requested order for
    # first and second derivatives
    width = accuracy + 1 + (accuracy % 2)
    # the one-sided stencils near the ends use width + 1 nodes
    need = max(4 * order + 1, width + 1)
    if nt < need:
        raise FieldError(f"need at least {need} time nodes, got {nt}")
    half = width // 2
    out = []
    for j in range(nt):
        if half <= j < nt - half:
            idx = np.arange(j - half, j + half + 1)
        else:
            # one-sided: one extra point keeps the accuracy order
            w1 = width + 1
            lo = 0 if j < half else nt - w1
            idx = np.arange(lo, lo + w1)
        out.append((idx, fd_weights(np.asarray(times)[idx], times[j], order)))
    return out


# ------------------------------------------------------------ the container

RANKS = {0: "scalar", 1: "vector", 2: "matrix"}


class TorusField:
    """Time-sampled spectral field.

    ``coeffs`` has shape (nt, *comp, N, ..., N) where comp is () for scalars,
    (d,) for vectors and (d, d) for matrices.
    """

    def __init__(self, coeffs, times, d: int = 3, interval=None, real: bool = True):
        coeffs = np.asarray(coeffs, dtype=complex)
        times = np.atleast_1d(np.asarray(times, dtype=float))
        if coeffs.shape[0] != len(times):
            raise FieldError("leading axis must match the number of time nodes")
        if d not in (2, 3):
            raise FieldError("d must be 2 or 3")
        N = coeffs.shape[-1]
        if coeffs.shape[-d:] != (N,) * d:
            raise FieldError("spatial axes must be N^d")
        rank = coeffs.ndim - 1 - d
        if rank not in RANKS or any(s != d for s in coeffs.shape[1:1 + rank]):
            raise FieldError(f"unsupported component shape {coeffs.shape[1:1 + rank]}")
        if np.any(np.diff(times) <= 0):
            raise FieldError("time nodes must be strictly increasing")
        self.coeffs = coeffs
        self.coeffs.setflags(write=False)
        self.times = times
        self.d = d
        self.N = N
        self.rank = rank
        self.real = real
        if interval is None:
            interval = (float(times[0]), float(times[-1]))
        self.interval = (float(interval[0]), float(interval[1]))

    # construction -------------------------------------------------------
    @classmethod
    def from_grid(cls, values, times, d=3, **kw):
        values = np.asarray(values)
        return cls(to_coeffs(values, d), times, d=d, **kw)

    @classmethod
    def from_function(cls, func, N: int, times, d=3, **kw):
        """``func(t, X)`` with X the list of coordinate arrays returns grid samples."""
        X = grid_points(N, d)
        vals = np.stack([np.asarray(func(t, X)) for t in np.atleast_1d(times)])
        return cls.from_grid(vals, times, d=d, **kw)

    def _new(self, coeffs, times=None, **kw):
        kw.setdefault("interval", self.interval if times is None else None)
        return TorusField(coeffs, self.times if times is None else times, d=self.d,
                          real=kw.pop("real", self.real), **kw)

    @property
    def rank_name(self) -> str:
        return RANKS[self.rank]

    def grid(self, M=None):
        return to_grid(self.coeffs, self.d, M, real=self.real)

    def __add__(self, other):
        return self._new(self.coeffs + other.coeffs)

    def __sub__(self, other):
        return self._new(self.coeffs - other.coeffs)

    def __mul__(self, s):
        return self._new(self.coeffs * s)

    __rmul__ = __mul__

    # invariants ---------------------------------------------------------
    def conjugate_symmetry_error(self) -> float:
        c = self.coeffs
        axes = tuple(range(-self.d, 0))
        flipped = np.roll(np.flip(c, axis=axes), 1, axis=axes)
        scale = max(np.max(np.abs(c)), 1e-300)
        return float(np.max(np.abs(flipped - np.conj(c))) / scale)

    def symmetry_error(self) -> float:
        if self.rank != 2:
            raise FieldError("symmetry only applies to matrix fields")
        return float(np.max(np.abs(self.coeffs - np.swapaxes(self.coeffs, 1, 2))))

    # spatial calculus ---------------------------------------------------
    def derivative(self, alpha):
        return self._new(derivative(self.coeffs, self.d, alpha))

    def gradient(self):
        return self._new(grad(self.coeffs, self.d))

    def divergence(self):
        if self.rank == 2:
            return self._new(np.stack([div_matrix(c, self.d) for c in self.coeffs]))
        if self.rank == 1:
            return self._new(np.stack([div_vector(c, self.d) for c in self.coeffs]))
        raise FieldError("divergence needs a vector or matrix field")

    def space_mean(self) -> np.ndarray:
        return mean(self.coeffs, self.d).real if self.real else mean(self.coeffs, self.d)

    # time calculus ------------------------------------------------------
    def time_derivative(self, order: int, accuracy: int = 6):
        if order not in (1, 2):
            raise FieldError("time derivative order must be 1 or 2")
        out = np.zeros_like(self.coeffs)
        for j, (idx, w) in enumerate(stencil_weights(self.times, order, accuracy)):
            out[j] = np.tensordot(w, self.coeffs[idx], axes=(0, 0))
        return self._new(out)

    # norms --------------------------------------------------------------
    def sup(self) -> float:
        return float(np.max(np.abs(self.grid())))

    def l2(self) -> np.ndarray:
        """Unnormalized L^2(T^d) norm per time node (Parseval)."""
        vol = (2 * np.pi) ** self.d
        axes = tuple(range(1, self.coeffs.ndim))
        return np.sqrt(vol * np.sum(np.abs(self.coeffs) ** 2, axis=axes))

    def holder_norm(self, N: int, alpha: float = 0.0, t_set=None,
                    refine: int = 1, neighbors: int = 8, max_order: float = 4.0) -> float:
        """Sampled C^{N, alpha} norm; a lower-bound estimator of the true norm.

        The seminorm part compares grid points up to ``neighbors`` steps apart
        along each axis on a grid refined ``refine`` times (spectral
        interpolation, exact for band-limited data).
        """
        return holder_norm(self, N, alpha, t_set, refine, neighbors, max_order)

    # io -----------------------------------------------------------------
    def save(self, path):
        meta = {"d": self.d, "N": self.N, "rank": self.rank_name,
                "interval": list(self.interval), "real": self.real}
        np.savez_compressed(path, coeffs=self.coeffs, times=self.times,
                            meta=np.array(json.dumps(meta)))

    @classmethod
    def load(cls, path):
        with np.load(path) as z:
            meta = json.loads(str(z["meta"]))
            return cls(z["coeffs"], z["times"], d=meta["d"],
                       interval=tuple(meta["interval"]), real=meta["real"])

    def to_csv(self, path, t_index: int = 0, stride: int = 1):
        """Grid samples at one time node: coordinates then components."""
        X = grid_points(self.N, self.d)
        vals = self.grid()[t_index]
        comps = vals.reshape((-1,) + vals.shape[-self.d:]) if self.rank else vals[None]
        sl = (slice(None, None, stride),) * self.d
        cols = [x[sl].ravel() for x in X] + [c[sl].ravel() for c in comps]
        header = ",".join([f"x{j + 1}" for j in range(self.d)]
                          + [f"c{j}" for j in range(len(comps))])
        np.savetxt(path, np.column_stack(cols), delimiter=",", header=header, comments="")


def _multi_indices(order: int, d: int):
    if d == 1:
        yield (order,)
        return
    for a in range(order, -1, -1):
        for rest in _multi_indices(order - a, d - 1):
            yield (a,) + rest


def holder_norm(f: TorusField, N: int, alpha: float = 0.0, t_set=None,
                refine: int = 1, neighbors: int = 8, max_order: float = 4.0) -> float:
    if not 0 <= alpha < 1:
        raise FieldError("alpha must lie in [0, 1)")
    if N + alpha > max_order:
        raise FieldError("N + alpha exceeds the configured maximum")
    idx = range(len(f.times)) if t_set is None else \
        [int(np.argmin(np.abs(f.times - t))) for t in t_set]
    M = f.N * refine
    h = 2 * np.pi / M
    total = 0.0
    top = []
    for j in range(N + 1):
        best = 0.0
        for a in _multi_indices(j, f.d):
            for ti in idx:
                g = to_grid(derivative(f.coeffs[ti], f.d, a), f.d, M)
                best = max(best, float(np.max(np.abs(g))))
                if j == N and alpha > 0:
                    top.append(g)
        total += best
    if alpha > 0:
        semi = 0.0
        for g in top:
            for ax in range(f.d):
                axis = g.ndim - f.d + ax
                for s in range(1, neighbors + 1):
                    diff = np.abs(np.roll(g, -s, axis=axis) - g)
                    semi = max(semi, float(np.max(diff)) / (s * h) ** alpha)
        total += semi
    return total
