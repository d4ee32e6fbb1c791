"""Cutoff partitions, wave indexing and the spectral perturbation of one stage.

A stage adds, for every wave index I = (s, upsilon) (time slab s, space cell
upsilon), an oscillation

    theta_I(t) chi_I(x) d(t, x) tilde_f_I / (sqrt2 K[I] |tilde_f_I| |f|)
        * 2 cos(K [I] (f.x - omega_I t))

where K is the integer carrier of the stage, [I] in 1..16 the parity code and
(tilde_f_I, omega_I) come from the building block frozen at the cell anchor.

Spatial discretization.  The perturbation is represented by its projection
onto the retained band |k_j| < N/2.  The cutoffs are separable, so the Fourier
coefficients of chi_upsilon(x) e^{i K [I] f.x} are outer products of shifted
1D profile coefficients; those are computed once on a fine 1D grid.  This
makes the gradient split exact: the carrier part and the cutoff part are
obtained from the same coefficients, multiplied by i K [I] f and by the
profile wave number respectively.

Time is treated analytically: each snapshot carries the perturbation and its
first two time derivatives.
"""
from __future__ import annotations

import itertools
import math
from collections import OrderedDict
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import field as F
from .blocks import build_block, freeze
from .geometry import DIRECTIONS, PROJECTORS, R0, gamma_sq_all
from .params import LameParams, Schedule, carrier, derived_scales


class AssemblyError(ValueError):
    pass


class CutoffError(AssemblyError):
    pass


class ResolutionError(AssemblyError):
    """The stage's oscillations do not fit in the retained band."""


class WeightError(AssemblyError):
    pass


# ------------------------------------------------------------ wave indices

def _even(j: int) -> int:
    return 1 if j % 2 == 0 else 0


def parity(s: int, upsilon) -> int:
    """[s] + sum_i 2^i [upsilon_i] + 1 with [even] = 1, [odd] = 0; in 1..16."""
    return _even(s) + sum(2 ** (j + 1) * _even(u) for j, u in enumerate(upsilon)) + 1


@dataclass(frozen=True, order=True)
class WaveIndex:
    s: int
    upsilon: tuple

    @property
    def parity_code(self) -> int:
        return parity(self.s, self.upsilon)

    def distance(self, other: "WaveIndex", cells: int) -> int:
        """Max-norm distance, with cells compared on the periodic lattice Z_cells."""
        dist = abs(self.s - other.s)
        for a, b in zip(self.upsilon, other.upsilon):
            r = (a - b) % cells
            dist = max(dist, min(r, cells - r))
        return dist


# ------------------------------------------------------------ jets

@dataclass(frozen=True)
class Jet:
    """Value with first and second derivatives, for closed-form time channels."""
    v: complex
    d1: complex = 0.0
    d2: complex = 0.0

    def __add__(self, o):
        return Jet(self.v + o.v, self.d1 + o.d1, self.d2 + o.d2)

    def __mul__(self, o):
        if not isinstance(o, Jet):
            return Jet(self.v * o, self.d1 * o, self.d2 * o)
        return Jet(self.v * o.v, self.d1 * o.v + self.v * o.d1,
                   self.d2 * o.v + 2 * self.d1 * o.d1 + self.v * o.d2)

    __rmul__ = __mul__

    def reciprocal_sqrt(self):
        # g = v^{-1/2}
        g = self.v ** -0.5
        g1 = -0.5 * self.v ** -1.5 * self.d1
        g2 = 0.75 * self.v ** -2.5 * self.d1**2 - 0.5 * self.v ** -1.5 * self.d2
        return Jet(g, g1, g2)

    def conj(self):
        return Jet(np.conj(self.v), np.conj(self.d1), np.conj(self.d2))

    def order(self, r: int):
        return (self.v, self.d1, self.d2)[r]


def step_jet(x: float, dx: float = 1.0) -> Jet:
    """Smooth step exp(-1/x) / (exp(-1/x) + exp(-1/(1-x))) with chain factor dx."""
    if x <= 0:
        return Jet(0.0)
    if x >= 1:
        return Jet(1.0)
    y = 1.0 - x
    a = math.exp(-1.0 / x)
    b = math.exp(-1.0 / y)
    a1, a2 = a / x**2, a * (1 / x**4 - 2 / x**3)
    b1, b2 = -b / y**2, b * (1 / y**4 - 2 / y**3)
    D, D1, D2 = a + b, a1 + b1, a2 + b2
    s = a / D
    s1 = (a1 * D - a * D1) / D**2
    s2 = (a2 * D - a * D2) / D**2 - 2 * D1 * (a1 * D - a * D1) / D**3
    return Jet(s, s1 * dx, s2 * dx * dx)


def step(x):
    x = np.asarray(x, dtype=float)
    a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
    y = 1.0 - x
    b = np.where(y > 0, np.exp(-1.0 / np.where(y > 0, y, 1.0)), 0.0)
    return a / (a + b)


# ------------------------------------------------------------ profiles

def time_bump(y) -> np.ndarray:
    """1 on [1/4, 3/4], 0 outside (-1/4, 5/4)."""
    y = np.asarray(y, dtype=float)
    return step(2 * (y + 0.25)) * step(2 * (1.25 - y))


def time_bump_jet(y: float, dy: float) -> Jet:
    return step_jet(2 * (y + 0.25), 2 * dy) * step_jet(2 * (1.25 - y), -2 * dy)


def space_bump(y) -> np.ndarray:
    """1 on |y| <= 3 pi/4, 0 for |y| >= 5 pi/4 (one axis of the cube profile)."""
    y = np.asarray(y, dtype=float)
    return step((1.25 * np.pi - np.abs(y)) / (0.5 * np.pi))


def space_profile(y) -> np.ndarray:
    """Space bump divided by the root of its squared 2 pi-periodization."""
    y = np.asarray(y, dtype=float)
    y0 = y - 2 * np.pi * np.round(y / (2 * np.pi))
    total = sum(space_bump(y0 - 2 * np.pi * k) ** 2 for k in (-1, 0, 1))
    return space_bump(y) / np.sqrt(total)


# ------------------------------------------------------------ cutoff system

PROFILE_GRID = 8192


class CutoffSystem:
    """Time slabs of width tau and a lattice of cells**3 space cubes on T^3.

    theta_s(t) = eta(t/tau - s) / sqrt(sum_j eta(t/tau - j)^2)
    chi_upsilon(x) = prod_j rho(cells x_j - 2 pi upsilon_j)   (periodized)
    """

    def __init__(self, tau: float, cells: int, profile_grid: int = PROFILE_GRID):
        if cells < 2 or cells % 2:
            raise CutoffError(f"cells per axis must be an even integer >= 2, got {cells}")
        self.tau = float(tau)
        self.cells = int(cells)
        self.profile_grid = profile_grid

    # time --------------------------------------------------------------
    def active_slabs(self, t: float):
        y = t / self.tau
        lo = math.floor(y - 1.25) + 1
        return [s for s in range(lo, lo + 3) if -0.25 < y - s < 1.25]

    def theta_jet(self, s: int, t: float) -> Jet:
        y = t / self.tau
        dy = 1.0 / self.tau
        num = time_bump_jet(y - s, dy)
        if num.v == 0.0:
            return Jet(0.0)
        total = Jet(0.0)
        for j in range(math.floor(y) - 2, math.floor(y) + 3):
            e = time_bump_jet(y - j, dy)
            total = total + e * e
        return num * total.reciprocal_sqrt()

    def theta(self, s: int, t) -> np.ndarray:
        y = np.asarray(t, dtype=float) / self.tau
        fl = np.floor(y)
        total = sum(time_bump(y - (fl + j)) ** 2 for j in range(-2, 3))
        return time_bump(y - s) / np.sqrt(total)

    def slab_support(self, s: int):
        return ((s - 0.25) * self.tau, (s + 1.25) * self.tau)

    def slab_plateau(self, s: int):
        return ((s + 0.25) * self.tau, (s + 0.75) * self.tau)

    # space -------------------------------------------------------------
    def cell_indices(self):
        return list(itertools.product(range(self.cells), repeat=3))

    def anchor(self, upsilon) -> np.ndarray:
        """Cell center 2 pi upsilon / cells, mapped into [-pi, pi)."""
        x = 2 * np.pi * np.asarray(upsilon, dtype=float) / self.cells
        return (x + np.pi) % (2 * np.pi) - np.pi

    def chi_axis(self, u: int, x) -> np.ndarray:
        """Periodized 1D factor of chi for cell coordinate u."""
        x = np.asarray(x, dtype=float)
        m = self.cells
        # all lattice copies of the cell that can reach [-pi, pi)
        return sum(space_profile(m * (x + 2 * np.pi * n) - 2 * np.pi * u) for n in (-1, 0, 1))

    def chi(self, upsilon, points) -> np.ndarray:
        """chi_upsilon at points of shape (..., 3)."""
        P = np.asarray(points, dtype=float)
        out = np.ones(P.shape[:-1])
        for j, u in enumerate(upsilon):
            out = out * self.chi_axis(u, P[..., j])
        return out

    def cell_support(self, upsilon):
        """Center and half-width of the cube containing supp chi_upsilon."""
        return self.anchor(upsilon), 1.25 * np.pi / self.cells

    @lru_cache(maxsize=None)
    def axis_coeffs(self, u: int):
        """Fourier coefficients (length profile_grid, FFT order) of chi_axis(u)."""
        L = self.profile_grid
        x = -np.pi + 2 * np.pi * np.arange(L) / L
        c = F.to_coeffs(self.chi_axis(u, x), 1)
        c.setflags(write=False)
        return c

    def shifted(self, u: int, shift: int, N: int):
        """Coefficients of chi_axis(u) e^{i shift x} on the band of size N."""
        L = self.profile_grid
        k = F.wavenumbers(N).astype(int)
        src = k - shift
        if np.any(np.abs(src) >= L // 2):
            raise ResolutionError("profile grid too coarse for the requested shift")
        out = self.axis_coeffs(u)[src % L].astype(complex)
        out[~F.band_mask(N, 1)] = 0.0
        return out, src


def build_cutoffs(sched: Schedule, q: int, i: int, **kw) -> CutoffSystem:
    _, tau, mu_inv = derived_scales(sched, q, i)
    return CutoffSystem(tau, mu_inv, **kw)


# ------------------------------------------------------------ weight field

def weight_values(R, delta: float, i: int, points=None) -> np.ndarray:
    """delta^{1/2} Gamma_i(Id - R/delta) for matrix samples R of shape (3, 3, ...)."""
    R = np.asarray(R, dtype=float)
    K = np.moveaxis(np.eye(3)[(...,) + (None,) * (R.ndim - 2)] - R / delta, (0, 1), (-2, -1))
    dev = np.max(np.abs(K - np.eye(3)), axis=(-2, -1))
    g = gamma_sq_all(K)[i]
    bad = (dev > R0) | (g < 0)
    if np.any(bad):
        idx = np.unravel_index(int(np.argmax(bad)), bad.shape)
        where = f"grid index {tuple(int(j) for j in idx)}"
        if points is not None:
            where += " at x = " + str(tuple(float(p[idx]) for p in points))
        raise WeightError(f"Id - R/delta leaves the admissible ball at {where}: "
                          f"|K - Id|_max = {float(dev[idx]):.4g}, weight^2 = {float(g[idx]):.4g}")
    return math.sqrt(delta) * np.sqrt(g)


def weight_field(R_ell, delta_next: float, i: int):
    """Scalar weight field from matrix coefficients (3, 3, N, N, N), or a TorusField."""
    if isinstance(R_ell, F.TorusField):
        vals = np.stack([weight_field(c, delta_next, i) for c in R_ell.coeffs])
        return R_ell._new(vals)
    N = R_ell.shape[-1]
    grid = F.to_grid(R_ell, 3)
    vals = weight_values(grid, delta_next, i, F.grid_points(N, 3))
    return F.to_coeffs(vals, 3)


@dataclass
class WeightJet:
    """Weight field and its first two time derivatives (coefficient arrays).

    ``constant`` is set when the weight is a spatial and temporal constant.
    """
    d0: np.ndarray | float
    d1: np.ndarray | float = 0.0
    d2: np.ndarray | float = 0.0
    constant: bool = False

    def order(self, r):
        return (self.d0, self.d1, self.d2)[r]


def weight_jet(R_jet, delta: float, i: int) -> WeightJet:
    """Weight and time derivatives from (R, R_t, R_tt) coefficient arrays.

    The squared weight is affine in R, so d = sqrt(delta g(R)) with g affine
    and the time derivatives follow from the chain rule pointwise.
    """
    R, Rt, Rtt = R_jet
    N = R.shape[-1]
    d = weight_values(F.to_grid(R, 3), delta, i, F.grid_points(N, 3))
    # the squared weights are linear in K, so d^2 = delta g(Id) - g(R)
    lin = lambda A: gamma_sq_all(np.moveaxis(F.to_grid(A, 3), (0, 1), (-2, -1)))[i]
    g1 = -lin(Rt)
    g2 = -lin(Rtt)
    d1 = g1 / (2 * d)
    d2 = (g2 - 2 * d1**2) / (2 * d)
    return WeightJet(F.to_coeffs(d, 3), F.to_coeffs(d1, 3), F.to_coeffs(d2, 3))


def constant_weight(delta: float, i: int) -> WeightJet:
    """Weight for R_ell = 0: delta^{1/2} Gamma_i(Id) = delta^{1/2} / 2."""
    g = gamma_sq_all(np.eye(3))[i]
    return WeightJet(math.sqrt(delta * g), constant=True)


# ------------------------------------------------------------ frozen blocks

def point_values(coeffs, points) -> np.ndarray:
    """Evaluate band-limited fields (..., N, N, N) at points of shape (P, 3)."""
    N = coeffs.shape[-1]
    k = F.wavenumbers(N)
    P = np.asarray(points, dtype=float)
    E = [np.exp(1j * np.outer(P[:, j], k)) for j in range(3)]
    out = np.einsum("...abc,pa,pb,pc->...p", coeffs, E[0], E[1], E[2], optimize=True)
    return out.real


class AnchoredBlocks:
    """Lazily built building blocks frozen at (s tau, cell anchor).

    ``grad_at(t)`` returns gradient coefficients (3, 3, N, N, N) of the
    mollified velocity at time t.
    """

    def __init__(self, grad_at, cutoffs: CutoffSystem, direction_index: int,
                 params: LameParams, tol: float = 1e-12):
        self.grad_at = grad_at
        self.cutoffs = cutoffs
        self.f = DIRECTIONS[direction_index]
        self.params = params
        self.tol = tol
        self._slabs = {}

    def _slab(self, s: int):
        if s not in self._slabs:
            cells = self.cutoffs.cell_indices()
            pts = np.stack([self.cutoffs.anchor(u) for u in cells])
            G = point_values(self.grad_at(s * self.cutoffs.tau), pts)
            out = {}
            for j, u in enumerate(cells):
                Gj = G[..., j]
                out[u] = (build_block(freeze(Gj), self.f, self.params, self.tol), Gj)
            self._slabs[s] = out
        return self._slabs[s]

    def get(self, I: WaveIndex):
        """(block, frozen gradient) for index I."""
        return self._slab(I.s)[tuple(I.upsilon)]

    def __getitem__(self, I: WaveIndex):
        return self.get(I)[0]


class BlockTable:
    """Explicit map WaveIndex -> (block, frozen gradient); missing entries raise."""

    def __init__(self, entries: dict):
        self.entries = dict(entries)

    def get(self, I: WaveIndex):
        try:
            return self.entries[I]
        except KeyError:
            raise AssemblyError(f"no building block for active index {I}") from None

    def __getitem__(self, I):
        return self.get(I)[0]


# ------------------------------------------------------------ perturbation

@dataclass
class Snapshot:
    """Perturbation at one time; all arrays are band-limited coefficients.

    principal[r]   : d^r/dt^r of the oscillatory part, shape (3, N, N, N)
    correction[r]  : d^r/dt^r of the constant time correction, shape (3,)
    w_p, w_c       : carrier and cutoff parts of its gradient, (3, 3, N, N, N)
    frozen_cross   : sum_I cross(frozen gradient_I, carrier part_I)
    """
    t: float
    indices: list
    principal: list
    correction: list
    w_p: np.ndarray | None = None
    w_c: np.ndarray | None = None
    frozen_cross: np.ndarray | None = None

    def total(self, r: int = 0) -> np.ndarray:
        out = np.array(self.principal[r], copy=True)
        out[(slice(None), 0, 0, 0)] += self.correction[r]
        return out

    def gradient(self) -> np.ndarray:
        return F.grad(self.principal[0], 3)


class Perturbation:
    """Lazy perturbation of one stage; evaluate with ``snapshot(t)``."""

    def __init__(self, *, cutoffs: CutoffSystem, blocks, weight, carrier_freq: int,
                 direction_index: int, N: int, params: LameParams,
                 sign_overrides: dict | None = None, check_resolution: bool = True,
                 cache_size: int = 4):
        self.cutoffs = cutoffs
        self.blocks = blocks
        self.weight = weight            # WeightJet or callable t -> WeightJet
        self.K = int(carrier_freq)
        if self.K != carrier_freq:
            raise AssemblyError(f"carrier {carrier_freq} is not an integer")
        self.i = direction_index
        self.f = DIRECTIONS[direction_index].astype(float)
        self.fint = DIRECTIONS[direction_index]
        self.N = N
        self.params = params
        self.signs = dict(sign_overrides or {})
        top = 16 * self.K * int(np.max(np.abs(self.fint)))
        self.max_frequency = top
        if check_resolution and top >= N // 2:
            raise ResolutionError(
                f"stage oscillations reach wave number {top} but the band of N = {N} "
                f"ends at {N // 2 - 1}; need N > {2 * top}")
        self.cache_size = cache_size
        self._cache = OrderedDict()

    # per-index data ----------------------------------------------------
    def sign(self, I: WaveIndex) -> int:
        return self.signs.get(I, 1)

    def active(self, t: float):
        out = []
        for s in self.cutoffs.active_slabs(t):
            th = self.cutoffs.theta_jet(s, t)
            if th.v == 0.0:
                continue
            for u in self.cutoffs.cell_indices():
                out.append((WaveIndex(s, u), th))
        return out

    def _weight_at(self, t) -> WeightJet:
        return self.weight(t) if callable(self.weight) else self.weight

    def _scalars(self, I: WaveIndex, need_grad: bool):
        """Spatial coefficient arrays for chi_I e^{iKf.x} and its conjugate."""
        N = self.N
        code = I.parity_code
        shift = self.K * code * self.fint
        a, b, da, db = [], [], [], []
        for j, u in enumerate(I.upsilon):
            cj, src = self.cutoffs.shifted(u, int(shift[j]), N)
            # conjugate: coefficient at k is conj(c(-k + shift)) = c(k + shift) for real chi
            cb, srcb = self.cutoffs.shifted(u, int(-shift[j]), N)
            a.append(cj)
            b.append(cb)
            if need_grad:
                da.append(1j * src * cj)
                db.append(1j * srcb * cb)
        return a, b, da, db

    @staticmethod
    def _outer(v):
        return v[0][:, None, None] * v[1][None, :, None] * v[2][None, None, :]

    def snapshot(self, t: float, orders=(0,), split: bool = False,
                 frozen: bool = False) -> Snapshot:
        key = (float(t), tuple(orders), split, frozen)
        if key in self._cache:
            self._cache.move_to_end(key)
            return self._cache[key]
        N = self.N
        shape = (N, N, N)
        rmax = max(orders)
        S = [np.zeros((3,) + shape, complex) for _ in range(rmax + 1)]
        P = np.zeros((3,) + shape, complex) if split or frozen else None
        H = np.zeros((3, 3) + shape, complex) if split else None
        L2 = np.zeros((3, 3) + shape, complex) if frozen else None
        active = self.active(t)
        for I, th in active:
            block, G = self.blocks.get(I)
            code = I.parity_code
            Kt = self.K * code
            ft = block.tilde_f
            c = self.sign(I) / (math.sqrt(2) * np.linalg.norm(ft) * np.linalg.norm(self.f))
            w = Kt * block.omega
            ph = np.exp(-1j * w * t)
            E = Jet(ph, -1j * w * ph, -(w**2) * ph)
            Tg = th * E
            Tb = th * E.conj()
            a, b, da, db = self._scalars(I, split)
            g = self._outer(a)
            gb = self._outer(b)
            for r in range(rmax + 1):
                sig = Tg.order(r) * g + Tb.order(r) * gb
                for m in range(3):
                    S[r][m] += (c / Kt * ft[m]) * sig
            if P is not None or L2 is not None:
                pi = 1j * (Tg.v * g - Tb.v * gb)
                if P is not None:
                    for m in range(3):
                        P[m] += (c * ft[m]) * pi
                if L2 is not None:
                    M = F.cross_grid(G[:, :, None], np.outer(ft, self.f)[:, :, None])[:, :, 0]
                    for p in range(3):
                        for q in range(p, 3):
                            if M[p, q] != 0:
                                L2[p, q] += (c * M[p, q]) * pi
            if H is not None:
                for n in range(3):
                    va = list(a)
                    vb = list(b)
                    va[n] = da[n]
                    vb[n] = db[n]
                    eta = Tg.v * self._outer(va) + Tb.v * self._outer(vb)
                    for m in range(3):
                        H[m, n] += (c / Kt * ft[m]) * eta
        if L2 is not None:
            for p in range(3):
                for q in range(p):
                    L2[p, q] = L2[q, p]
        wj = self._weight_at(t)
        principal = self._apply_weight_channels(S, wj, orders)
        w_p = w_c = fc = None
        if split:
            w_p = self._times_weight(np.einsum("m...,n->mn...", P, self.f), wj)
            w_c = self._times_weight(H, wj)
            if not wj.constant:
                gd = F.grad(np.asarray(wj.d0), 3)
                w_c = w_c + F.multiply(S[0][:, None], gd[None, :], 3)
        if frozen:
            fc = self._times_weight(L2, wj)
        correction = [-F.mean(p, 3) for p in principal]
        snap = Snapshot(float(t), [I for I, _ in active], principal, correction, w_p, w_c, fc)
        if not (split or frozen) and self.cache_size:
            self._cache[key] = snap
            while len(self._cache) > self.cache_size:
                self._cache.popitem(last=False)
        return snap

    def _times_weight(self, A, wj: WeightJet):
        if wj.constant:
            return wj.d0 * A
        return F.multiply(A, np.asarray(wj.d0), 3)

    def _apply_weight_channels(self, S, wj: WeightJet, orders):
        out = []
        for r in range(max(orders) + 1):
            if wj.constant:
                out.append(wj.d0 * S[r])
                continue
            # Leibniz rule for d * S
            acc = F.multiply(S[r], np.asarray(wj.d0), 3)
            if r >= 1:
                acc = acc + r * F.multiply(S[r - 1], np.asarray(wj.d1), 3)
            if r == 2:
                acc = acc + F.multiply(S[0], np.asarray(wj.d2), 3)
            out.append(acc)
        return out

    def clear_cache(self):
        self._cache.clear()

    # per-index coefficient fields (diagnostics) --------------------------
    def amplitude(self, I: WaveIndex, t: float, points) -> np.ndarray:
        """gamma_I = theta chi d / (sqrt2 |tilde f| |f|) at points (P, 3), signed."""
        block, _ = self.blocks.get(I)
        th = self.cutoffs.theta_jet(I.s, t).v
        chi = self.cutoffs.chi(I.upsilon, points)
        wj = self._weight_at(t)
        d = wj.d0 if wj.constant else point_values(np.asarray(wj.d0), points)
        c = self.sign(I) / (math.sqrt(2) * np.linalg.norm(block.tilde_f) * np.linalg.norm(self.f))
        return c * th * chi * d

    def index_vector(self, I: WaveIndex, t: float, points) -> np.ndarray:
        """u_I = gamma_I tilde_f_I, shape (3, P)."""
        block, _ = self.blocks.get(I)
        return np.outer(block.tilde_f, self.amplitude(I, t, points))

    def export(self, times, orders=(0,)) -> F.TorusField:
        """Total perturbation sampled at ``times`` as a TorusField."""
        coeffs = np.stack([self.snapshot(t, orders).total(0) for t in times])
        return F.TorusField(coeffs, times, d=3)


def build_perturbation(blocks, weight, sched: Schedule, q: int, i: int, N: int,
                       params: LameParams, sign_overrides=None,
                       check_resolution: bool = True, cutoffs=None) -> Perturbation:
    """Perturbation of stage (q, i) along direction index i (direction f_{i+1})."""
    if cutoffs is None:
        cutoffs = build_cutoffs(sched, q, i)
    return Perturbation(cutoffs=cutoffs, blocks=blocks, weight=weight,
                        carrier_freq=carrier(sched, q, i + 1), direction_index=i, N=N,
                        params=params, sign_overrides=sign_overrides,
                        check_resolution=check_resolution)


def spectral_mass_outside(coeffs, lo: float, hi: float) -> float:
    """Fraction of sum |c_k|^2 with |k| outside [lo, hi]."""
    N = coeffs.shape[-1]
    r = np.sqrt(F.ksq(N, 3))
    w = np.sum(np.abs(coeffs) ** 2, axis=tuple(range(coeffs.ndim - 3)))
    tot = float(np.sum(w))
    if tot == 0:
        return 0.0
    return float(np.sum(w[(r < lo) | (r > hi)]) / tot)
