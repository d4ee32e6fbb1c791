"""Property batteries shared by the command line and the acceptance suite.

Every check returns a ``Check`` naming the measured quantity, the tolerance it
is held to and whether it passed.  Suites take a seed so their output is
reproducible.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import assembly as A
from . import blocks as B
from . import field as F
from . import geometry as G
from . import hyperbolic as H
from . import operators as O
from . import reynolds as RE
from .params import LameParams, Schedule

D = 3


@dataclass
class Check:
    suite: str
    name: str
    value: float
    tol: float
    passed: bool
    seconds: float = 0.0
    detail: dict = field(default_factory=dict)

    def __post_init__(self):
        # numpy scalars would not serialize
        self.value, self.tol = float(self.value), float(self.tol)
        self.passed = bool(self.passed)

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag} {self.suite}.{self.name}: {self.value:.3e} (tol {self.tol:.1e}, {self.seconds:.2f} s)"

    def to_dict(self) -> dict:
        return asdict(self)


def _le(suite, name, value, tol, t0, **detail):
    return Check(suite, name, float(value), float(tol), bool(value <= tol),
                 time.perf_counter() - t0, detail)


# ---------------------------------------------------------------- geometry

def geometry_suite(n: int = 1000, seed: int = 0) -> list:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        E = rng.uniform(-1, 1, (3, 3))
        E = (E + E.T) / 2
        K = np.eye(3) + E / np.max(np.abs(E)) * G.R0 * rng.uniform()
        worst = max(worst, float(np.max(np.abs(G.reconstruct(K) - K))))
    out = [_le("geometry", "reconstruction", worst, 1e-13, t0, samples=n)]
    t0 = time.perf_counter()
    dev = max(abs(G.gamma_sq(np.eye(3), i) - 0.25) for i in range(6))
    out.append(Check("geometry", "identity_weights_quarter", dev, 0.0, dev == 0.0,
                     time.perf_counter() - t0))
    return out


# ---------------------------------------------------------------- operators

def inverse_divergence_check(N: int = 64, n: int = 100, seed: int = 0) -> list:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    # white noise on a grid of half the size fills the band |k_j| < N/4
    M = N // 2
    worst_rel, worst_sym = 0.0, 0.0
    for _ in range(n):
        v = F.resize(F.to_coeffs(rng.standard_normal((3,) + (M,) * 3), D), D, N)
        R = O.inverse_divergence_coeffs(v, D)
        target = np.array(v, copy=True)
        target[..., 0, 0, 0] = 0
        err = np.max(np.abs(F.div_matrix(R, D) - target)) / np.max(np.abs(v))
        worst_rel = max(worst_rel, float(err))
        worst_sym = max(worst_sym, float(np.max(np.abs(R - np.swapaxes(R, 0, 1)))))
    el = time.perf_counter() - t0
    return [Check("operators", "inverse_divergence_relative", worst_rel, 1e-11, worst_rel <= 1e-11,
                  el, {"N": N, "samples": n}),
            Check("operators", "inverse_divergence_symmetry", worst_sym, 0.0, worst_sym == 0.0, el)]


def kernel_check(n0_values=(1, 4, 8, 12, 16, 20, 24), times=(0.3, 0.55, 0.8),
                 ell: float = 0.1) -> list:
    t0 = time.perf_counter()
    x, w = np.polynomial.legendre.leggauss(400)
    worst_mom, worst_poly = 0.0, 0.0
    for n0 in n0_values:
        k = O.build_time_kernel(n0)
        phi = k(x)
        mom = np.array([np.sum(w * phi * x**n) for n in range(n0 + 4)])
        worst_mom = max(worst_mom, abs(mom[0] - 1), float(np.max(np.abs(mom[1:]))))
        # all monomials of degree <= n0 + 3 in one vector-valued call
        powers = np.arange(n0 + 4)
        for t in times:
            got = O.mollify_callable(lambda s: s**powers, t, ell, k)
            worst_poly = max(worst_poly, float(np.max(np.abs(got - t**powers))))
    el = time.perf_counter() - t0
    return [Check("operators", "kernel_moments", worst_mom, 1e-10, worst_mom <= 1e-10, el,
                  {"n0": list(n0_values)}),
            Check("operators", "kernel_polynomial_reproduction", worst_poly, 1e-9,
                  worst_poly <= 1e-9, el)]


def operators_suite(N: int = 32, n: int = 20, seed: int = 0) -> list:
    return inverse_divergence_check(N, n, seed) + kernel_check()


# ---------------------------------------------------------------- blocks

def blocks_suite(n: int = 200, eps: float = 1e-4, seed: int = 0,
                 params: LameParams | None = None) -> list:
    params = params or LameParams()
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    c = params.lam + params.mu
    worst_res, worst_pol, worst_ratio = 0.0, 0.0, 0.0
    above = 0
    for _ in range(n):
        Afr = B.freeze(rng.uniform(-eps / 2, eps / 2, (3, 3)))
        for f in G.DIRECTIONS:
            b = B.build_block(Afr, f, params)
            worst_res = max(worst_res, float(np.max(np.abs(B.plane_wave_residual(Afr, b, params)))))
            worst_pol = max(worst_pol, abs(b.a2) + abs(b.a3))
            e = B.deviation(b.coefficients, c)
            floor = 64 * np.finfo(float).eps * (1 + sum(abs(x) for x in b.coefficients))
            for r, bd in zip(b.residuals, B.residual_bounds(e, len(b.residuals), floor)):
                worst_ratio = max(worst_ratio, r / bd)
                above += r > bd
    el = time.perf_counter() - t0
    return [Check("blocks", "plane_wave_residual", worst_res, 1e-10, worst_res <= 1e-10, el,
                  {"samples": n, "eps": eps}),
            Check("blocks", "newton_residual_over_bound", worst_ratio, 1.0, above == 0, el),
            Check("blocks", "polarization", worst_pol, 0.1, worst_pol <= 0.1, el)]


# ---------------------------------------------------------------- assembly

def partition_check(n: int = 100000, seed: int = 0, cells=(2, 4, 6), tau: float = 0.5) -> list:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    x = rng.uniform(-np.pi, np.pi, (n, 3))
    worst_chi = 0.0
    for m in cells:
        cut = A.CutoffSystem(tau, m)
        # chi is a product of axis factors; tabulate them once per axis
        ax = [[cut.chi_axis(u, x[:, j]) ** 2 for u in range(m)] for j in range(3)]
        tot = sum(ax[0][a] * ax[1][b] * ax[2][c] for a, b, c in cut.cell_indices())
        worst_chi = max(worst_chi, float(np.max(np.abs(tot - 1))))
    cut = A.CutoffSystem(tau, 2)
    t = rng.uniform(-3, 3, n)
    s_lo, s_hi = math.floor(-3 / tau) - 2, math.ceil(3 / tau) + 2
    tot = sum(cut.theta(s, t) ** 2 for s in range(s_lo, s_hi + 1))
    worst_theta = float(np.max(np.abs(tot - 1)))
    # disjointness: indices further apart than one lattice step never overlap
    overlap = 0.0
    cut = A.CutoffSystem(tau, 4)
    ts = rng.uniform(-1, 2, 2000)
    xs = rng.uniform(-np.pi, np.pi, (2000, 3))
    idx = [A.WaveIndex(s, u) for s in range(-1, 4) for u in cut.cell_indices()]
    V = np.stack([cut.theta(I.s, ts) * cut.chi(I.upsilon, xs) for I in idx])
    far = np.array([[I.distance(J, 4) > 1 for J in idx] for I in idx])
    # sum over samples of |product| for every pair; zero iff every product vanishes
    prod = np.abs(V) @ np.abs(V).T
    overlap = float(np.max(prod[far]))
    el = time.perf_counter() - t0
    return [Check("assembly", "space_partition", worst_chi, 1e-12, worst_chi <= 1e-12, el,
                  {"points": n}),
            Check("assembly", "time_partition", worst_theta, 1e-12, worst_theta <= 1e-12, el),
            Check("assembly", "disjointness", overlap, 0.0, overlap == 0.0, el)]


def assembly_suite(seed: int = 0) -> list:
    out = partition_check(seed=seed)
    t0 = time.perf_counter()
    cut = A.CutoffSystem(0.7, 2)
    blocks = A.AnchoredBlocks(lambda t: np.zeros((3, 3, 8, 8, 8), complex), cut, 0, LameParams())
    p = A.Perturbation(cutoffs=cut, blocks=blocks, weight=A.constant_weight(0.25, 0),
                       carrier_freq=1, direction_index=0, N=20, params=LameParams(),
                       check_resolution=False)
    snap = p.snapshot(0.4, (0,), split=True)
    err = float(np.max(np.abs(snap.gradient() - snap.w_p - snap.w_c)))
    out.append(_le("assembly", "gradient_split", err, 1e-14, t0))
    return out


# ---------------------------------------------------------------- reynolds

def reynolds_suite(N: int = 64, seed: int = 0) -> list:
    from .driver import starting_tuple
    t0 = time.perf_counter()
    sched = Schedule(mode="toy-override", lambdas=(4, 16), deltas=(0.5, 0.25))
    tup = starting_tuple(sched, LameParams(), N)
    worst = max(RE.sup(RE.lhs(tup.u(t), tup.u(t, 2), LameParams())) for t in (0.0, 0.37, 0.81))
    out = [_le("reynolds", "starting_tuple_lhs", worst, 1e-11, t0, N=N)]
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    M = 12
    u = F.to_coeffs(0.05 * rng.standard_normal((3,) + (M,) * 3), D)
    val = RE.lhs(u, -u, LameParams())
    R = O.inverse_divergence_coeffs(val, D)
    r0 = RE.bookkeeping_residual(val, R, 0.0)
    spread = max(abs(RE.bookkeeping_residual(val, R, c) - r0) for c in (0.1, 2.0, -5.0))
    out.append(Check("reynolds", "c_insensitivity", spread, 0.0, spread == 0.0,
                     time.perf_counter() - t0))
    return out


# ---------------------------------------------------------------- hyperbolic

def hyperbolic_suite(n: int = 100, seed: int = 0, params: LameParams | None = None) -> list:
    params = params or LameParams()
    out = []
    for d in (2, 3):
        t0 = time.perf_counter()
        S = H.sample_degeneracy(params, d, n=n, seed=seed, fd_step=1e-5)
        mult = {z for _, _, z in S.rows}
        out.append(_le("hyperbolic", f"degeneracy_d{d}", S.max_residual, 1e-6, t0,
                       rejected_complex=S.rejected_complex,
                       rejected_conditioning=S.rejected_conditioning))
        out.append(Check("hyperbolic", f"zero_multiplicity_d{d}", float(len(mult)), 1.0,
                         mult == {d * (d - 1)}, 0.0, {"observed": sorted(mult)}))
        t0 = time.perf_counter()
        orders = [H.richardson_order(U, xi, params) for U, xi in S.states[:10]]
        med = float(np.median(orders))
        out.append(Check("hyperbolic", f"central_difference_order_d{d}", abs(med - 2), 0.1,
                         abs(med - 2) <= 0.1, time.perf_counter() - t0, {"median_order": med}))
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        U = H.random_state(rng, 2)
        xi = H.random_direction(rng, 2)
        try:
            fe = H.flux_eigen(U, xi, params)
        except H.AdmissibilityError:
            continue
        worst = max(worst, float(np.max(np.abs(fe.values - H.closed_form_2d(U, xi, params)))))
    out.append(_le("hyperbolic", "closed_form_2d", worst, 1e-10, t0))
    return out


SUITES = {
    "geometry": geometry_suite,
    "operators": operators_suite,
    "blocks": blocks_suite,
    "assembly": assembly_suite,
    "reynolds": reynolds_suite,
    "hyperbolic": hyperbolic_suite,
}


def run_suite(name: str, seed: int = 0) -> list:
    if name == "all":
        out = []
        for fn in SUITES.values():
            out.extend(fn(seed=seed))
        return out
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES) + ['all']}")
    return SUITES[name](seed=seed)
