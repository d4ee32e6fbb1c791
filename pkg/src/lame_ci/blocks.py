"""Plane-wave solutions of the Lamé system with frozen first-order coefficients.

Given a constant gradient G = grad u (G[m, n] = d_n u_m), the linearized
nonlinearity acting on a perturbation w is

    (A(grad^2 w))_p = A[p, m, n, r] d_n d_r w_m,
    A[p, m, n, r]   = delta_{rp} G[m, n] - delta_{nr} G[m, p].

For a direction f we look for w = (f + a2 f_perp + a3 f3) exp(i(f.x - omega t))
solving  w_tt - mu Lap w - (lam+mu) grad div w + A(grad^2 w) = 0.
Projecting on the frame gives a quadratic system in (a2, a3), solved by
Newton's method started from the linear guess.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import DIRECTIONS
from .params import LameParams


class BlockError(ValueError):
    pass


class ConvergenceError(BlockError):
    def __init__(self, msg, trace):
        super().__init__(msg)
        self.trace = trace


class DispersionError(BlockError):
    pass


def freeze(grad_u) -> np.ndarray:
    """Frozen 4-tensor A[p, m, n, r] from a 3x3 gradient sample."""
    G = np.asarray(grad_u, dtype=float)
    I = np.eye(3)
    return np.einsum("rp,mn->pmnr", I, G) - np.einsum("nr,mp->pmnr", I, G)


def apply_frozen(A, hess_w) -> np.ndarray:
    """A(grad^2 w)_p for a Hessian array H[m, n, r] = d_n d_r w_m."""
    return np.einsum("pmnr,mnr->p", A, hess_w)


# ---------------------------------------------------------------- frames

# paired sign-flip partner inside each axis pair
_PARTNER = {0: 1, 1: 0, 2: 3, 3: 2, 4: 5, 5: 4}


@dataclass(frozen=True)
class Frame:
    f: np.ndarray
    f_perp: np.ndarray
    f3: np.ndarray

    @property
    def vectors(self):
        return (self.f, self.f_perp, self.f3)


def direction_index(f) -> int:
    f = np.asarray(f)
    for i, g in enumerate(DIRECTIONS):
        if np.array_equal(f, g):
            return i
    raise BlockError(f"{tuple(f)} is not one of the six directions")


def frame_of(f) -> Frame:
    i = direction_index(f)
    fv = DIRECTIONS[i].astype(float)
    fp = DIRECTIONS[_PARTNER[i]].astype(float)
    f3 = np.cross(fv / np.linalg.norm(fv), fp)
    return Frame(fv, fp, f3)


def tilde_coeffs(A, frame: Frame) -> np.ndarray:
    """T[c, s, i, j] = A[p,m,n,r] f^(i)_n f^(j)_r f^(s)_m f^(c)_p / |f|^2."""
    V = np.stack(frame.vectors)          # V[i] = f^(i)
    f2 = frame.f.dot(frame.f)
    return np.einsum("pmnr,in,jr,sm,cp->csij", A, V, V, V, V) / f2


# ---------------------------------------------------------------- Newton

@dataclass
class NewtonResult:
    a1: float
    a2: float
    residuals: list          # |eps_1,n| + |eps_2,n| for n = 1, 2, ...
    steps: list = field(default_factory=list)


def poly_residual(coef, a1, a2):
    A1, A2, B1, B2, C1, C2, D1, D2, E1, E2 = coef
    r1 = A1 * a1**2 + E1 * a1 * a2 + C1 * a1 + B2 * a2 - D1
    r2 = A2 * a2**2 + E2 * a1 * a2 + C2 * a2 + B1 * a1 - D2
    return r1, r2


def solve_polynomial_system(A1, A2, B1, B2, C1, C2, D1, D2, E1, E2,
                            tol: float = 1e-12, max_iter: int = 60) -> NewtonResult:
    """Newton iteration for the coupled quadratic system.

    A1 a1^2 + E1 a1 a2 + C1 a1 + B2 a2 = D1
    A2 a2^2 + E2 a1 a2 + C2 a2 + B1 a1 = D2
    """
    coef = (A1, A2, B1, B2, C1, C2, D1, D2, E1, E2)
    if C1 == 0 or C2 == 0:
        raise ConvergenceError("zero diagonal coefficient", [])
    a1, a2 = D1 / C1, D2 / C2
    r1, r2 = poly_residual(coef, a1, a2)
    res = [abs(r1) + abs(r2)]
    trace = [(a1, a2, res[-1])]
    while res[-1] > tol:
        if len(res) > max_iter:
            raise ConvergenceError("iteration cap reached", trace)
        J11 = C1 + 2 * A1 * a1 + E1 * a2
        J12 = B2 + E1 * a1
        J21 = B1 + E2 * a2
        J22 = C2 + 2 * A2 * a2 + E2 * a1
        det = J11 * J22 - J21 * J12
        if det == 0 or not np.isfinite(det):
            raise ConvergenceError("singular linearization", trace)
        d1 = -(r1 * J22 - r2 * J12) / det
        d2 = -(r2 * J11 - r1 * J21) / det
        a1, a2 = a1 + d1, a2 + d2
        r1, r2 = poly_residual(coef, a1, a2)
        new = abs(r1) + abs(r2)
        trace.append((a1, a2, new))
        if not new < res[-1]:
            if new <= 64 * np.finfo(float).eps * (1 + sum(abs(c) for c in coef)):
                res.append(new)
                break
            raise ConvergenceError("residual stopped decreasing", trace)
        res.append(new)
    return NewtonResult(a1, a2, res, trace)


def deviation(coef, c: float) -> float:
    """sum |A_i| + |B_i| + |D_i| + |E_i| + |C_i - c|."""
    A1, A2, B1, B2, C1, C2, D1, D2, E1, E2 = coef
    return (abs(A1) + abs(A2) + abs(B1) + abs(B2) + abs(D1) + abs(D2)
            + abs(E1) + abs(E2) + abs(C1 - c) + abs(C2 - c))


def smallness_threshold(c: float, Ct: float = 1.0) -> float:
    """Largest eps for which the Newton convergence argument applies."""
    return min(c / 1000, c / (1000 * Ct), c / (1000 * Ct**2), c**2 / (512 * Ct), 0.5)


def residual_bounds(eps: float, n_terms: int, floor: float = 0.0):
    """eps**(2**(n-1)) for n = 1..n_terms, raised to ``floor`` (round-off level)."""
    out = []
    for n in range(1, n_terms + 1):
        e = 2.0 ** (n - 1)
        v = eps**e if e < 2000 else 0.0
        out.append(max(v, floor))
    return out


# ---------------------------------------------------------------- blocks

@dataclass(frozen=True)
class BuildingBlock:
    frame: Frame
    a2: float
    a3: float
    cA: float
    omega: float              # temporal frequency of the unit-carrier wave
    residuals: tuple
    coefficients: tuple

    @property
    def f(self):
        return self.frame.f

    @property
    def tilde_f(self) -> np.ndarray:
        return self.frame.f + self.a2 * self.frame.f_perp + self.a3 * self.frame.f3


def system_coefficients(T, f2: float, params: LameParams):
    c = params.lam + params.mu
    # T is 0-based: T[c-1, s-1, 0, 0] is the (c, s) entry with i = j = 1
    t = T[:, :, 0, 0] / f2
    A1 = E2 = -t[0, 1]
    A2 = E1 = -t[0, 2]
    B1 = t[2, 1]
    B2 = t[1, 2]
    C1 = -t[0, 0] + t[1, 1] + c
    C2 = -t[0, 0] + t[2, 2] + c
    D1 = -t[1, 0]
    D2 = -t[2, 0]
    return (A1, A2, B1, B2, C1, C2, D1, D2, E1, E2)


def build_block(A, f, params: LameParams, tol: float = 1e-12) -> BuildingBlock:
    frame = frame_of(f)
    T = tilde_coeffs(A, frame)
    f2 = frame.f.dot(frame.f)
    coef = system_coefficients(T, f2, params)
    sol = solve_polynomial_system(*coef, tol=tol)
    a = (1.0, sol.a1, sol.a2)
    cA = sum(a[r] * T[0, r, 0, 0] for r in range(3))
    w2 = (params.lam + 2 * params.mu) * f2 - cA
    if w2 <= 0:
        raise DispersionError(f"(lam+2mu)|f|^2 - cA = {w2} <= 0")
    return BuildingBlock(frame, sol.a1, sol.a2, cA, float(np.sqrt(w2)),
                         tuple(sol.residuals), coef)


def plane_wave_residual(A, block: BuildingBlock, params: LameParams) -> np.ndarray:
    """Amplitude vector left after substituting the plane wave into the frozen PDE.

    Computed in the standard basis, independently of the frame reduction.
    """
    f = block.frame.f
    g = block.tilde_f
    f2 = f.dot(f)
    lin = (-block.omega**2 + params.mu * f2) * g + (params.lam + params.mu) * f.dot(g) * f
    # d_n d_r of e^{i f.x} brings -f_n f_r
    hess = -np.einsum("m,n,r->mnr", g, f, f)
    return lin + apply_frozen(A, hess)


def probe_epsilon(params: LameParams, eps: float, n: int = 50, seed: int = 0,
                  tol: float = 1e-12) -> dict:
    """Empirical admissibility check of a gradient size eps.

    Builds blocks for random gradients with max entry eps/2 (so |A| <= eps)
    and checks the Newton residual bounds and the polarization bound.
    """
    rng = np.random.default_rng(seed)
    c = params.lam + params.mu
    worst_pol = 0.0
    ok = True
    for _ in range(n):
        G = rng.uniform(-eps / 2, eps / 2, (3, 3))
        A = freeze(G)
        for f in DIRECTIONS:
            b = build_block(A, f, params, tol)
            e = deviation(b.coefficients, c)
            floor = 64 * np.finfo(float).eps * (1 + sum(abs(x) for x in b.coefficients))
            bounds = residual_bounds(e, len(b.residuals), floor)
            if e >= smallness_threshold(c) or any(r > bd for r, bd in zip(b.residuals, bounds)):
                ok = False
            worst_pol = max(worst_pol, abs(b.a2) + abs(b.a3))
    return {"eps": eps, "ok": ok and worst_pol <= 0.1, "max_polarization": worst_pol}
