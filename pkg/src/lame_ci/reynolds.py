"""Equation residual, the five-piece error split and composition of the stress.

All functions here act on coefficient arrays at a single time (vector fields
(3, N, N, N), matrix fields (3, 3, N, N, N)); quadratic terms are dealiased.

Bookkeeping.  With nabla w = w_p + w_c, the pieces

    mediation   R_M  = cross(grad(u_qi - u_ell), grad w)
    frozen      R_L2 = cross(grad u_ell, grad w) - sum_I cross(G_I, carrier part_I)
    linear      R_L1 = inverse_div(V - Div R_L2)
    oscillation R_O1 = inverse_div(Div(Q(w_p) - d^2 P_f)),  R_O2 = cross(w_p, w_c) + Q(w_c)

with V = w_tt - mu Lap w - (lam+mu) grad Div w + Div cross(grad u_ell, grad w)
satisfy Div(d^2 P_f + sum of pieces) = lhs(u_qi + w) - lhs(u_qi) whenever the
time derivatives of w are exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import field as F
from .geometry import PROJECTORS
from .operators import inverse_divergence_coeffs
from .params import LameParams

D = 3


class ReynoldsError(ValueError):
    pass


def linear_part(u, params: LameParams):
    """mu Lap u + (lam + mu) grad Div u."""
    return params.mu * F.laplacian(u, D) + (params.lam + params.mu) * F.grad_div(u, D)


def lhs(u, u_tt, params: LameParams):
    """u_tt - mu Lap u - (lam+mu) grad Div u + Div Q(grad u) for one time.

    ``u_tt`` is required; pass an analytic channel or a finite-difference value.
    """
    if u_tt is None:
        raise ReynoldsError("lhs needs the second time derivative")
    G = F.grad(u, D)
    return u_tt - linear_part(u, params) + F.div_matrix(F.flux(G, D), D)


def lhs_field(u: F.TorusField, params: LameParams, u_tt: F.TorusField | None = None,
              accuracy: int = 6) -> F.TorusField:
    """lhs on a TorusField; without ``u_tt`` the stencil derivative is used."""
    if u.rank != 1 or u.d != 3:
        raise ReynoldsError("lhs acts on 3D vector fields")
    if u_tt is None:
        u_tt = u.time_derivative(2, accuracy)
    out = np.stack([lhs(a, b, params) for a, b in zip(u.coeffs, u_tt.coeffs)])
    return u._new(out)


def fd_second_derivative(func, t: float, h: float, accuracy: int = 6):
    """Centered stencil for d^2/dt^2 func at t (func returns arrays)."""
    half = accuracy // 2
    nodes = t + h * np.arange(-half, half + 1)
    w = F.fd_weights(nodes, t, 2)
    acc = None
    for x, wk in zip(nodes, w):
        if wk == 0:
            continue
        v = wk * func(float(x))
        acc = v if acc is None else acc + v
    return acc


# ------------------------------------------------------------ weak form

def _space_pair(a, b):
    """Integral over T^3 of sum a * conj(b) for real band-limited fields."""
    axes = tuple(range(a.ndim))
    return (2 * np.pi) ** D * float(np.sum(a * np.conj(b), axis=axes).real)


def weak_residual(u: F.TorusField, eta: F.TorusField, params: LameParams,
                  u1, u_t: F.TorusField | None = None,
                  eta_t: F.TorusField | None = None, time_weights=None,
                  eta0=None) -> float:
    """Space-time weak form minus the initial-data term.

    Time integration uses ``time_weights`` when given (e.g. Gauss-Legendre),
    otherwise Simpson's rule on the nodes.  ``u1`` is the initial velocity
    (coefficients or TorusField with one node).  ``eta0`` is eta at t = 0;
    it may be omitted only when the first time node is 0.
    """
    if eta0 is None:
        if u.times[0] != 0.0:
            raise ReynoldsError("pass eta0 when the time nodes do not start at 0")
        eta0 = eta.coeffs[0]
    from scipy.integrate import simpson
    if u_t is None:
        u_t = u.time_derivative(1)
    if eta_t is None:
        eta_t = eta.time_derivative(1)
    vals = []
    for uc, utc, ec, etc in zip(u.coeffs, u_t.coeffs, eta.coeffs, eta_t.coeffs):
        G = F.grad(uc, D)
        Ge = F.grad(ec, D)
        Q = F.flux(G, D)
        val = (-_space_pair(utc, etc) + params.mu * _space_pair(G, Ge)
               + (params.lam + params.mu) * _space_pair(F.div_vector(uc, D), F.div_vector(ec, D))
               - _space_pair(Q, Ge))
        vals.append(val)
    vals = np.array(vals)
    if time_weights is not None:
        total = float(np.dot(time_weights, vals))
    else:
        total = float(simpson(vals, x=u.times))
    u1c = u1.coeffs[0] if isinstance(u1, F.TorusField) else np.asarray(u1)
    return total - _space_pair(u1c, np.asarray(eta0))


def stress_pairing(R: F.TorusField, c: float, eta: F.TorusField, time_weights=None) -> float:
    """-int int (R - c Id) : grad eta, the weak form of Div(R - c Id) tested with eta."""
    from scipy.integrate import simpson
    vals = []
    for Rc, ec in zip(R.coeffs, eta.coeffs):
        A = np.array(Rc, copy=True)
        for j in range(D):
            A[j, j, 0, 0, 0] -= c
        # (Div A) . eta = -A[n,p] d_n eta_p = -A : (grad eta)^T
        vals.append(-_space_pair(A, np.swapaxes(F.grad(ec, D), 0, 1)))
    vals = np.array(vals)
    if time_weights is not None:
        return float(np.dot(time_weights, vals))
    return float(simpson(vals, x=R.times))


# ------------------------------------------------------------ pieces

def compute_RM(grad_uqi, grad_uell, grad_w):
    """cross(grad(u_qi - u_ell), grad w)."""
    return F.cross(grad_uqi - grad_uell, grad_w, D)


def d2_projector(d2, direction_index: int, N: int):
    """Coefficients of d^2 (Id - fhat (x) fhat); d2 is a constant or scalar coefficients."""
    Pf = PROJECTORS[direction_index]
    if np.ndim(d2) == 0:
        out = np.zeros((3, 3, N, N, N), complex)
        out[:, :, 0, 0, 0] = float(d2) * Pf
        return out
    return np.einsum("mn,...->mn...", Pf, d2)


def compute_RO(w_p, w_c, d2proj):
    """(R_O1, R_O2) from the gradient split and the subtracted low mode."""
    Qp = F.flux(w_p, D)
    R_O1 = inverse_divergence_coeffs(F.div_matrix(Qp - d2proj, D), D)
    R_O2 = F.cross(w_p, w_c, D) + F.flux(w_c, D)
    return R_O1, R_O2


def compute_RL(grad_uell, grad_w, w, w_tt, frozen_cross, params: LameParams):
    """(R_L1, R_L2) for perturbation coefficients w with exact second time derivative."""
    C = F.cross(grad_uell, grad_w, D)
    R_L2 = C - frozen_cross
    V = w_tt - linear_part(w, params) + F.div_matrix(C, D)
    R_L1 = inverse_divergence_coeffs(V - F.div_matrix(R_L2, D), D)
    return R_L1, R_L2


@dataclass
class ReynoldsSplit:
    R_L1: np.ndarray
    R_L2: np.ndarray
    R_M: np.ndarray
    R_O1: np.ndarray
    R_O2: np.ndarray
    deltaR: np.ndarray = field(init=False)

    NAMES = ("R_L1", "R_L2", "R_M", "R_O1", "R_O2")

    def __post_init__(self):
        self.deltaR = self.R_L1 + self.R_L2 + self.R_M + self.R_O1 + self.R_O2

    def pieces(self):
        return {n: getattr(self, n) for n in self.NAMES}

    def symmetry_errors(self):
        return {n: float(np.max(np.abs(A - np.swapaxes(A, 0, 1))))
                for n, A in self.pieces().items()}


def reynolds_split(grad_uqi, grad_uell, snap, d2proj, params: LameParams) -> ReynoldsSplit:
    """All five pieces for a perturbation snapshot taken with split and frozen channels."""
    w = snap.total(0)
    w_tt = snap.total(2)
    grad_w = F.grad(w, D)
    R_M = compute_RM(grad_uqi, grad_uell, grad_w)
    R_L1, R_L2 = compute_RL(grad_uell, grad_w, w, w_tt, snap.frozen_cross, params)
    R_O1, R_O2 = compute_RO(snap.w_p, snap.w_c, d2proj)
    return ReynoldsSplit(R_L1, R_L2, R_M, R_O1, R_O2)


def compose_next(R_qi, d2proj, split: ReynoldsSplit):
    """R_{q,i+1} = R_{q,i} + d^2 (Id - fhat (x) fhat) + deltaR."""
    return R_qi + d2proj + split.deltaR


def bookkeeping_residual(lhs_value, R, c: float = 0.0) -> float:
    """Grid max of lhs - Div(R - c Id); c drops out because Div Id = 0."""
    A = np.array(R, copy=True)
    for j in range(D):
        A[j, j, 0, 0, 0] -= c
    r = lhs_value - F.div_matrix(A, D)
    return float(np.max(np.abs(F.to_grid(r, D))))


# ------------------------------------------------------------ monitors

def sup(c) -> float:
    return float(np.max(np.abs(F.to_grid(c, D))))


def deltaR_bound(lam_next: float, gamma: float, delta_qp2: float, N: int = 0, r: int = 0):
    """(1/12) lambda_{q,i+1}^{N + r - 2 gamma} delta_{q+2}."""
    return lam_next ** (N + r - 2 * gamma) * delta_qp2 / 12


def mollification_loss_bound(ell_q0: float, lam_q: float, gamma: float, delta_next: float,
                             N: int = 0, r: int = 0):
    """ell_{q,0}^{2 - N - r} lambda_q^{2 - 2 gamma} delta_{q+1}, the scale of |d_t^r (R_q - R_ell)|_N."""
    return ell_q0 ** (2 - N - r) * lam_q ** (2 - 2 * gamma) * delta_next


def ratio(measured: float, bound: float) -> float:
    return measured / bound if bound > 0 else math.inf
