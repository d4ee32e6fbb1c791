"""Six-direction decomposition of symmetric matrices near the identity.

Every symmetric K close to Id is written as a nonnegative combination
sum_i gamma_i(K)**2 (Id - fhat_i (x) fhat_i) over the fixed directions
(0,1,+-1), (1,0,+-1), (1,+-1,0).  The weights are affine in K.
"""
from __future__ import annotations

import numpy as np

R0 = 1.0 / 18

# order: for axis a, first the "-" direction, then the "+" direction
DIRECTIONS = np.array([
    (0, 1, 1), (0, 1, -1),
    (1, 0, 1), (1, 0, -1),
    (1, 1, 0), (1, -1, 0),
], dtype=np.int64)

# |eps_ijk| pairs: for axis a the other two axes
_OTHER = {0: (1, 2), 1: (0, 2), 2: (0, 1)}


class OutOfBallError(ValueError):
    """Matrix is too far from the identity for nonnegative weights."""


def projector(i: int) -> np.ndarray:
    """Id - fhat (x) fhat for direction index i in 0..5."""
    f = DIRECTIONS[i].astype(float)
    return np.eye(3) - np.outer(f, f) / f.dot(f)


PROJECTORS = np.stack([projector(i) for i in range(6)])


def max_norm(A) -> float:
    return float(np.max(np.abs(A)))


def gamma_sq_all(K) -> np.ndarray:
    """All six squared weights for K; works on arrays of shape (..., 3, 3).

    Output has shape (6, ...).  No sign check is done here.
    """
    K = np.asarray(K, dtype=float)
    out = []
    for a in range(3):
        j, k = _OTHER[a]
        # sum over |eps_ajk| counts both (j,k) and (k,j)
        off = 2 * (K[..., j, k] + K[..., k, j])
        diag = K[..., j, j] + K[..., k, k]
        minus = (3 * K[..., a, a] - (off + diag)) / 4
        plus = (3 * K[..., a, a] + (off - diag)) / 4
        out += [minus, plus]
    return np.stack(out)


def gamma_sq(K, i: int, check: bool = True) -> float:
    """Squared weight of direction i (0-based) in the decomposition of K."""
    K = np.asarray(K, dtype=float)
    if check and max_norm(K - np.eye(3)) > R0:
        raise OutOfBallError(f"|K - Id|_max = {max_norm(K - np.eye(3)):.4g} > r0")
    g = gamma_sq_all(K)[i]
    if g < 0:
        raise OutOfBallError(f"negative squared weight {g:.4g} for direction {i}")
    return float(g)


def gamma(K, i: int) -> float:
    return float(np.sqrt(gamma_sq(K, i)))


def reconstruct(K, check: bool = True) -> np.ndarray:
    """sum_i gamma_i(K)**2 * projector_i, which reproduces K."""
    K = np.asarray(K, dtype=float)
    if check:
        if max_norm(K - np.eye(3)) > R0:
            raise OutOfBallError("K outside the admissible ball")
    g = gamma_sq_all(K)
    if check and np.any(g < 0):
        raise OutOfBallError("negative squared weight")
    return np.einsum("i...,imn->...mn", g, PROJECTORS)


def decompose_shifted(R, c: float) -> np.ndarray:
    """Coefficients a_i >= 0 with sum_i a_i**2 * projector_i = (c/r0) Id - R."""
    R = np.asarray(R, dtype=float)
    if not c > max_norm(R):
        raise ValueError(f"need c > |R|_max, got c={c}, |R|={max_norm(R)}")
    K = np.eye(3) - (R0 / c) * R
    g = gamma_sq_all(K)
    if np.any(g < 0):
        raise OutOfBallError("negative squared weight")
    return np.sqrt(c / R0) * np.sqrt(g)
