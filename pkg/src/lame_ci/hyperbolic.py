"""First-order form of the Lamé system and numerical checks of linear degeneracy.

With U = (d_1 u_1, ..., d_d u_1, d_1 u_2, ..., d_d u_d, d_t u_1, ..., d_t u_d)
(component k outer, derivative j inner) the system reads

    d_t U + sum_j A_j(U) d_j U = 0,   A_j = [[0, E_j], [B_j(U), 0]].

``derived_B`` builds B_j from the second-order equation by a fixed rule that
reproduces the published 2-D matrices entry by entry.  ``display_B`` parses
the published matrices verbatim so that the two can be compared; the 3-D
display has a handful of entries that fail the manufactured-solution test and
are listed by ``display_differences``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .params import LameParams


class AdmissibilityError(ValueError):
    pass


class ConditioningError(ValueError):
    pass


def uidx(k: int, j: int, d: int) -> int:
    """Position of d_j u_k in U (0-based k, j)."""
    return k * d + j


def E_matrix(j: int, d: int) -> np.ndarray:
    E = np.zeros((d * d, d))
    for k in range(d):
        E[uidx(k, j, d), k] = -1.0
    return E


def derived_B(U, params: LameParams, d: int):
    """B_j(U) for j = 0..d-1 from the second-order system.

    Row p, column (m, n) of B_j multiplies d_j d_n u_m.  The nonlinearity
    Div(tr(G G^T) Id - G^T G) is split as
    2 G_ab d_p G_ab - G_mn d_n G_mp - G_mp d_n G_mn.
    """
    U = np.asarray(U, dtype=float)
    G = U[:d * d].reshape(d, d)          # G[m, n] = d_n u_m
    lam, mu = params.lam, params.mu
    B = np.zeros((d, d, d * d))
    for p in range(d):
        for j in range(d):
            B[j, p, uidx(p, j, d)] -= mu
        for m in range(d):
            B[p, p, uidx(m, m, d)] -= lam + mu
        for a in range(d):
            for b in range(d):
                B[p, p, uidx(a, b, d)] += 2 * G[a, b]
        for m in range(d):
            for n in range(d):
                B[n, p, uidx(m, p, d)] -= G[m, n]
                B[n, p, uidx(m, n, d)] -= G[m, p]
    return B


# ---------------------------------------------------------------- displays
# Entries use l = lambda, m = mu and dJuK = d_J u_K (1-based), as printed.

DISPLAY_2D = {
    1: ["-l-2m, 2d2u1, 0, -l-m+2d2u2",
        "-d2u1, -d1u1, -m-d2u2, -d1u2"],
    2: ["-d2u1, -m-d1u1, -d2u2, -d1u2",
        "-l-m+2d1u1, 0, 2d1u2, -l-2m"],
}

DISPLAY_3D = {
    1: ["-l-2m, 2d2u1, 2d3u1, 0, -l-m+2d2u2, 2d3u2, 0, 2d2u3, -l-m+2d3u3",
        "-d2u1, -d1u1, 0, -d2u2, -m-d1u2, 0, -d2u3, -d1u2, 0",
        "-d3u1, 0, -d1u1, -d3u2, -m, -d1u2, -d3u3, 0, -d1u3"],
    2: ["-d2u1, -m-d1u1, 0, -d2u2, -d1u2, 0, -d2u3, -d1u3, 0",
        "-l-m+2d1u1, 0, 2d3u1, 2d1u2, -l-2m, 2d3u2, 2d1u3, 0, -l-m+2d3u3",
        "0, -d3u1, -d2u1, 0, -d3u2, -d2u1, 0, -m-d3u3, -d2u1"],
    3: ["-d3u1, 0, -m-d1u1, -d3u2, 0, -d1u2, -d3u3, 0, -d1u3",
        "0, -d3u1, -d2u1, 0, -d3u2, -m-d2u2, 0, -d3u3, -d2u3",
        "-l-m+2d1u1, 2d2u1, 0, 2d1u2, -l-m+2d2u2, 0, 2d1u3, 2d2u3, -l-2m"],
}

_TERM = re.compile(r"([+-]?)(\d*)(l|m|d(\d)u(\d))")


def _parse_entry(s: str, d: int):
    """Affine form (c_l, c_m, coeffs over U) of one printed entry."""
    s = s.replace(" ", "")
    cl = cm = 0.0
    cu = np.zeros(d * d)
    if s in ("0", ""):
        return cl, cm, cu
    pos = 0
    while pos < len(s):
        mt = _TERM.match(s, pos)
        if not mt or mt.end() == pos:
            raise ValueError(f"cannot parse entry {s!r}")
        sign = -1.0 if mt.group(1) == "-" else 1.0
        c = sign * (float(mt.group(2)) if mt.group(2) else 1.0)
        if mt.group(3) == "l":
            cl += c
        elif mt.group(3) == "m":
            cm += c
        else:
            J, K = int(mt.group(4)), int(mt.group(5))
            cu[uidx(K - 1, J - 1, d)] += c
        pos = mt.end()
    return cl, cm, cu


def display_B(U, params: LameParams, d: int):
    table = DISPLAY_2D if d == 2 else DISPLAY_3D
    U = np.asarray(U, dtype=float)
    B = np.zeros((d, d, d * d))
    for j in range(1, d + 1):
        for p, row in enumerate(table[j]):
            entries = [e.strip() for e in row.split(",")]
            for col, e in enumerate(entries):
                cl, cm, cu = _parse_entry(e, d)
                B[j - 1, p, col] = cl * params.lam + cm * params.mu + cu.dot(U[:d * d])
    return B


def display_differences(d: int):
    """Entries where the printed B_j differ from the derived rule.

    Compared symbolically: affine forms are evaluated on a basis of U and on
    unit Lamé constants.
    """
    out = []
    n = d * d + d
    probes = [np.zeros(n)] + [np.eye(n)[k] for k in range(d * d)]
    for P in (LameParams(1.0, 1.0), LameParams(2.0, 0.5)):
        for U in probes:
            diff = display_B(U, P, d) - derived_B(U, P, d)
            for j, p, c in zip(*np.nonzero(np.abs(diff) > 1e-14)):
                k, jj = divmod(int(c), d)
                key = (int(j) + 1, int(p) + 1, f"d{jj + 1}u{k + 1}")
                if key not in out:
                    out.append(key)
    return sorted(out)


# ---------------------------------------------------------------- assembly

def assemble_A(U, params: LameParams, d: int | None = None, source: str = "derived"):
    """List of the d block matrices A_j(U) (each (d^2+d) square)."""
    U = np.asarray(U, dtype=float)
    if d is None:
        d = {6: 2, 12: 3}[len(U)]
    B = derived_B(U, params, d) if source == "derived" else display_B(U, params, d)
    n = d * d
    out = []
    for j in range(d):
        A = np.zeros((n + d, n + d))
        A[:n, n:] = E_matrix(j, d)
        A[n:, :n] = B[j]
        out.append(A)
    return out


def symbol(U, xi, params: LameParams, source: str = "derived"):
    xi = np.asarray(xi, dtype=float)
    return sum(x * A for x, A in zip(xi, assemble_A(U, params, len(xi), source)))


def reduced_C(U, xi, params: LameParams, source: str = "derived"):
    """C = sum_ij xi_i xi_j B_i E_j."""
    xi = np.asarray(xi, dtype=float)
    d = len(xi)
    U = np.asarray(U, dtype=float)
    B = derived_B(U, params, d) if source == "derived" else display_B(U, params, d)
    Bx = np.tensordot(xi, B, axes=(0, 0))
    Ex = sum(x * E_matrix(j, d) for j, x in enumerate(xi))
    return Bx @ Ex


def pde_residual(U, dU, params: LameParams, d: int, source: str = "derived"):
    """Bottom rows of sum_j A_j(U) d_j U for given spatial derivatives dU[j]."""
    B = derived_B(U, params, d) if source == "derived" else display_B(U, params, d)
    return sum(B[j] @ np.asarray(dU[j])[:d * d] for j in range(d))


@dataclass
class FluxEigen:
    values: np.ndarray        # sorted ascending
    vectors: np.ndarray       # columns
    zero_multiplicity: int


def flux_eigen(U, xi, params: LameParams, tol: float = 1e-9, source: str = "derived"):
    """Eigen-decomposition of A(U, xi) through the reduced matrix C.

    Nonzero eigenvalues are +-sqrt(eig C) with right vectors (E y / s, y);
    the zero eigenspace is the null space of sum_j xi_j B_j.  The result is
    cross-checked against a dense eigenvalue solve of the full symbol.
    """
    xi = np.asarray(xi, dtype=float)
    d = len(xi)
    if abs(np.linalg.norm(xi) - 1) > 1e-12:
        raise ValueError("xi must be a unit vector")
    U = np.asarray(U, dtype=float)
    B = derived_B(U, params, d) if source == "derived" else display_B(U, params, d)
    Bx = np.tensordot(xi, B, axes=(0, 0))
    Ex = sum(x * E_matrix(j, d) for j, x in enumerate(xi))
    C = Bx @ Ex
    cw, cv = np.linalg.eig(C)
    scale = max(1.0, np.max(np.abs(cw)))
    if np.max(np.abs(cw.imag)) > tol * scale or np.min(cw.real) <= 0:
        raise AdmissibilityError(f"reduced matrix has eigenvalues {cw}")
    cw, cv = cw.real, cv.real
    vals, vecs = [], []
    for k in range(d):
        s = np.sqrt(cw[k])
        y = cv[:, k]
        for sg in (1, -1):
            vals.append(sg * s)
            vecs.append(np.concatenate([Ex @ y / (sg * s), y]))
    # zero eigenspace: (x, 0) with Bx x = 0
    _, sv, Vt = np.linalg.svd(Bx)
    null = Vt[len(sv[sv > tol * max(1.0, sv[0])]):]
    for x in null:
        vals.append(0.0)
        vecs.append(np.concatenate([x, np.zeros(d)]))
    vals = np.array(vals)
    V = np.array(vecs).T
    order = np.argsort(vals, kind="stable")
    vals, V = vals[order], V[:, order]
    dense = np.sort(np.linalg.eigvals(np.block([[np.zeros((d * d, d * d)), Ex],
                                                  [Bx, np.zeros((d, d))]])).real)
    if np.max(np.abs(dense - vals)) > 1e-7 * scale:
        raise ConditioningError("reduced and dense spectra disagree")
    nz = int(np.sum(np.abs(vals) <= tol * scale))
    return FluxEigen(vals, V, nz)


def _sorted_spectrum(U, xi, params, source):
    return flux_eigen(U, xi, params, source=source).values


def closed_form_2d(U, xi, params: LameParams):
    """Eigenvalues from the closed-form square roots of the 2x2 reduced matrix."""
    c = reduced_C(U, xi, params)
    disc = np.sqrt((c[0, 0] - c[1, 1]) ** 2 + 4 * c[0, 1] * c[1, 0])
    lo = np.sqrt((c[0, 0] + c[1, 1] - disc) / 2)
    hi = np.sqrt((c[0, 0] + c[1, 1] + disc) / 2)
    return np.sort(np.array([0.0, 0.0, lo, -lo, hi, -hi]))


def closed_form_vector_2d(U, xi, params: LameParams, lam_t: float):
    """Printed right eigenvector for a nonzero eigenvalue in 2-D."""
    c = reduced_C(U, xi, params)
    x1, x2 = xi
    den = lam_t**2 - c[0, 0]
    return np.array([-c[0, 1] * x1 / (lam_t * den), -c[0, 1] * x2 / (lam_t * den),
                     -x1 / lam_t, -x2 / lam_t, c[0, 1] / den, 1.0])


def _groups(w, tol):
    groups = []
    start = 0
    scale = max(1.0, np.max(np.abs(w)))
    for k in range(1, len(w) + 1):
        if k == len(w) or w[k] - w[k - 1] > tol * scale:
            groups.append(list(range(start, k)))
            start = k
    return groups


def degeneracy_residual(U, xi, params: LameParams, fd_step: float = 1e-5,
                        group_tol: float = 1e-9, source: str = "derived") -> float:
    """max_i |grad_U lambda_i . r_i| by central differences along unit r_i.

    Clustered eigenvalues are handled as a group: the group mean is
    differentiated along each eigenvector of the group.
    """
    U = np.asarray(U, dtype=float)
    fe = flux_eigen(U, xi, params, source=source)
    groups = _groups(fe.values, group_tol)
    worst = 0.0
    for g in groups:
        k = len(g)
        gap_lo = fe.values[g[0]] - fe.values[g[0] - 1] if g[0] > 0 else np.inf
        gap_hi = fe.values[g[-1] + 1] - fe.values[g[-1]] if g[-1] + 1 < len(fe.values) else np.inf
        if min(gap_lo, gap_hi) < 2 * fd_step:
            raise ConditioningError(f"eigenvalue gap {min(gap_lo, gap_hi):.3g} below 2*fd_step")
        for i in g:
            r = fe.vectors[:, i] / np.linalg.norm(fe.vectors[:, i])
            vals = []
            for s in (1, -1):
                try:
                    w = _sorted_spectrum(U + s * fd_step * r, xi, params, source)
                except AdmissibilityError as exc:
                    raise ConditioningError(
                        f"step leaves the real-spectrum region (gap {min(gap_lo, gap_hi):.3g})"
                    ) from exc
                # same positions in the sorted spectrum
                vals.append(np.mean(w[g[0]:g[0] + k]))
            worst = max(worst, abs(vals[0] - vals[1]) / (2 * fd_step))
    return worst


def random_state(rng, d: int, size: float = 1e-2) -> np.ndarray:
    return rng.uniform(-size, size, d * d + d)


def random_direction(rng, d: int) -> np.ndarray:
    v = rng.standard_normal(d)
    return v / np.linalg.norm(v)


@dataclass
class DegeneracySample:
    rows: list                # (sample, residual, zero multiplicity)
    rejected_complex: int     # draws with a complex spectrum
    rejected_conditioning: int
    states: list              # accepted (U, xi) pairs

    @property
    def max_residual(self) -> float:
        return max(r for _, r, _ in self.rows)


def sample_degeneracy(params: LameParams, d: int, n: int = 100, seed: int = 0,
                      size: float = 1e-2, fd_step: float = 1e-5,
                      max_draws: int = 100000) -> DegeneracySample:
    """Residuals at n random admissible states with |U|_max <= size.

    Draws with complex characteristic speeds, or whose spectrum is too
    clustered for a central difference of width fd_step, are rejected and
    counted.
    """
    rng = np.random.default_rng(seed)
    out = DegeneracySample([], 0, 0, [])
    draws = 0
    while len(out.rows) < n:
        draws += 1
        if draws > max_draws:
            raise AdmissibilityError(f"only {len(out.rows)} admissible draws in {max_draws}")
        U = random_state(rng, d, size)
        xi = random_direction(rng, d)
        try:
            fe = flux_eigen(U, xi, params)
        except AdmissibilityError:
            out.rejected_complex += 1
            continue
        try:
            res = degeneracy_residual(U, xi, params, fd_step)
        except ConditioningError:
            out.rejected_conditioning += 1
            continue
        out.rows.append((len(out.rows), res, fe.zero_multiplicity))
        out.states.append((U, xi))
    return out


def _directional_fd(U, xi, params, v, pos, h):
    w_plus = _sorted_spectrum(U + h * v, xi, params, "derived")[pos]
    w_minus = _sorted_spectrum(U - h * v, xi, params, "derived")[pos]
    return (w_plus - w_minus) / (2 * h)


def richardson_order(U, xi, params: LameParams, seed: int = 0, h: float | None = None) -> float:
    """Observed order of the central difference used by degeneracy_residual.

    Measured on a generic direction in state space, using the eigenvalue that
    moves most along it (the pressure speed does not depend on U at all):
    successive differences at h, h/2, h/4 shrink by 2**order.
    """
    if h is None:
        w = flux_eigen(U, xi, params).values
        gaps = np.diff(w[np.abs(w) > 1e-9])
        h = min(1e-2, 0.05 * float(np.min(gaps[gaps > 1e-9])))
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(len(U))
    v /= np.linalg.norm(v)
    slopes = [abs(_directional_fd(U, xi, params, v, k, h)) for k in range(len(U))]
    pos = int(np.argmax(slopes))
    D = [_directional_fd(U, xi, params, v, pos, h / 2**k) for k in range(3)]
    return float(np.log2(abs(D[0] - D[1]) / abs(D[1] - D[2])))


def richardson_table(params: LameParams, states, steps=(1e-4, 1e-5, 1e-6)):
    """Max residual over the given (U, xi) pairs for each finite-difference step."""
    return [(h, max(degeneracy_residual(U, xi, params, h) for U, xi in states)) for h in steps]


def write_csv(rows, path):
    with open(path, "w") as fh:
        fh.write("sample,residual,zero_multiplicity\n")
        for s, r, z in rows:
            fh.write(f"{s},{r:.6e},{z}\n")
