"""Stages, steps, the starting tuple and the bifurcation of one step.

Every tuple is lazy: velocity and stress are functions of time returning
coefficient arrays on the N^3 grid, evaluated on demand and memoized.  A step
engine holds the six perturbations of step q and evaluates

    u_{q,i}(t)   = u_q(t) + sum_{j<i} w_j(t)
    R_{q,i+1}(t) = R_q(t) + sum_{j<=i} (d_j^2 P_j + deltaR_j)(t)

where the mollified fields needed by each stage are obtained by kernel
quadrature in time of band-projected values.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import field as F
from . import reynolds as RE
from .assembly import (AnchoredBlocks, Perturbation, WaveIndex, build_cutoffs,
                       constant_weight, weight_jet)
from .geometry import DIRECTIONS
from .operators import band_project_coeffs, band_radius, build_time_kernel, mollify_callable
from .params import (LameParams, Schedule, c_q, carrier, delta_q, derived_scales,
                     interval_nesting_report, lambda_q, lambda_qi, tau_prev)

D = 3


class DriverError(RuntimeError):
    pass


class StageError(DriverError):
    def __init__(self, q, i, err):
        super().__init__(f"stage ({q},{i}): {type(err).__name__}: {err}")
        self.q, self.i, self.cause = q, i, err


# ------------------------------------------------------------ tuples

@dataclass
class ApproxTuple:
    """(u, c, R) with u(t, r) the r-th time derivative and R(t) the stress.

    ``R_zero`` marks a stress that vanishes identically.
    """
    u: Callable
    c: float
    R: Callable
    interval: tuple
    stage: tuple
    N: int
    R_zero: bool = False

    def sample(self, times, r: int = 0) -> F.TorusField:
        return F.TorusField(np.stack([self.u(t, r) for t in times]), times, d=D)

    def sample_R(self, times) -> F.TorusField:
        return F.TorusField(np.stack([self.R(t) for t in times]), times, d=D)


def starting_amplitude(sched: Schedule) -> float:
    lam0 = float(lambda_q(sched, 0))
    f1 = DIRECTIONS[0]
    return sched.epsilon * math.sqrt(delta_q(sched, 1)) / (2 * lam0**2 * f1.dot(f1))


def starting_velocity(sched: Schedule, params: LameParams, N: int):
    """u0(t, r): longitudinal plane wave along f_1 at frequency lambda_0."""
    lam0 = int(lambda_q(sched, 0))
    f1 = DIRECTIONS[0]
    k = lam0 * f1
    if np.max(np.abs(k)) >= N // 2:
        raise DriverError(f"starting wave {tuple(k)} is not resolved on N = {N}")
    amp = starting_amplitude(sched)
    om = lam0 * params.p_speed * math.sqrt(f1.dot(f1))
    idx = tuple(int(kj) % N for kj in k)
    nidx = tuple(int(-kj) % N for kj in k)

    def u(t, r=0):
        out = np.zeros((D, N, N, N), complex)
        e = np.exp(-1j * om * t) * (-1j * om) ** r
        for m in range(D):
            out[(m,) + idx] += amp * f1[m] * e
            out[(m,) + nidx] += amp * f1[m] * np.conj(e)
        return out
    return u


def starting_tuple(sched: Schedule, params: LameParams, N: int) -> ApproxTuple:
    u = starting_velocity(sched, params, N)
    zero = np.zeros((D, D, N, N, N), complex)
    return ApproxTuple(u=u, c=c_q(sched, 0), R=lambda t: zero,
                       interval=(-tau_prev(sched, 0, 0), sched.T + tau_prev(sched, 0, 0)),
                       stage=(0, 0), N=N, R_zero=True)


def starting_checks(sched: Schedule, params: LameParams, N: int, t: float = 0.0) -> dict:
    """Residual and inductive bounds of the starting tuple (reported)."""
    tup = starting_tuple(sched, params, N)
    res = RE.lhs(tup.u(t), tup.u(t, 2), params)
    g = lambda c: float(np.max(np.abs(F.to_grid(c, D))))
    u0 = tup.u(t)
    target = sched.epsilon - math.sqrt(delta_q(sched, 0))
    norms = {"u0_C0": g(u0), "u0_C1": g(u0) + g(F.grad(u0, D)), "dt_u0_C0": g(tup.u(t, 1))}
    # |f_1| = sqrt(2) and the cosine peaks at 1
    measured = float(np.max(np.linalg.norm(F.to_grid(u0, D), axis=0)))
    return {"lhs_max": g(res), "amplitude_expected": 2 * math.sqrt(2) * starting_amplitude(sched),
            "amplitude_measured": measured,
            "inductive_bound": target,
            "inductive_ok": all(v <= target for v in norms.values()), **norms}


# ------------------------------------------------------------ one step

@dataclass
class EngineOptions:
    check_resolution: bool = True
    block_tol: float = 1e-12
    monitors: bool = True


class StepEngine:
    """Lazy evaluation of the six stages of step q on top of a tuple."""

    def __init__(self, base: ApproxTuple, sched: Schedule, params: LameParams, q: int,
                 sign_overrides: Optional[dict] = None, options: EngineOptions | None = None):
        self.base = base
        self.sched = sched
        self.params = params
        self.q = q
        self.N = base.N
        self.opts = options or EngineOptions()
        self.signs = {int(k): dict(v) for k, v in (sign_overrides or {}).items()}
        self.kernel = build_time_kernel(sched.n0)
        self.delta_next = delta_q(sched, q + 1)
        self.scales = [derived_scales(sched, q, i) for i in range(6)]
        self._pert = {}
        self._uell = {}
        self._Rell = {}
        self._summary = {}
        self._R = {}

    # velocity ------------------------------------------------------------
    def u(self, t: float, upto: int, r: int = 0):
        out = np.array(self.base.u(t, r), copy=True)
        for j in range(upto):
            out += self.perturbation(j).snapshot(t, (0,) if r == 0 else (0, 1, 2)).total(r)
        return out

    def u_ell(self, i: int, t: float):
        """Space band projection then time mollification of u_{q,i} at scale ell_{q,i}."""
        key = (i, float(t))
        if key not in self._uell:
            ell = self.scales[i][0]
            val = mollify_callable(lambda s: band_project_coeffs(self.u(s, i), D, ell),
                                   t, ell, self.kernel)
            # the band projection leaves only |k| < band_radius, so store compactly
            M = min(self.N, 2 * int(band_radius(ell)) + 2)
            self._uell[key] = F.resize(val, D, M)
        return F.resize(self._uell[key], D, self.N)

    # stress ----------------------------------------------------------------
    def R_ell(self, t: float):
        """(R_ell, d_t R_ell, d_tt R_ell) at scale ell_{q,0}, computed once per time."""
        key = float(t)
        if key not in self._Rell:
            ell = self.scales[0][0]
            f = lambda s: band_project_coeffs(self.base.R(s), D, ell)
            self._Rell[key] = tuple(mollify_callable(f, t, ell, self.kernel, r) for r in range(3))
        return self._Rell[key]

    def weight(self, i: int):
        if self.base.R_zero:
            return constant_weight(self.delta_next, i)
        return lambda t: weight_jet(self.R_ell(t), self.delta_next, i)

    def d2_projector(self, i: int, t: float):
        w = self.weight(i)
        wj = w if not callable(w) else w(t)
        d2 = wj.d0**2 if wj.constant else F.multiply(wj.d0, wj.d0, D)
        return RE.d2_projector(d2, i, self.N)

    # perturbations ---------------------------------------------------------
    def perturbation(self, i: int) -> Perturbation:
        if i not in self._pert:
            try:
                cut = build_cutoffs(self.sched, self.q, i)
                blocks = AnchoredBlocks(lambda t: F.grad(self.u_ell(i, t), D), cut, i,
                                        self.params, self.opts.block_tol)
                self._pert[i] = Perturbation(
                    cutoffs=cut, blocks=blocks, weight=self.weight(i),
                    carrier_freq=carrier(self.sched, self.q, i + 1), direction_index=i,
                    N=self.N, params=self.params, sign_overrides=self.signs.get(i),
                    check_resolution=self.opts.check_resolution)
            except Exception as err:  # noqa: BLE001 - re-raised with stage context
                raise StageError(self.q, i, err) from err
        return self._pert[i]

    def stage_data(self, i: int, t: float) -> dict:
        """Build the error split of stage i at t, store R_{q,i+1}(t), return a summary.

        The pieces themselves are dropped after composition to bound memory.
        """
        key = (i, float(t))
        if key not in self._summary:
            try:
                snap = self.perturbation(i).snapshot(t, (0, 1, 2), split=True, frozen=True)
                gq = F.grad(self.u(t, i), D)
                gl = F.grad(self.u_ell(i, t), D)
                d2p = self.d2_projector(i, t)
                sp = RE.reynolds_split(gq, gl, snap, d2p, self.params)
            except StageError:
                raise
            except Exception as err:  # noqa: BLE001
                raise StageError(self.q, i, err) from err
            Rn = RE.compose_next(self.R(t, i), d2p, sp)
            summ = {"active_indices": len(snap.indices),
                    "piece_sup": {n: RE.sup(A) for n, A in sp.pieces().items()},
                    "piece_symmetry": sp.symmetry_errors(),
                    "gradient_split": float(np.max(np.abs(snap.gradient() - snap.w_p - snap.w_c))),
                    "mean_perturbation": float(np.max(np.abs(F.mean(snap.total(0), D)))),
                    "R_symmetry": float(np.max(np.abs(Rn - np.swapaxes(Rn, 0, 1)))),
                    "divR_mean": float(np.max(np.abs(F.mean(F.div_matrix(Rn, D), D)))),
                    "R_sup": RE.sup(Rn)}
            if self.opts.monitors:
                summ["monitors"] = {**perturbation_monitors(self, i, snap),
                                    **deltaR_monitors(self, i, sp.deltaR)}
                if i == 0 and not self.base.R_zero:
                    summ["monitors"].update(mollification_monitor(self, t))
            self._R[(i + 1, float(t))] = Rn
            self._summary[key] = summ
        return self._summary[key]

    def R(self, t: float, upto: int):
        """R_{q,upto}(t)."""
        if upto == 0:
            return self.base.R(t)
        key = (upto, float(t))
        if key not in self._R:
            self.stage_data(upto - 1, t)
        return self._R[key]

    # checks ------------------------------------------------------------------
    def bookkeeping(self, i: int, t: float, h: float, accuracy: int = 6) -> float:
        """Grid max of lhs(u_{q,i+1}) - Div(R_{q,i+1} - c_q Id) at t, stencil step h."""
        upto = i + 1
        u_tt = RE.fd_second_derivative(lambda s: self.u(s, upto), t, h, accuracy)
        val = RE.lhs(self.u(t, upto), u_tt, self.params)
        return RE.bookkeeping_residual(val, self.R(t, upto), self.base.c)

    def next_tuple(self) -> ApproxTuple:
        dn = self.delta_next
        N = self.N

        def R_next(t):
            out = np.array(self.R(t, 6), copy=True)
            for j in range(D):
                out[j, j, 0, 0, 0] -= dn
            return out
        tau = self.scales[5][1]
        return ApproxTuple(u=lambda t, r=0: self.u(t, 6, r), c=self.base.c - dn, R=R_next,
                           interval=(-tau, self.sched.T + tau), stage=(self.q + 1, 0), N=N)


# ------------------------------------------------------------ norms and monitors

def cn_norm(coeffs, n: int) -> float:
    """sum_{j<=n} max_{|alpha|=j} sup |d^alpha c| for a coefficient array."""
    lead = coeffs.ndim - D
    tf = F.TorusField(coeffs[None] if lead else coeffs[None], [0.0], d=D)
    return tf.holder_norm(n)


def perturbation_monitors(engine: StepEngine, i: int, snap) -> dict:
    """Measured / bound ratios for the perturbation amplitude estimates."""
    sched = engine.sched
    lam = lambda_qi(sched, engine.q, i + 1)
    dl = math.sqrt(engine.delta_next)
    mu = 1.0 / engine.scales[i][2]
    out = {}
    for r in range(3):
        out[f"u_p_r{r}"] = RE.ratio(RE.sup(snap.principal[r]), lam ** (r - 1) * dl)
        out[f"u_t_r{r}"] = RE.ratio(float(np.max(np.abs(snap.correction[r].real))),
                                    lam ** (r - 2) * dl)
    out["u_p_N1"] = RE.ratio(cn_norm(snap.principal[0], 1), dl)
    out["w_p_N0"] = RE.ratio(RE.sup(snap.w_p), dl)
    out["w_c_N0"] = RE.ratio(RE.sup(snap.w_c), dl / (lam * mu))
    return out


def deltaR_monitors(engine: StepEngine, i: int, deltaR) -> dict:
    sched = engine.sched
    lam = lambda_qi(sched, engine.q, i + 1)
    d2 = delta_q(sched, engine.q + 2)
    out = {}
    for n in (0, 1):
        m = cn_norm(deltaR, n)
        out[f"deltaR_N{n}"] = RE.ratio(m, RE.deltaR_bound(lam, sched.gamma, d2, n, 0))
    return out


def mollification_monitor(engine: StepEngine, t: float) -> dict:
    """|R_q - R_ell|_N at t against the mollification-loss scale."""
    sched = engine.sched
    ell = engine.scales[0][0]
    lam = float(lambda_q(sched, engine.q))
    diff = engine.base.R(t) - engine.R_ell(t)[0]
    return {f"R_minus_Rell_N{n}": RE.ratio(cn_norm(diff, n), RE.mollification_loss_bound(
        ell, lam, sched.gamma, engine.delta_next, n, 0)) for n in (0, 1)}


def displacement_monitor(engine: StepEngine, times, M: float, h: float = 1e-4) -> dict:
    """sum_{N+r<=3} lambda_{q+1}^{1-N-r} |d_t^r (u_{q+1} - u_q)|_N versus M delta^{1/2}."""
    lam = float(lambda_q(engine.sched, engine.q + 1))
    worst = {}
    for t in times:
        diff = [engine.u(t, 6, r) - engine.base.u(t, r) for r in range(3)]
        # third time derivative by central differences of the analytic second
        d3 = (engine.u(t + h, 6, 2) - engine.base.u(t + h, 2)
              - engine.u(t - h, 6, 2) + engine.base.u(t - h, 2)) / (2 * h)
        diff.append(d3)
        for r in range(4):
            for n in range(4 - r):
                v = lam ** (1 - n - r) * cn_norm(diff[r], n)
                worst[(n, r)] = max(worst.get((n, r), 0.0), v)
    total = sum(worst.values())
    bound = M * math.sqrt(engine.delta_next)
    return {"sum": total, "bound": bound, "ratio": RE.ratio(total, bound),
            "terms": {f"N{n}_r{r}": v for (n, r), v in sorted(worst.items())}}


def cauchy_monitor(engine: StepEngine, times, alpha: float) -> dict:
    lam = float(lambda_q(engine.sched, engine.q + 1))
    v = 0.0
    for t in times:
        diff = engine.u(t, 6) - engine.base.u(t)
        a, b = cn_norm(diff, 1), cn_norm(diff, 2)
        v = max(v, a ** (1 - alpha) * b**alpha)
    return {"value": v, "alpha": alpha,
            "reference": lam ** (alpha - engine.sched.beta)}


# ------------------------------------------------------------ run state

@dataclass
class RunConfig:
    N: int = 72
    check_times: tuple = (0.37,)
    fd_steps: tuple = (4e-3, 2e-3, 1e-3)
    fd_accuracy: int = 6
    tol_stage: float = 1e-7
    monitors: bool = True
    alpha: float = 1 / 120
    check_resolution: bool = True


@dataclass
class RunState:
    tuple: ApproxTuple
    sched: Schedule
    params: LameParams
    config: RunConfig
    history: list = field(default_factory=list)
    rng_seed: int = 0
    engines: list = field(default_factory=list)
    signs: dict = field(default_factory=dict)   # step q -> {stage: {WaveIndex: sign}}

    @property
    def engine(self) -> StepEngine:
        return self.engines[-1]


def new_state(sched: Schedule, params: LameParams, config: RunConfig, seed: int = 0,
              signs: Optional[dict] = None) -> RunState:
    if sched.enforce_interval_nesting:
        interval_nesting_report(sched, 0)
    tup = starting_tuple(sched, params, config.N)
    return RunState(tup, sched, params, config, rng_seed=seed, signs=dict(signs or {}))


def _engine_for(state: RunState, q: int) -> StepEngine:
    if not state.engines or state.engines[-1].q != q:
        opts = EngineOptions(check_resolution=state.config.check_resolution,
                             monitors=state.config.monitors)
        state.engines.append(StepEngine(state.tuple, state.sched, state.params, q,
                                        state.signs.get(q), opts))
    return state.engines[-1]


def _orders(values, steps):
    out = []
    for a, b, ha, hb in zip(values, values[1:], steps, steps[1:]):
        out.append(math.log(a / b) / math.log(ha / hb) if a > 0 and b > 0 else math.nan)
    return out


def run_stage(state: RunState, q: int, i: int) -> RunState:
    """Build stage (q, i), check the bookkeeping identity and append its report."""
    if not 0 <= i <= 5:
        raise DriverError("i must lie in 0..5")
    eng = _engine_for(state, q)
    cfg = state.config
    sched = state.sched
    ell, tau, mu_inv = eng.scales[i]
    rec = {"q": q, "i": i, "direction": DIRECTIONS[i].tolist(),
           "carrier": carrier(sched, q, i + 1), "lambda": lambda_qi(sched, q, i + 1),
           "ell": ell, "tau": tau, "cells": mu_inv, "tau_prev": tau_prev(sched, q, i),
           "nesting_ok": tau + 3 * ell <= tau_prev(sched, q, i), "checks": []}
    worst = 0.0
    for t in cfg.check_times:
        summ = eng.stage_data(i, t)
        res = [eng.bookkeeping(i, t, h, cfg.fd_accuracy) for h in cfg.fd_steps]
        worst = max(worst, min(res))
        rec["checks"].append({"t": t, "fd_steps": list(cfg.fd_steps), "residuals": res,
                              "orders": _orders(res, cfg.fd_steps), **summ})
    rec["bookkeeping_max"] = worst
    rec["bookkeeping_ok"] = worst <= cfg.tol_stage
    state.history.append(rec)
    return state


def run_step(state: RunState, q: int) -> RunState:
    for i in range(6):
        run_stage(state, q, i)
    return finish_step(state, q)


def finish_step(state: RunState, q: int) -> RunState:
    """Close step q after its six stages: subtract delta Id, check, monitor."""
    eng = _engine_for(state, q)
    cfg = state.config
    new = eng.next_tuple()
    rec = {"q": q, "step_end": True, "c_prev": state.tuple.c, "c_next": new.c,
           "c_drop": state.tuple.c - new.c, "delta_next": eng.delta_next}
    checks = []
    for t in cfg.check_times:
        h = min(cfg.fd_steps)
        u_tt = RE.fd_second_derivative(lambda s: new.u(s), t, h, cfg.fd_accuracy)
        val = RE.lhs(new.u(t), u_tt, state.params)
        checks.append({"t": t, "residual": RE.bookkeeping_residual(val, new.R(t), new.c)})
    rec["bookkeeping"] = checks
    rec["bookkeeping_ok"] = all(c["residual"] <= cfg.tol_stage for c in checks)
    if cfg.monitors:
        rec["displacement"] = displacement_monitor(eng, cfg.check_times, state.sched.M)
        rec["cauchy"] = cauchy_monitor(eng, cfg.check_times, cfg.alpha)
    state.history.append(rec)
    state.tuple = new
    return state


# ------------------------------------------------------------ bifurcation

class BifurcationError(DriverError):
    pass


def choose_slab(engine: StepEngine, interval) -> int:
    """First slab of stage 5 whose time support lies inside ``interval``."""
    cut = engine.perturbation(5).cutoffs
    lo, hi = interval
    s = math.ceil(lo / cut.tau + 0.25)
    a, b = cut.slab_support(s)
    if not (a >= lo and b <= hi):
        raise BifurcationError(f"no slab of width {1.5 * cut.tau:.4g} fits in {interval}")
    return s


def flip_signs(engine: StepEngine, s0: int) -> dict:
    cut = engine.perturbation(5).cutoffs
    return {WaveIndex(s0, u): -1 for u in cut.cell_indices()}


def bifurcate(state: RunState, q: int, interval):
    """Two states for step q that differ only by the sign of stage-5 waves on one slab."""
    lo, hi = interval
    need = 3 * tau_prev(state.sched, q, 0)
    if hi - lo < need:
        raise BifurcationError(f"|I| = {hi - lo:.4g} < 3 tau = {need:.4g}")
    base_signs = dict(state.signs)
    a = RunState(state.tuple, state.sched, state.params, state.config,
                 rng_seed=state.rng_seed, signs=base_signs)
    eng = _engine_for(a, q)
    s0 = choose_slab(eng, interval)
    flipped = {k: dict(v) for k, v in base_signs.get(q, {}).items()}
    stage5 = dict(flipped.get(5, {}))
    for I, sgn in flip_signs(eng, s0).items():
        stage5[I] = stage5.get(I, 1) * sgn
    flipped[5] = stage5
    signs_b = dict(base_signs)
    signs_b[q] = flipped
    b = RunState(state.tuple, state.sched, state.params, state.config,
                 rng_seed=state.rng_seed, signs=signs_b)
    _engine_for(b, q)
    return a, b, s0


def l2_norm(c) -> float:
    return math.sqrt((2 * np.pi) ** D * float(np.sum(np.abs(c) ** 2)))


def bifurcation_report(a: RunState, b: RunState, q: int, s0: int, interval,
                       samples: int = 5) -> dict:
    ea, eb = a.engine, b.engine
    cut = ea.perturbation(5).cutoffs
    lam = float(lambda_q(a.sched, q + 1))
    t0 = float(np.clip(0.0, *a.tuple.interval))
    rec = {"slab": s0, "interval": list(interval),
           "slab_support": list(cut.slab_support(s0)),
           "initial_difference": float(np.max(np.abs(ea.u(t0, 6) - eb.u(t0, 6)))),
           "initial_velocity_difference": float(np.max(np.abs(ea.u(t0, 6, 1) - eb.u(t0, 6, 1)))),
           "lower_bound": math.pi**1.5 * math.sqrt(ea.delta_next) / (16 * lam)}
    p0, p1 = cut.slab_plateau(s0)
    curve = []
    for t in np.linspace(p0, p1, samples):
        diff = l2_norm(ea.u(t, 6) - eb.u(t, 6))
        twice = 2 * l2_norm(ea.perturbation(5).snapshot(t).total(0))
        curve.append({"t": float(t), "separation": diff, "twice_stage5": twice,
                      "mismatch": abs(diff - twice)})
    rec["plateau"] = curve
    lo, hi = cut.slab_support(s0)
    outside = [lo - 0.5 * cut.tau, lo, hi, hi + 0.5 * cut.tau,
               interval[0], interval[1]]
    rec["outside_support"] = [{"t": float(t), "difference": float(np.max(np.abs(ea.u(t, 6) - eb.u(t, 6))))}
                              for t in outside]
    return rec


def separation_curve(a: RunState, b: RunState, times) -> list:
    return [{"t": float(t), "l2": l2_norm(a.engine.u(t, 6) - b.engine.u(t, 6))} for t in times]


def support_propagation_check(stateA: RunState, stateB: RunState, J, q: int,
                              times=None, tol: float = 1e-12):
    """Do the current tuples of A and B agree outside J inflated by the mollifier radius?

    Returns (ok, report).  Both candidate radii are reported.
    """
    sched = stateA.sched
    r_formula = 1.0 / (float(lambda_q(sched, q)) * delta_q(sched, q) ** 0.25)
    r_impl = derived_scales(sched, q, 0)[0]
    radius = max(r_formula, r_impl)
    lo, hi = J[0] - radius, J[1] + radius
    a, b = stateA.tuple, stateB.tuple
    if times is None:
        t0, t1 = a.interval
        times = np.linspace(t0, t1, 41)
    bad = []
    for t in times:
        if lo <= t <= hi:
            continue
        du = float(np.max(np.abs(a.u(t) - b.u(t))))
        if du > tol:
            bad.append({"t": float(t), "difference": du})
    report = {"J": list(J), "radius_formula": r_formula, "radius_mollifier": r_impl,
              "radii_disagree": not math.isclose(r_formula, r_impl, rel_tol=1e-12),
              "checked": int(sum(1 for t in times if not lo <= t <= hi)),
              "violations": bad}
    return not bad, report


# ------------------------------------------------------------ reports

def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def report_lines(history) -> str:
    return "".join(json.dumps(_clean(r), sort_keys=True) + "\n" for r in history)
