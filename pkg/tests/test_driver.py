import json
import math

import numpy as np
import pytest

from lame_ci import driver as DR
from lame_ci import field as F
from lame_ci import reynolds as RE
from lame_ci.params import LameParams, Schedule, c_q, delta_q, tau_prev

P = LameParams()
D = 3


def toy_schedule(T=1.0, **kw):
    return Schedule(mode="toy-override", lambdas=(1, 2), deltas=(0.5, 0.25), n0_override=1,
                    T=T, **kw)


def small_config(**kw):
    base = dict(N=20, check_times=(0.37,), fd_steps=(2e-3,), check_resolution=False,
                monitors=False)
    base.update(kw)
    return DR.RunConfig(**base)


@pytest.fixture(scope="module")
def stepped():
    st = DR.new_state(toy_schedule(), P, small_config(monitors=True))
    c0 = st.tuple.c
    DR.run_step(st, 0)
    return st, c0


@pytest.fixture(scope="module")
def bifurcated():
    sched = toy_schedule(T=6.0)
    st = DR.new_state(sched, P, small_config())
    interval = (1.0, 5.0)
    a, b, s0 = DR.bifurcate(st, 0, interval)
    return st, a, b, s0, interval


# ---------------------------------------------------------------- starting tuple

def test_starting_tuple_amplitude_and_residual():
    sched = Schedule(mode="toy-override", lambdas=(2, 4), deltas=(0.5, 0.25), epsilon=0.1)
    tup = DR.starting_tuple(sched, P, 16)
    vals = F.to_grid(tup.u(0.0), D)
    sup = float(np.max(np.linalg.norm(vals, axis=0)))
    expected = sched.epsilon * math.sqrt(delta_q(sched, 1)) / (math.sqrt(2) * 2**2)
    assert sup == pytest.approx(expected, rel=1e-12)
    assert tup.c == c_q(sched, 0)
    assert tup.R_zero and not np.any(tup.R(0.3))
    chk = DR.starting_checks(sched, P, 16, t=0.0)
    assert chk["lhs_max"] <= 1e-11
    assert chk["amplitude_expected"] == pytest.approx(expected, rel=1e-12)
    assert chk["amplitude_measured"] == pytest.approx(expected, rel=1e-12)
    assert isinstance(chk["inductive_ok"], bool)


def test_starting_velocity_time_derivatives():
    sched = toy_schedule()
    tup = DR.starting_tuple(sched, P, 12)
    h = 1e-5
    d1 = (tup.u(0.3 + h) - tup.u(0.3 - h)) / (2 * h)
    assert np.max(np.abs(d1 - tup.u(0.3, 1))) <= 1e-9
    d2 = (tup.u(0.3 + h, 1) - tup.u(0.3 - h, 1)) / (2 * h)
    assert np.max(np.abs(d2 - tup.u(0.3, 2))) <= 1e-9


def test_starting_wave_must_be_resolved():
    sched = Schedule(mode="toy-override", lambdas=(8, 16), deltas=(0.5, 0.25))
    with pytest.raises(DR.DriverError):
        DR.starting_tuple(sched, P, 16)


# ---------------------------------------------------------------- one step

def test_stage_reports_and_bookkeeping(stepped):
    st, _ = stepped
    stages = [r for r in st.history if "i" in r]
    assert [r["i"] for r in stages] == list(range(6))
    for r in stages:
        assert r["bookkeeping_ok"], r["bookkeeping_max"]
        chk = r["checks"][0]
        assert chk["R_symmetry"] == 0.0
        assert chk["divR_mean"] == 0.0
        assert chk["gradient_split"] <= 1e-15
        assert chk["mean_perturbation"] <= 1e-15
        assert max(chk["piece_symmetry"].values()) <= 1e-15
        assert {"u_p_r0", "w_p_N0", "deltaR_N0"} <= set(chk["monitors"])


def test_zero_error_stage_composes_projector_and_deltaR():
    st = DR.new_state(toy_schedule(), P, small_config())
    eng = DR._engine_for(st, 0)
    t = 0.37
    eng.stage_data(0, t)
    snap = eng.perturbation(0).snapshot(t, (0, 1, 2), split=True, frozen=True)
    sp = RE.reynolds_split(F.grad(eng.u(t, 0), D), F.grad(eng.u_ell(0, t), D), snap,
                           eng.d2_projector(0, t), P)
    assert np.max(np.abs(eng.R(t, 1) - (eng.d2_projector(0, t) + sp.deltaR))) <= 1e-15


def test_step_end_ledger(stepped):
    st, c0 = stepped
    end = st.history[-1]
    assert end["step_end"]
    dn = delta_q(st.sched, 1)
    assert end["c_drop"] == pytest.approx(dn, abs=1e-15)
    assert st.tuple.c == c0 - dn
    assert end["bookkeeping_ok"]
    assert {"sum", "bound", "ratio"} <= set(end["displacement"])
    assert "value" in end["cauchy"]


def test_step_end_stress_subtracts_delta(stepped):
    st, _ = stepped
    eng = st.engine
    t = 0.37
    diff = eng.R(t, 6) - st.tuple.R(t)
    assert np.allclose(diff[:, :, 0, 0, 0], delta_q(st.sched, 1) * np.eye(3), atol=1e-15)
    diff[:, :, 0, 0, 0] = 0
    assert not np.any(diff)


def test_reports_are_deterministic(stepped):
    st, _ = stepped
    again = DR.new_state(toy_schedule(), P, small_config(monitors=True))
    DR.run_step(again, 0)
    assert DR.report_lines(again.history) == DR.report_lines(st.history)
    for line in DR.report_lines(st.history).splitlines():
        json.loads(line)


def test_stage_index_checked():
    st = DR.new_state(toy_schedule(), P, small_config())
    with pytest.raises(DR.DriverError):
        DR.run_stage(st, 0, 6)


def test_stage_errors_carry_context():
    st = DR.new_state(toy_schedule(), P, small_config(check_resolution=True, N=12))
    with pytest.raises(DR.StageError) as info:
        DR.run_stage(st, 0, 0)
    assert info.value.q == 0 and info.value.i == 0
    assert "ResolutionError" in str(info.value)


# ---------------------------------------------------------------- bifurcation

def test_bifurcation_shares_initial_data(bifurcated):
    _, a, b, s0, interval = bifurcated
    rep = DR.bifurcation_report(a, b, 0, s0, interval, samples=3)
    assert rep["initial_difference"] <= 1e-12
    assert rep["initial_velocity_difference"] <= 1e-12
    lo, hi = rep["slab_support"]
    assert interval[0] <= lo < hi <= interval[1]
    for p in rep["plateau"]:
        assert p["separation"] > 0
        assert p["mismatch"] <= 1e-9
    for o in rep["outside_support"]:
        assert o["difference"] == 0.0


def test_bifurcation_difference_is_twice_stage5(bifurcated):
    _, a, b, s0, _ = bifurcated
    p0, p1 = a.engine.perturbation(5).cutoffs.slab_plateau(s0)
    t = 0.5 * (p0 + p1)
    diff = b.engine.u(t, 6) - a.engine.u(t, 6)
    w5 = a.engine.perturbation(5).snapshot(t).total(0)
    assert np.max(np.abs(diff + 2 * w5)) <= 1e-15


def test_bifurcation_time_support(bifurcated):
    _, a, b, s0, interval = bifurcated
    for t in np.linspace(-0.5, 6.5, 29):
        d = np.max(np.abs(a.engine.u(t, 6) - b.engine.u(t, 6)))
        if not interval[0] <= t <= interval[1]:
            assert d == 0.0


def test_double_flip_is_identity(bifurcated):
    _, a, b, s0, interval = bifurcated
    b2, c, s1 = DR.bifurcate(b, 0, interval)
    assert s1 == s0
    for t in (0.0, 1.5, 3.0):
        assert np.max(np.abs(c.engine.u(t, 6) - a.engine.u(t, 6))) <= 1e-12
        assert np.max(np.abs(b2.engine.u(t, 6) - b.engine.u(t, 6))) <= 1e-12


def test_bifurcation_needs_long_interval():
    sched = toy_schedule(T=6.0)
    st = DR.new_state(sched, P, small_config())
    short = 3 * tau_prev(sched, 0, 0) * 0.9
    with pytest.raises(DR.BifurcationError, match="3 tau"):
        DR.bifurcate(st, 0, (1.0, 1.0 + short))


def test_support_propagation(bifurcated):
    _, a, b, s0, interval = bifurcated
    DR.run_step(a, 0)
    DR.run_step(b, 0)
    times = np.linspace(-0.5, 6.5, 15)
    ok, rep = DR.support_propagation_check(a, b, interval, 0, times)
    assert ok, rep["violations"]
    assert rep["checked"] > 0
    assert {"radius_formula", "radius_mollifier", "radii_disagree"} <= set(rep)
    ok_same, rep_same = DR.support_propagation_check(a, a, interval, 0, times)
    assert ok_same and not rep_same["violations"]
    # a J far from the flipped slab must be rejected
    ok_bad, rep_bad = DR.support_propagation_check(a, b, (4.5, 5.0), 0, times)
    assert not ok_bad and rep_bad["violations"]
