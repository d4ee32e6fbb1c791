"""One full step of the construction at toy scale.

Starts from the exact plane wave (which solves the nonlinear system with zero
stress), adds the six stage perturbations and prints, for every stage, how
well the stress bookkeeping closes and how fast the residual falls as the
time step of the finite-difference check is refined.

    python demos/toy_step.py [N]

The last stage oscillates at wave number 32, so N must exceed 64; the
default N = 72 takes about three minutes.
"""
import sys
import time

from lame_ci import driver as DR
from lame_ci.params import LameParams, Schedule

N = int(sys.argv[1]) if len(sys.argv) > 1 else 72

sched = Schedule(mode="toy-override", lambdas=(1, 2), deltas=(0.5, 0.25), n0_override=1, T=1.0)
params = LameParams()
config = DR.RunConfig(N=N, check_times=(0.37,), fd_steps=(2e-3, 1e-3))

start = DR.starting_checks(sched, params, N)
print(f"starting wave: max |lhs| = {start['lhs_max']:.2e}, "
      f"amplitude {start['amplitude_measured']:.4f} (expected {start['amplitude_expected']:.4f})")

state = DR.new_state(sched, params, config)
print(f"\n{'stage':>5} {'carrier':>8} {'residual':>10} {'order':>6} {'time':>6}")
for i in range(6):
    t0 = time.perf_counter()
    DR.run_stage(state, 0, i)
    rec = state.history[-1]
    chk = rec["checks"][0]
    print(f"{i:>5} {rec['carrier']:>8} {rec['bookkeeping_max']:>10.2e} "
          f"{chk['orders'][0]:>6.2f} {time.perf_counter() - t0:>5.1f}s")

DR.finish_step(state, 0)
end = state.history[-1]
print(f"\nstep end: energy constant {end['c_prev']:.4f} -> {end['c_next']:.4f}, "
      f"residual {end['bookkeeping'][0]['residual']:.2e}")
disp = end["displacement"]
print(f"displacement sum {disp['sum']:.3e} against bound {disp['bound']:.3e} (ratio {disp['ratio']:.3f})")
print("(monitor only: at toy frequencies the asymptotic bounds are not expected to hold)")
