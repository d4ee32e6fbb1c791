"""Command line: ``lame-ci construct | verify | bifurcate``.

A run directory receives the resolved configuration (config.json), one JSON
record per stage (reports.jsonl), a human summary (summary.txt), field
snapshots (.npz) and, when anything fails, failure.json.  The exit code is 0
exactly when every identity check passed; monitors never change it.

The thread count for FFTs and BLAS comes from LAME_CI_THREADS (default 1).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import traceback
from pathlib import Path

THREADS_ENV = "LAME_CI_THREADS"

SCHEDULE_KEYS = ("a", "b", "beta", "epsilon", "M", "T", "mode", "lambdas", "deltas",
                 "n0_override", "r0", "max_exponent", "tail_tol", "tau_minus1",
                 "enforce_interval_nesting", "round_carriers")
LAME_KEYS = ("lam", "mu")
RUN_KEYS = ("N", "check_times", "fd_steps", "fd_accuracy", "tol_stage", "monitors", "alpha",
            "check_resolution")
COMMAND_KEYS = ("steps", "seed", "interval", "bifurcate_step", "snapshot_times", "suite",
                "separation_samples")

# the reduced schedule every demo and the CLI default to: small enough to
# resolve on a desk-sized grid
DEFAULTS = {
    "mode": "toy-override", "lambdas": [1, 2], "deltas": [0.5, 0.25], "n0_override": 1,
    "T": 1.0, "N": 24, "check_times": [0.37], "fd_steps": [2e-3, 1e-3],
    "tol_stage": 1e-7, "check_resolution": False, "steps": 1, "seed": 0,
    "snapshot_times": [0.0, 0.5], "suite": "all", "separation_samples": 5,
}
# the bifurcation interval defaults to (10, 10 + 3 tau), so the horizon must reach past it
COMMAND_DEFAULTS = {"bifurcate": {"T": 20.0}}


class ConfigError(ValueError):
    pass


class IdentityFailure(RuntimeError):
    def __init__(self, record: dict):
        super().__init__(f"identity check failed: {record['check']}")
        self.record = record


# ---------------------------------------------------------------- config

def load_config(path: str | None, command: str = "construct") -> dict:
    """Read YAML or JSON, reject unknown keys, fill defaults."""
    cfg = {**DEFAULTS, **COMMAND_DEFAULTS.get(command, {})}
    if path:
        import yaml
        with open(path) as fh:
            raw = yaml.safe_load(fh) or {}
        if not isinstance(raw, dict):
            raise ConfigError("configuration must be a mapping")
        known = set(SCHEDULE_KEYS + LAME_KEYS + RUN_KEYS + COMMAND_KEYS)
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
        cfg.update(raw)
    return cfg


def apply_flags(cfg: dict, args) -> dict:
    cfg = dict(cfg)
    for key in ("seed", "steps", "suite", "mode"):
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    return cfg


def build_objects(cfg: dict):
    from . import driver as DR
    from .params import LameParams, Schedule
    sk = {k: cfg[k] for k in SCHEDULE_KEYS if k in cfg}
    for k in ("lambdas", "deltas"):
        if k in sk and sk[k] is not None:
            sk[k] = tuple(sk[k])
    sched = Schedule(**sk)
    params = LameParams(**{k: cfg[k] for k in LAME_KEYS if k in cfg})
    rk = {k: cfg[k] for k in RUN_KEYS if k in cfg}
    for k in ("check_times", "fd_steps"):
        if k in rk:
            rk[k] = tuple(float(x) for x in rk[k])
    return sched, params, DR.RunConfig(**rk)


# ---------------------------------------------------------------- run directory

class RunDir:
    def __init__(self, out: str | None):
        self.path = Path(out) if out else None
        if self.path:
            self.path.mkdir(parents=True, exist_ok=True)

    def echo_config(self, cfg: dict, command: str):
        self.write("config.json", json.dumps({"command": command, **cfg}, indent=2,
                                             sort_keys=True) + "\n")

    def write(self, name: str, text: str):
        if self.path:
            (self.path / name).write_text(text)

    def file(self, name: str):
        return self.path / name if self.path else None


def _identity_failures(history, tol) -> list:
    out = []
    for r in history:
        if "i" in r and not r["bookkeeping_ok"]:
            out.append({"check": f"bookkeeping(q={r['q']},i={r['i']})",
                        "value": r["bookkeeping_max"], "tol": tol})
        elif r.get("step_end") and not r["bookkeeping_ok"]:
            out.append({"check": f"bookkeeping_step_end(q={r['q']})",
                        "value": max(c["residual"] for c in r["bookkeeping"]), "tol": tol})
    return out


def _summary_lines(history) -> list:
    lines = []
    for r in history:
        if "i" in r:
            lines.append(f"stage ({r['q']},{r['i']}) carrier {r['carrier']:>3d} "
                         f"bookkeeping {r['bookkeeping_max']:.3e} "
                         f"{'ok' if r['bookkeeping_ok'] else 'FAILED'}")
        elif r.get("step_end"):
            lines.append(f"step {r['q']} end: c drop {r['c_drop']:.6g} "
                         f"(delta {r['delta_next']:.6g}) "
                         f"{'ok' if r['bookkeeping_ok'] else 'FAILED'}")
    return lines


def _snapshot(rd: RunDir, tup, times, stem: str):
    from .field import TorusField
    if not rd.path or not times:
        return
    times = [float(t) for t in times]
    TorusField([tup.u(t) for t in times], times, interval=tup.interval).save(rd.file(f"{stem}_u.npz"))
    TorusField([tup.R(t) for t in times], times, interval=tup.interval).save(rd.file(f"{stem}_R.npz"))


# ---------------------------------------------------------------- commands

def _run_steps(state, steps: int, strict: bool, tol: float):
    from . import driver as DR
    for q in range(steps):
        for i in range(6):
            DR.run_stage(state, q, i)
            if strict:
                bad = _identity_failures(state.history[-1:], tol)
                if bad:
                    raise IdentityFailure(bad[0])
        DR.finish_step(state, q)
        if strict:
            bad = _identity_failures(state.history[-1:], tol)
            if bad:
                raise IdentityFailure(bad[0])
    return state


def cmd_construct(cfg: dict, rd: RunDir, strict: bool) -> int:
    from . import driver as DR
    sched, params, rc = build_objects(cfg)
    state = DR.new_state(sched, params, rc, seed=int(cfg["seed"]))
    rd.write("starting_checks.json", json.dumps(DR._clean(DR.starting_checks(sched, params, rc.N)),
                                                indent=2, sort_keys=True) + "\n")
    try:
        _run_steps(state, int(cfg["steps"]), strict, rc.tol_stage)
    finally:
        rd.write("reports.jsonl", DR.report_lines(state.history))
    _snapshot(rd, state.tuple, cfg.get("snapshot_times"), "final")
    bad = _identity_failures(state.history, rc.tol_stage)
    lines = _summary_lines(state.history)
    lines.append(f"identity checks failed: {len(bad)}")
    rd.write("summary.txt", "\n".join(lines) + "\n")
    print("\n".join(lines))
    if bad:
        rd.write("failure.json", json.dumps({"status": "failed", "failures": bad}, indent=2) + "\n")
        return 1
    return 0


def cmd_verify(cfg: dict, rd: RunDir) -> int:
    from . import verify as V
    checks = V.run_suite(cfg["suite"], seed=int(cfg["seed"]))
    rows = [c.line() for c in checks]
    per = {}
    for c in checks:
        p, f = per.get(c.suite, (0, 0))
        per[c.suite] = (p + c.passed, f + (not c.passed))
    rows.append("")
    rows += [f"{s:<11s} passed {p:3d} failed {f:3d}" for s, (p, f) in per.items()]
    failed = sum(f for _, f in per.values())
    rows.append(f"total       passed {len(checks) - failed:3d} failed {failed:3d}")
    print("\n".join(rows))
    rd.write("verify.jsonl", "".join(json.dumps(c.to_dict(), sort_keys=True) + "\n" for c in checks))
    rd.write("summary.txt", "\n".join(rows) + "\n")
    if failed:
        rd.write("failure.json", json.dumps(
            {"status": "failed", "failures": [c.to_dict() for c in checks if not c.passed]},
            indent=2, sort_keys=True) + "\n")
        return 1
    return 0


def cmd_bifurcate(cfg: dict, rd: RunDir, strict: bool) -> int:
    import numpy as np

    from . import driver as DR
    from .params import tau_prev
    sched, params, rc = build_objects(cfg)
    q = int(cfg.get("bifurcate_step") or 0)
    if q != 0:
        raise ConfigError("bifurcation is implemented for the first step only")
    state = DR.new_state(sched, params, rc, seed=int(cfg["seed"]))
    interval = cfg.get("interval")
    if interval is None:
        lo = 10.0
        interval = [lo, lo + 3 * tau_prev(sched, q, 0)]
    interval = tuple(float(x) for x in interval)
    if not (0 <= interval[0] < interval[1] <= sched.T):
        raise ConfigError(f"interval {interval} must lie in [0, T] with T = {sched.T}")
    a, b, s0 = DR.bifurcate(state, q, interval)
    rep = DR.bifurcation_report(a, b, q, s0, interval, samples=int(cfg["separation_samples"]))
    # flipping the same slab again must give back the default run
    _, back, _ = DR.bifurcate(b, q, interval)
    probe = [0.0, float(np.mean(rep["slab_support"])), interval[1]]
    rep["double_flip_difference"] = max(
        float(np.max(np.abs(back.engine.u(t, 6) - a.engine.u(t, 6)))) for t in probe)
    for st in (a, b):
        _run_steps(st, 1, strict, rc.tol_stage)
    n = int(cfg["separation_samples"]) * 4 + 1
    # the whole horizon plus a finer pass over the interval
    times = np.union1d(np.linspace(0.0, sched.T, n), np.linspace(*interval, n))
    curve = DR.separation_curve(a, b, times)
    ok_sup, sup_rep = DR.support_propagation_check(a, b, interval, q, times)
    rep["support_propagation"] = sup_rep
    checks = {
        "initial_data": rep["initial_difference"] <= 1e-12
        and rep["initial_velocity_difference"] <= 1e-12,
        "plateau_positive": all(p["separation"] > 0 for p in rep["plateau"]),
        "plateau_twice_stage5": all(p["mismatch"] <= 1e-9 for p in rep["plateau"]),
        "outside_support_zero": all(o["difference"] == 0.0 for o in rep["outside_support"]),
        "double_flip": rep["double_flip_difference"] <= 1e-12,
        "support_propagation": ok_sup,
    }
    failures = _identity_failures(a.history, rc.tol_stage) + _identity_failures(b.history, rc.tol_stage)
    failures += [{"check": k} for k, v in checks.items() if not v]
    rep["checks"] = checks
    rd.write("bifurcation.json", json.dumps(DR._clean(rep), indent=2, sort_keys=True) + "\n")
    rd.write("reports_default.jsonl", DR.report_lines(a.history))
    rd.write("reports_flipped.jsonl", DR.report_lines(b.history))
    rd.write("separation.csv", "t,l2\n" + "".join(f"{r['t']:.12g},{r['l2']:.12g}\n" for r in curve))
    _snapshot(rd, a.tuple, cfg.get("snapshot_times"), "default")
    _snapshot(rd, b.tuple, cfg.get("snapshot_times"), "flipped")
    lines = [f"slab {s0} support {rep['slab_support']} in interval {list(interval)}",
             f"lower bound (reported only) {rep['lower_bound']:.4g}"]
    lines += [f"{k}: {'ok' if v else 'FAILED'}" for k, v in checks.items()]
    lines.append(f"identity checks failed: {len(failures)}")
    rd.write("summary.txt", "\n".join(lines) + "\n")
    print("\n".join(lines))
    if failures:
        rd.write("failure.json", json.dumps({"status": "failed", "failures": failures}, indent=2) + "\n")
        return 1
    return 0


# ---------------------------------------------------------------- entry point

def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lame-ci", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("construct", "verify", "bifurcate"):
        s = sub.add_parser(name)
        s.add_argument("--config", help="YAML or JSON configuration file")
        s.add_argument("--out", help="run directory")
        s.add_argument("--seed", type=int)
        s.add_argument("--mode", choices=("paper-formula", "toy-override"))
        s.add_argument("--strict", action="store_true",
                       help="stop at the first failed identity check")
        if name == "construct":
            s.add_argument("--steps", type=int)
        if name == "verify":
            s.add_argument("--suite", choices=("geometry", "operators", "blocks", "assembly",
                                               "reynolds", "hyperbolic", "all"))
    return p


def _threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"{THREADS_ENV} must be >= 1")
    return n


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    rd = RunDir(None)
    try:
        rd = RunDir(args.out)
        threads = _threads()
        # BLAS pools read these on first import
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, str(threads))
        cfg = apply_flags(load_config(args.config, args.command), args)
        rd.echo_config(cfg, args.command)
        import scipy.fft
        with scipy.fft.set_workers(threads):
            if args.command == "construct":
                return cmd_construct(cfg, rd, args.strict)
            if args.command == "verify":
                return cmd_verify(cfg, rd)
            return cmd_bifurcate(cfg, rd, args.strict)
    except IdentityFailure as err:
        rd.write("failure.json", json.dumps({"status": "failed", **err.record}, indent=2) + "\n")
        print(f"error: {err}", file=sys.stderr)
        return 1
    except Exception as err:  # noqa: BLE001 - every failure becomes a record
        rec = {"status": "error", "type": type(err).__name__, "message": str(err),
               "traceback": traceback.format_exc()}
        rd.write("failure.json", json.dumps(rec, indent=2) + "\n")
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
