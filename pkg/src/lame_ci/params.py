"""Scalar parameters of the iteration and the per-stage scales derived from them.

Two modes are supported.  ``paper-formula`` evaluates the frequency ladder
lambda_q = 2**(6*ceil(b**q * log2 a)) exactly (as Python integers) and
delta_q = lambda_q**(-2 beta).  ``toy-override`` takes short user tables of
frequencies and amplitudes so that the construction fits on a desk-sized grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from typing import Optional, Sequence


class ScheduleError(ValueError):
    """Invalid or inconsistent schedule configuration."""


class ScheduleRangeError(ScheduleError):
    """A frequency exponent left the representable range."""


@dataclass(frozen=True)
class LameParams:
    lam: float = 1.0
    mu: float = 1.0

    def __post_init__(self):
        if not (self.mu > 0 and self.lam + self.mu > 0):
            raise ValueError(
                f"need mu > 0 and lam + mu > 0, got lam={self.lam}, mu={self.mu}")

    @property
    def p_speed(self) -> float:
        """Longitudinal wave speed sqrt(lam + 2 mu)."""
        return math.sqrt(self.lam + 2 * self.mu)

    @property
    def s_speed(self) -> float:
        return math.sqrt(self.mu)


def gamma_of_beta(beta: float) -> float:
    """Regularity gap gamma(beta); strictly below 1/36 on (0, 1/60)."""
    return ((1 + 12 * beta) / 24 - math.sqrt((beta - 6 * beta**2) / 6)) / 3


def b_bar(beta: float, gamma: Optional[float] = None) -> float:
    if gamma is None:
        gamma = gamma_of_beta(beta)
    return (1 + 12 * beta - 36 * gamma) / (48 * beta)


def n0_of(b: float, gamma: float, beta: float) -> int:
    """Number of vanishing moments required of the time kernel."""
    return math.ceil(12 * b * (1 + 2 * gamma) / (b - 1 + 6 * beta))


FORMULA = "paper-formula"
TOY = "toy-override"


@dataclass(frozen=True)
class StageId:
    q: int
    i: int

    def __post_init__(self):
        if self.q < 0 or not 0 <= self.i <= 6:
            raise ValueError(f"invalid stage ({self.q}, {self.i})")


@dataclass(frozen=True)
class Schedule:
    """All scalar parameters of the scheme.

    ``b`` defaults to ``b_bar(beta)`` in formula mode.  In toy mode ``lambdas``
    and ``deltas`` are required; both tables are extended geometrically past
    their last entry using the last ratio.
    """
    a: float = 2.0
    b: Optional[float] = None
    beta: float = 0.01
    epsilon: float = 0.1
    M: float = 2.0
    T: float = 1.0
    mode: str = FORMULA
    lambdas: Optional[Sequence[float]] = None
    deltas: Optional[Sequence[float]] = None
    n0_override: Optional[int] = None
    r0: float = 1.0 / 18
    max_exponent: int = 1023
    tail_tol: float = 1e-15
    tau_minus1: Optional[float] = None
    enforce_interval_nesting: bool = False
    # rounding toy frequencies to integers keeps every spatial phase periodic
    round_carriers: bool = True

    def __post_init__(self):
        if self.mode not in (FORMULA, TOY):
            raise ScheduleError(f"unknown mode {self.mode!r}")
        if not 0 < self.beta < 1 / 60:
            raise ScheduleError("beta must lie in (0, 1/60)")
        if not 0 < self.epsilon < 1:
            raise ScheduleError("epsilon must lie in (0, 1)")
        if self.M <= 1 or self.T <= 0:
            raise ScheduleError("need M > 1 and T > 0")
        if self.mode == FORMULA:
            if self.a <= 1:
                raise ScheduleError("a must exceed 1")
            if self.b is None:
                object.__setattr__(self, "b", b_bar(self.beta))
            if self.b <= 1:
                raise ScheduleError("b must exceed 1")
        else:
            lam, dl = self.lambdas, self.deltas
            if lam is None or dl is None or len(lam) < 2 or len(dl) < 2:
                raise ScheduleError("toy mode needs lambdas and deltas tables of length >= 2")
            object.__setattr__(self, "lambdas", tuple(float(x) for x in lam))
            object.__setattr__(self, "deltas", tuple(float(x) for x in dl))
            if any(x != int(x) or x < 1 for x in self.lambdas):
                raise ScheduleError("toy lambdas must be positive integers")
            if any(y <= x for x, y in zip(self.lambdas, self.lambdas[1:])):
                raise ScheduleError("toy lambdas must be strictly increasing")
            if any(not 0 < d < 1 for d in self.deltas):
                raise ScheduleError("toy deltas must lie in (0, 1)")
            if any(y >= x for x, y in zip(self.deltas, self.deltas[1:])):
                raise ScheduleError("toy deltas must be strictly decreasing")
            if self.b is None:
                object.__setattr__(self, "b", b_bar(self.beta))
        if self.n0_override is not None and self.n0_override < 1:
            raise ScheduleError("n0 override must be >= 1")

    @property
    def gamma(self) -> float:
        return gamma_of_beta(self.beta)

    @property
    def n0(self) -> int:
        if self.n0_override is not None:
            return self.n0_override
        return n0_of(self.b, self.gamma, self.beta)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["gamma"] = self.gamma
        d["n0"] = self.n0
        return d


# ---------------------------------------------------------------- frequencies

def _toy_entry(table, q):
    if q < len(table):
        return table[q]
    ratio = table[-1] / table[-2]
    return table[-1] * ratio ** (q - len(table) + 1)


def lambda_exponent(sched: Schedule, q: int) -> int:
    """Base-2 exponent of lambda_q in formula mode (a multiple of 6)."""
    if q < 0:
        raise ScheduleError("q must be >= 0")
    # log-space first so that huge b**q is caught before building the integer
    lg = q * math.log2(sched.b) + math.log2(math.log2(sched.a))
    if lg > math.log2(sched.max_exponent) + 1:
        raise ScheduleRangeError(f"lambda_{q} exponent ~2**{lg:.1f} out of range")
    e = 6 * math.ceil(sched.b**q * math.log2(sched.a))
    if e > sched.max_exponent:
        raise ScheduleRangeError(
            f"lambda_{q} = 2**{e} exceeds configured max exponent {sched.max_exponent}")
    return e


def lambda_q(sched: Schedule, q: int):
    """Frequency of step q (an exact int power of 64 in formula mode)."""
    if sched.mode == FORMULA:
        return 2 ** lambda_exponent(sched, q)
    if q < 0:
        raise ScheduleError("q must be >= 0")
    v = _toy_entry(sched.lambdas, q)
    return int(v) if float(v).is_integer() else v


def log2_lambda_q(sched: Schedule, q: int) -> float:
    if sched.mode == FORMULA:
        return float(lambda_exponent(sched, q))
    return math.log2(_toy_entry(sched.lambdas, q))


def lambda_qi(sched: Schedule, q: int, i: int) -> float:
    """Geometric interpolation lambda_q**(1-i/6) * lambda_{q+1}**(i/6)."""
    if not 0 <= i <= 6:
        raise ScheduleError("i must lie in 0..6")
    if i == 0:
        return float(lambda_q(sched, q))
    if i == 6:
        return float(lambda_q(sched, q + 1))
    lg = (1 - i / 6) * log2_lambda_q(sched, q) + (i / 6) * log2_lambda_q(sched, q + 1)
    return 2.0**lg


def carrier(sched: Schedule, q: int, i: int) -> int:
    """Integer frequency multiplying the phases of stage (q, i-1).

    Exact in formula mode; rounded in toy mode, where the interpolated
    frequencies are generally not integers.
    """
    v = lambda_qi(sched, q, i)
    if sched.mode == FORMULA:
        return int(round(v))
    if not sched.round_carriers and not float(v).is_integer():
        raise ScheduleError(f"lambda_({q},{i}) = {v} is not an integer")
    return max(1, int(round(v)))


def log2_delta_q(sched: Schedule, q: int) -> float:
    if sched.mode == FORMULA:
        return -2 * sched.beta * lambda_exponent(sched, q)
    return math.log2(_toy_entry(sched.deltas, q))


def delta_q(sched: Schedule, q: int) -> float:
    return 2.0 ** log2_delta_q(sched, q)


def delta_qi(sched: Schedule, q: int, i: int) -> float:
    """delta_q at i = 0, delta_{q+1} afterwards."""
    return delta_q(sched, q) if i == 0 else delta_q(sched, q + 1)


def c_q(sched: Schedule, q: int) -> float:
    """Tail sum of delta_j over j > q, truncated below ``tail_tol``."""
    if sched.mode == TOY:
        ratio = sched.deltas[-1] / sched.deltas[-2]
        if ratio >= 1:
            raise ScheduleError("toy delta table does not decay")
    total = 0.0
    j = q + 1
    terms = []
    while True:
        try:
            d = delta_q(sched, j)
        except ScheduleRangeError:
            # past the range the terms are far below double precision
            break
        if d < sched.tail_tol:
            break
        terms.append(d)
        j += 1
        if j - q > 100000:
            raise ScheduleError("c_q series did not converge")
    # small terms first for a reproducible, accurate sum
    for d in reversed(terms):
        total += d
    return total


def derived_scales(sched: Schedule, q: int, i: int):
    """(ell, tau, mu_inv) for stage (q, i), 0 <= i <= 5."""
    if not 0 <= i <= 5:
        raise ScheduleError("i must lie in 0..5")
    lg = 0.5 * (math.log2(lambda_qi(sched, q, i)) + math.log2(lambda_qi(sched, q, i + 1)))
    ld = 0.25 * log2_delta_q(sched, q)
    ell = 2.0 ** (-lg - ld)
    tau_inv = 2.0 ** (lg + ld)
    tau = 1.0 / tau_inv
    mu_inv = 2 * math.ceil(tau_inv / 2)
    return ell, tau, mu_inv


def tau_prev(sched: Schedule, q: int, i: int) -> float:
    """tau_{q,i-1}, with tau_{q,-1} = tau_{q-1,5} and a configured value at q = 0."""
    if i >= 1:
        return derived_scales(sched, q, i - 1)[1]
    if q >= 1:
        return derived_scales(sched, q - 1, 5)[1]
    if sched.tau_minus1 is not None:
        return sched.tau_minus1
    return derived_scales(sched, 0, 0)[1]


def stage_interval(sched: Schedule, q: int, i: int):
    """Interval of definition [-tau_{q,i}, T + tau_{q,i}] after stage (q, i)."""
    tau = derived_scales(sched, q, i)[1] if i >= 0 else tau_prev(sched, q, 0)
    return (-tau, sched.T + tau)


def interval_nesting_report(sched: Schedule, q: int) -> list:
    """Check tau_{q,i} + 3 ell_{q,i} <= tau_{q,i-1} for every sub-stage.

    Returns one record per stage; raises only when the schedule asks for it.
    """
    out = []
    for i in range(6):
        ell, tau, _ = derived_scales(sched, q, i)
        prev = tau_prev(sched, q, i)
        ok = tau + 3 * ell <= prev
        out.append({"q": q, "i": i, "lhs": tau + 3 * ell, "rhs": prev, "ok": ok})
        if not ok and sched.enforce_interval_nesting:
            raise ScheduleError(
                f"interval nesting fails at ({q},{i}): {tau + 3 * ell:.4g} > {prev:.4g}")
    return out


def load_schedule(cfg: dict) -> Schedule:
    keys = {f for f in Schedule.__dataclass_fields__}
    return Schedule(**{k: v for k, v in cfg.items() if k in keys})
