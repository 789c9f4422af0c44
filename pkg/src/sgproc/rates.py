"""Learning-rate schedules, jump hazards and waiting-time sampling.

A schedule is a positive, non-increasing learning rate ``eta(t)``.  The
switching index process jumps with hazard ``nu(t) = 1/eta(t)``; between
state changes the waiting time started at ``t0`` has survival function
``exp(-int_0^d nu(t0+u) du)``.  Everything here is exact for the three
named schedule families and falls back to quadrature plus bisection for
custom ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

# Quantile arguments this close to 1 are rejected: -log1p(-s) loses all
# resolution once 1 - s is below ~1e-15.
S_CLIFF = 1e-15

_QUAD_TOL = 1e-12
_BISECT_TOL = 1e-12
_MAX_ITER = 200


class NumericalFailure(RuntimeError):
    """A numeric routine exhausted its iteration or accuracy budget."""


@dataclass(frozen=True)
class Schedule:
    """Learning-rate schedule ``eta(t)``.

    Use the factory classmethods; ``kind`` is one of ``constant``,
    ``rational``, ``exponential``, ``custom``.  ``rational`` is
    ``eta(t) = 1/(a*t + b)``, ``exponential`` is ``eta(t) = a*exp(-b*t)``.
    Custom schedules supply a vectorised ``eta_fn`` and, when derivative
    information is needed (growth validation), ``deta_fn``.
    """

    kind: str
    eta0: float = 0.0
    a: float = 0.0
    b: float = 0.0
    eta_fn: Optional[Callable] = None
    deta_fn: Optional[Callable] = None

    def __post_init__(self):
        if self.kind not in ("constant", "rational", "exponential", "custom"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.kind == "constant" and not self.eta0 > 0:
            raise ValueError("constant schedule needs eta0 > 0")
        if self.kind in ("rational", "exponential") and not (
            self.a > 0 and self.b > 0
        ):
            raise ValueError(f"{self.kind} schedule needs a > 0 and b > 0")
        if self.kind == "custom" and self.eta_fn is None:
            raise ValueError("custom schedule needs eta_fn")

    @classmethod
    def constant(cls, eta: float) -> "Schedule":
        return cls(kind="constant", eta0=float(eta))

    @classmethod
    def rational(cls, a: float, b: float) -> "Schedule":
        return cls(kind="rational", a=float(a), b=float(b))

    @classmethod
    def exponential(cls, a: float, b: float) -> "Schedule":
        return cls(kind="exponential", a=float(a), b=float(b))

    @classmethod
    def custom(cls, eta_fn: Callable, deta_fn: Optional[Callable] = None) -> "Schedule":
        return cls(kind="custom", eta_fn=eta_fn, deta_fn=deta_fn)


@dataclass(frozen=True)
class WaitingTimeDistribution:
    """Distribution of the next inter-jump time, started at time ``t0``.

    ``n_states`` is carried for bookkeeping (the per-pair switching rate
    is ``hazard/(n_states-1)``); the total hazard out of the current
    state is ``1/eta(t)`` independently of ``n_states``.
    """

    schedule: Schedule
    n_states: int
    t0: float

    def __post_init__(self):
        if self.n_states < 2:
            raise ValueError("need at least two states")
        if not self.t0 >= 0:
            raise ValueError("t0 must be nonnegative")


def _check_times(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("schedule times must be nonnegative")
    return t


def eta_at(schedule: Schedule, t):
    """Evaluate ``eta(t)``; accepts scalars or arrays, t >= 0."""
    t = _check_times(t)
    if schedule.kind == "constant":
        out = np.full_like(t, schedule.eta0)
    elif schedule.kind == "rational":
        out = 1.0 / (schedule.a * t + schedule.b)
    elif schedule.kind == "exponential":
        out = schedule.a * np.exp(-schedule.b * t)
    else:
        out = np.asarray(schedule.eta_fn(t), dtype=float)
        if np.any(out <= 0):
            raise ValueError("custom schedule returned a non-positive rate")
    if out.ndim == 0:
        return float(out)
    return out


def hazard_at(schedule: Schedule, t):
    """Jump hazard ``nu(t) = 1/eta(t)``."""
    return 1.0 / eta_at(schedule, t)


def _adaptive_simpson(f, a, b, tol=_QUAD_TOL, max_depth=48):
    """Adaptive Simpson quadrature of a scalar positive integrand."""

    def simp(x0, x2, f0, f1, f2):
        return (x2 - x0) * (f0 + 4.0 * f1 + f2) / 6.0

    def recurse(x0, x2, f0, f1, f2, whole, eps, depth):
        xm_l = 0.5 * (x0 + 0.5 * (x0 + x2))
        xm_r = 0.5 * (0.5 * (x0 + x2) + x2)
        x1 = 0.5 * (x0 + x2)
        fl = float(f(xm_l))
        fr = float(f(xm_r))
        left = simp(x0, x1, f0, fl, f1)
        right = simp(x1, x2, f1, fr, f2)
        if depth >= max_depth:
            raise NumericalFailure("adaptive quadrature hit maximum depth")
        if abs(left + right - whole) <= 15.0 * eps:
            return left + right + (left + right - whole) / 15.0
        return recurse(x0, x1, f0, fl, f1, left, 0.5 * eps, depth + 1) + recurse(
            x1, x2, f1, fr, f2, right, 0.5 * eps, depth + 1
        )

    if b <= a:
        return 0.0
    f0, f1, f2 = float(f(a)), float(f(0.5 * (a + b))), float(f(b))
    whole = simp(a, b, f0, f1, f2)
    return recurse(a, b, f0, f1, f2, whole, tol, 0)


def cumulative_hazard(schedule: Schedule, t0: float, t1: float) -> float:
    """``int_{t0}^{t1} 1/eta(u) du`` (exact for the named families)."""
    if t1 < t0:
        raise ValueError("need t1 >= t0")
    _check_times([t0, t1])
    if schedule.kind == "constant":
        return (t1 - t0) / schedule.eta0
    if schedule.kind == "rational":
        a, b = schedule.a, schedule.b
        return 0.5 * a * (t1 * t1 - t0 * t0) + b * (t1 - t0)
    if schedule.kind == "exponential":
        a, b = schedule.a, schedule.b
        return (np.expm1(b * t1) - np.expm1(b * t0)) / (a * b)
    return _adaptive_simpson(lambda u: 1.0 / float(eta_at(schedule, u)), t0, t1)


def waiting_time_cdf(wt: WaitingTimeDistribution, d) -> float:
    """P(waiting time <= d) for a wait started at ``wt.t0``."""
    d = np.asarray(d, dtype=float)
    scalar = d.ndim == 0
    d = np.atleast_1d(d)
    out = np.zeros_like(d)
    pos = d > 0
    if np.any(pos):
        sched = wt.schedule
        t0 = wt.t0
        dp = d[pos]
        if sched.kind == "constant":
            lam = np.full_like(dp, dp / sched.eta0)
        elif sched.kind == "rational":
            lam = 0.5 * sched.a * dp * dp + (sched.a * t0 + sched.b) * dp
        elif sched.kind == "exponential":
            lam = np.expm1(sched.b * dp) * np.exp(sched.b * t0) / (
                sched.a * sched.b
            )
        else:
            lam = np.array(
                [cumulative_hazard(sched, t0, t0 + float(x)) for x in dp]
            )
        out[pos] = -np.expm1(-lam)
    return float(out[0]) if scalar else out


def _quantile_named(schedule: Schedule, s, t0):
    """Quantile of the waiting time for the closed-form families.

    ``s`` and ``t0`` broadcast; returns an array.  ``L = -log(1-s)`` is
    the exponential pre-image of ``s``; the forms below avoid
    cancellation for small ``L``.
    """
    s = np.asarray(s, dtype=float)
    t0 = np.asarray(t0, dtype=float)
    L = -np.log1p(-s)
    if schedule.kind == "constant":
        return schedule.eta0 * L
    if schedule.kind == "rational":
        a, b = schedule.a, schedule.b
        c = a * t0 + b
        return 2.0 * L / (c + np.sqrt(c * c + 2.0 * a * L))
    if schedule.kind == "exponential":
        a, b = schedule.a, schedule.b
        return np.log1p(a * b * np.exp(-b * t0) * L) / b
    raise ValueError("no closed-form quantile for custom schedules")


def _quantile_custom(wt: WaitingTimeDistribution, s: float) -> float:
    """Bisection inversion of the custom-schedule CDF."""
    # Bracket by doubling from the local learning rate.
    hi = float(eta_at(wt.schedule, wt.t0))
    lo = 0.0
    it = 0
    while waiting_time_cdf(wt, hi) < s:
        lo = hi
        hi *= 2.0
        it += 1
        if it > _MAX_ITER:
            raise NumericalFailure("waiting-time bracket did not close")
    for _ in range(_MAX_ITER):
        mid = 0.5 * (lo + hi)
        c = waiting_time_cdf(wt, mid)
        if abs(c - s) <= _BISECT_TOL:
            return mid
        if c < s:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16 * max(1.0, hi):
            return 0.5 * (lo + hi)
    raise NumericalFailure("waiting-time bisection did not converge")


def waiting_time_quantile(wt: WaitingTimeDistribution, s: float) -> float:
    """Inverse CDF of the waiting time at probability ``s in (0, 1)``."""
    if not 0.0 < s < 1.0:
        raise ValueError("quantile argument must lie in (0, 1)")
    if s >= 1.0 - S_CLIFF:
        raise ValueError("quantile argument too close to 1 for double precision")
    if wt.schedule.kind == "custom":
        return _quantile_custom(wt, s)
    return float(_quantile_named(wt.schedule, s, wt.t0))


def sample_waiting_time(wt: WaitingTimeDistribution, rng: np.random.Generator) -> float:
    """Draw one waiting time by quantile inversion of a uniform.

    The raw uniform is clamped into the quantile's admissible open
    interval, so the result is strictly positive and finite.
    """
    u = rng.random()
    u = min(max(u, 5e-324), 1.0 - 2.0 * S_CLIFF)
    return waiting_time_quantile(wt, u)


def validate_growth_condition(
    schedule: Schedule, t_bar: float, grid_n: int = 256
) -> float:
    """Max of ``|d/dt log(1/eta)| = |eta'|/eta`` on a grid over [0, t_bar].

    A finite return value is the growth constant of the switching-rate
    family on that window; the rate derivative is evaluated analytically
    per schedule family.
    """
    if not t_bar > 0:
        raise ValueError("t_bar must be positive")
    if grid_n < 2:
        raise ValueError("need at least two grid points")
    t = np.linspace(0.0, t_bar, grid_n)
    if schedule.kind == "constant":
        return 0.0
    if schedule.kind == "rational":
        ratio = schedule.a / (schedule.a * t + schedule.b)
    elif schedule.kind == "exponential":
        ratio = np.full_like(t, schedule.b)
    else:
        if schedule.deta_fn is None:
            raise ValueError("custom schedule needs deta_fn for growth validation")
        ratio = np.abs(np.asarray(schedule.deta_fn(t), dtype=float)) / eta_at(
            schedule, t
        )
    c = float(np.max(np.abs(ratio)))
    if not np.isfinite(c):
        raise ValueError("growth ratio is not finite on the requested window")
    return c
