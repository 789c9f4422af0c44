"""The switching index process: jump skeletons and transition kernels.

A path of the index process is stored as a jump skeleton (initial state,
ordered jump times, the state after each jump).  Between jumps the state
is constant; at a jump it moves to a uniformly chosen *different* state.
The homogeneous process has a constant pairwise rate ``lam``; the
inhomogeneous one takes its total hazard ``1/eta(t)`` from a schedule.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from sgproc import rates
from sgproc.rates import NumericalFailure, Schedule, WaitingTimeDistribution

DEFAULT_MAX_JUMPS = 10_000_000


class ExplosionGuardError(NumericalFailure):
    """Raised when a single path exceeds the jump-count cap."""


@dataclass(frozen=True, eq=False)
class JumpSkeleton:
    """Piecewise-constant index path on ``[t0, horizon]``.

    ``states`` has one more entry than ``jump_times``: ``states[0]`` is
    the initial state, ``states[k]`` the state on
    ``[jump_times[k-1], jump_times[k])``.  Paths are right-continuous.
    """

    t0: float
    horizon: float
    jump_times: np.ndarray
    states: np.ndarray
    n_states: int

    def __post_init__(self):
        jt = np.asarray(self.jump_times, dtype=float)
        st = np.asarray(self.states, dtype=np.int64)
        object.__setattr__(self, "jump_times", jt)
        object.__setattr__(self, "states", st)
        if not self.horizon >= self.t0:
            raise ValueError("horizon must not precede t0")
        if self.n_states < 2:
            raise ValueError("need at least two states")
        if st.shape != (jt.size + 1,):
            raise ValueError("states must have one more entry than jump_times")
        if jt.size:
            if not (np.all(jt > self.t0) and np.all(jt <= self.horizon)):
                raise ValueError("jump times must lie in (t0, horizon]")
            if np.any(np.diff(jt) <= 0):
                raise ValueError("jump times must be strictly increasing")
            if np.any(st[1:] == st[:-1]):
                raise ValueError("consecutive states must differ")
        if np.any(st < 0) or np.any(st >= self.n_states):
            raise ValueError("states out of range")

    @property
    def n_jumps(self) -> int:
        return int(self.jump_times.size)


def kernel_homogeneous(lam: float, n_states: int, t: float, i0: int):
    """Transition probabilities after time ``t`` from state ``i0``.

    With pairwise rate ``lam`` the chain relaxes to uniform at rate
    ``n_states*lam``:
    ``p(i) = (1 - exp(-n lam t))/n + exp(-n lam t) * [i == i0]``.
    """
    if not lam > 0:
        raise ValueError("lam must be positive")
    if not t >= 0:
        raise ValueError("t must be nonnegative")
    _check_state(i0, n_states)
    decay = np.exp(-n_states * lam * t)
    p = np.full(n_states, (1.0 - decay) / n_states)
    p[i0] += decay
    return p


def kernel_inhomogeneous(
    schedule: Schedule, n_states: int, t0: float, t: float, j0: int
):
    """Transition probabilities over ``[t0, t]`` from state ``j0``.

    Same mixture form as the homogeneous kernel with ``lam*t`` replaced
    by the integrated pairwise rate
    ``int_{t0}^{t} 1/((n_states-1) eta(u)) du``.
    """
    if t < t0:
        raise ValueError("need t >= t0")
    _check_state(j0, n_states)
    integral = rates.cumulative_hazard(schedule, t0, t) / (n_states - 1)
    decay = np.exp(-n_states * integral)
    p = np.full(n_states, (1.0 - decay) / n_states)
    p[j0] += decay
    return p


def _check_state(i, n_states):
    if n_states < 2:
        raise ValueError("need at least two states")
    if not 0 <= i < n_states:
        raise ValueError(f"state {i} out of range for {n_states} states")


def _kernel_matrix(schedule, n_states, t0, t):
    rows = [
        kernel_inhomogeneous(schedule, n_states, t0, t, j0)
        for j0 in range(n_states)
    ]
    return np.stack(rows)


def forward_equation_residual(
    schedule: Schedule, n_states: int, t0: float, t: float, h: float = 1e-5
) -> float:
    """Max-norm defect of ``dM/dt = M B(t)`` at time ``t``.

    ``M`` is the kernel matrix from ``t0`` (rows indexed by the start
    state), ``B(t)`` the generator with off-diagonal entries
    ``1/((n_states-1) eta(t))``.  The time derivative is a central
    difference with stencil ``h``, so the return value mixes O(h^2)
    truncation with the kernel's own accuracy.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    if t - h < t0:
        raise ValueError("need t - h >= t0 for the central difference")
    m_lo = _kernel_matrix(schedule, n_states, t0, t - h)
    m_hi = _kernel_matrix(schedule, n_states, t0, t + h)
    m_mid = _kernel_matrix(schedule, n_states, t0, t)
    dm = (m_hi - m_lo) / (2.0 * h)
    mu = float(rates.hazard_at(schedule, t)) / (n_states - 1)
    gen = np.full((n_states, n_states), mu)
    np.fill_diagonal(gen, -(n_states - 1) * mu)
    return float(np.max(np.abs(dm - m_mid @ gen)))


def _as_schedule(rate: Union[float, Schedule], n_states: int) -> Schedule:
    """A bare float is the homogeneous pairwise rate lam."""
    if isinstance(rate, Schedule):
        return rate
    lam = float(rate)
    if not lam > 0:
        raise ValueError("lam must be positive")
    return Schedule.constant(1.0 / ((n_states - 1) * lam))


def sample_jump_skeleton(
    rate: Union[float, Schedule],
    n_states: int,
    t0: float,
    horizon: float,
    rng: np.random.Generator,
    max_jumps: int = DEFAULT_MAX_JUMPS,
    initial_state: Optional[int] = None,
) -> JumpSkeleton:
    """Sample one skeleton on ``[t0, horizon]``.

    ``rate`` is either a pairwise rate ``lam`` (homogeneous) or a
    schedule (hazard ``1/eta``).  The initial state is uniform unless
    forced via ``initial_state`` (in which case no uniform is consumed
    for it).  Waiting times are drawn by quantile inversion; jumps past
    the horizon are discarded.
    """
    if horizon < t0:
        raise ValueError("horizon must not precede t0")
    schedule = _as_schedule(rate, n_states)
    rng = np.random.default_rng(rng)
    if initial_state is None:
        state = min(int(rng.random() * n_states), n_states - 1)
    else:
        _check_state(initial_state, n_states)
        state = int(initial_state)
    times = []
    states = [state]
    t = t0
    while True:
        wt = WaitingTimeDistribution(schedule, n_states, t)
        t = t + rates.sample_waiting_time(wt, rng)
        if t > horizon:
            break
        if len(times) >= max_jumps:
            raise ExplosionGuardError(
                f"more than {max_jumps} jumps before the horizon; "
                "raise max_jumps or use a larger learning rate"
            )
        # Uniform over the other n-1 states, as an index shift.
        u = rng.random()
        shift = 1 + min(int(u * (n_states - 1)), n_states - 2)
        state = (state + shift) % n_states
        times.append(t)
        states.append(state)
    return JumpSkeleton(
        t0=t0,
        horizon=horizon,
        jump_times=np.array(times, dtype=float),
        states=np.array(states, dtype=np.int64),
        n_states=n_states,
    )


def state_at(skeleton: JumpSkeleton, t):
    """State of the skeleton at time ``t`` (right-continuous)."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < skeleton.t0) or np.any(t_arr > skeleton.horizon):
        raise ValueError("t outside the skeleton's span")
    pos = np.searchsorted(skeleton.jump_times, t_arr, side="right")
    out = skeleton.states[pos]
    return int(out) if t_arr.ndim == 0 else out


def occupancy_histogram(skeletons: Sequence[JumpSkeleton], t: float) -> np.ndarray:
    """Empirical state frequencies at time ``t`` over many skeletons."""
    if not skeletons:
        raise ValueError("need at least one skeleton")
    n_states = skeletons[0].n_states
    counts = np.zeros(n_states)
    for sk in skeletons:
        if sk.n_states != n_states:
            raise ValueError("skeletons disagree on the state count")
        counts[state_at(sk, t)] += 1
    return counts / counts.sum()


def skeleton_to_csv(skeleton: JumpSkeleton, path) -> None:
    """Write rows ``(k, t, state)``; row 0 carries the initial state at t0."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "t", "state"])
        writer.writerow([0, f"{skeleton.t0:.17g}", int(skeleton.states[0])])
        for k, (tk, sk) in enumerate(
            zip(skeleton.jump_times, skeleton.states[1:]), start=1
        ):
            writer.writerow([k, f"{tk:.17g}", int(sk)])


def skeleton_from_csv(
    path, horizon: float, n_states: Optional[int] = None
) -> JumpSkeleton:
    """Inverse of :func:`skeleton_to_csv`; the horizon is not stored."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["k", "t", "state"]:
            raise ValueError(f"unexpected skeleton header {header!r}")
        times = []
        states = []
        for row in reader:
            times.append(float(row[1]))
            states.append(int(row[2]))
    if n_states is None:
        n_states = max(states) + 1
    return JumpSkeleton(
        t0=times[0],
        horizon=horizon,
        jump_times=np.array(times[1:], dtype=float),
        states=np.array(states, dtype=np.int64),
        n_states=n_states,
    )
