"""Path simulation.

Continuous processes (the switching gradient flow with constant or
decaying rates, the averaged full flow, the rate-frozen auxiliary
process), the discrete stochastic gradient recursion, and the schedule
bridge connecting the two time scales.

All stochastic paths run through the replicate-parallel engine in
:mod:`sgproc._engine`; a single path is the one-replicate case, so
ensemble replicate ``r`` seeded with ``mix_seed(master, r)`` is bitwise
the same path a direct call with that seed produces.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from sgproc import _engine, index_process, potentials, rates
from sgproc.index_process import DEFAULT_MAX_JUMPS, JumpSkeleton
from sgproc.potentials import CustomPotential, PotentialSet, QuadraticPotential
from sgproc.rates import Schedule

_INTEGRATOR_KINDS = ("exact", "euler", "implicit_euler", "rk4")


@dataclass(frozen=True)
class IntegratorSpec:
    """How to move a state across one inter-jump segment.

    ``exact`` is the closed-form quadratic flow; the stepped kinds
    subdivide each segment into steps of length at most ``step``.
    """

    kind: str = "exact"
    step: Optional[float] = None

    def __post_init__(self):
        if self.kind not in _INTEGRATOR_KINDS:
            raise ValueError(f"unknown integrator kind {self.kind!r}")
        if self.kind != "exact":
            if self.step is None or not self.step > 0:
                raise ValueError(f"{self.kind} integrator needs step > 0")

    @classmethod
    def exact(cls) -> "IntegratorSpec":
        return cls(kind="exact")

    @classmethod
    def euler(cls, step: float) -> "IntegratorSpec":
        return cls(kind="euler", step=step)

    @classmethod
    def implicit_euler(cls, step: float) -> "IntegratorSpec":
        return cls(kind="implicit_euler", step=step)

    @classmethod
    def rk4(cls, step: float) -> "IntegratorSpec":
        return cls(kind="rk4", step=step)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States recorded on a time grid, plus the generating skeleton.

    ``indices`` is the (right-continuous) potential index at each grid
    time; ``tau`` the exponential clock of the time-homogeneous
    reformulation, filled by the decaying-rate processes.  Both are
    ``None`` when they do not apply.
    """

    grid: np.ndarray
    states: np.ndarray
    skeleton: Optional[JumpSkeleton] = None
    tau: Optional[np.ndarray] = None
    indices: Optional[np.ndarray] = None


def trajectory_to_csv(traj: Trajectory, path) -> None:
    """Columns: t, state components, then index and tau when present."""
    import csv as _csv

    k_dim = traj.states.shape[1]
    with open(path, "w", newline="") as fh:
        writer = _csv.writer(fh)
        header = ["t"] + [f"x{j}" for j in range(k_dim)]
        if traj.indices is not None:
            header.append("index")
        if traj.tau is not None:
            header.append("tau")
        writer.writerow(header)
        for g in range(traj.grid.size):
            row = [f"{traj.grid[g]:.17g}"] + [
                f"{v:.17g}" for v in traj.states[g]
            ]
            if traj.indices is not None:
                row.append(int(traj.indices[g]))
            if traj.tau is not None:
                row.append(f"{traj.tau[g]:.17g}")
            writer.writerow(row)


def _make_grid(grid, t0: float, horizon: float) -> np.ndarray:
    if grid is None:
        grid = 201
    if np.isscalar(grid) and not isinstance(grid, (list, tuple, np.ndarray)):
        n = int(grid)
        if n < 1:
            raise ValueError("grid needs at least one point")
        return np.linspace(t0, horizon, n) if n > 1 else np.array([horizon])
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size == 0:
        raise ValueError("grid must be a nonempty 1-d array")
    if np.any(np.diff(g) <= 0):
        raise ValueError("grid times must be strictly increasing")
    if g[0] < t0 or g[-1] > horizon:
        raise ValueError("grid times must lie in [t0, horizon]")
    return g


def _check_theta0(ps_dim: int, theta0) -> np.ndarray:
    theta0 = np.asarray(theta0, dtype=float).reshape(-1)
    if theta0.size != ps_dim:
        raise ValueError(
            f"initial point has dimension {theta0.size}, expected {ps_dim}"
        )
    return theta0


def _default_spec(ps: PotentialSet, eta_floor: float) -> IntegratorSpec:
    if ps.all_quadratic:
        return IntegratorSpec.exact()
    return IntegratorSpec.rk4(min(0.01, eta_floor / 10.0))


def _check_spec(ps: PotentialSet, spec: Optional[IntegratorSpec], eta_floor: float):
    if spec is None:
        return _default_spec(ps, eta_floor)
    if spec.kind in ("exact", "implicit_euler") and not ps.all_quadratic:
        raise ValueError(f"{spec.kind} integration needs quadratic potentials")
    return spec


def _validate_decaying_schedule(schedule: Schedule, horizon: float) -> None:
    """Positive, non-increasing, with a finite growth constant."""
    rates.validate_growth_condition(schedule, max(horizon, 1e-6), 256)
    t = np.linspace(0.0, horizon, 257)
    e = np.atleast_1d(rates.eta_at(schedule, t))
    if np.any(np.diff(e) > 1e-12 * e[0]):
        raise ValueError("schedule must be non-increasing")


def _auxiliary_hazard_fn(schedule: Schedule, epsilon: float):
    """Hazard of the rate-frozen process: 1/eta(-log tau_eps(t))."""

    def fn(t):
        tau = epsilon + (1.0 - epsilon) * np.exp(-np.asarray(t, dtype=float))
        return 1.0 / rates.eta_at(schedule, -np.log(tau))

    return fn


def _hazard_for(
    process: str,
    eta: Optional[float],
    schedule: Optional[Schedule],
    epsilon: Optional[float],
    horizon: float,
):
    if process == "sgpc":
        return _engine.AnalyticHazard(Schedule.constant(eta))
    if process == "sgpd":
        if schedule.kind == "custom":
            return _engine.TabulatedHazard(
                lambda t: rates.hazard_at(schedule, t), 0.0, horizon
            )
        return _engine.AnalyticHazard(schedule)
    if process == "auxiliary":
        return _engine.TabulatedHazard(
            _auxiliary_hazard_fn(schedule, epsilon), 0.0, horizon
        )
    if process == "switching_linear":
        return _engine.AnalyticHazard(Schedule.constant(eta))
    raise ValueError(f"no hazard for process {process!r}")


def _skeleton_from_engine(res: _engine.EngineResult, r: int, t0, horizon, n_states):
    return JumpSkeleton(
        t0=t0,
        horizon=horizon,
        jump_times=np.array(res.jump_times[r], dtype=float),
        states=np.concatenate(
            [[res.initial_states[r]], np.asarray(res.jump_states[r], dtype=np.int64)]
        ).astype(np.int64),
        n_states=n_states,
    )


def _single_continuous(
    flow,
    hazard,
    spec: IntegratorSpec,
    n_states: int,
    theta0: np.ndarray,
    horizon: float,
    grid: np.ndarray,
    rng,
    max_jumps: int,
) -> Tuple[np.ndarray, JumpSkeleton]:
    gen = np.random.default_rng(rng)
    res = _engine.run_paths(
        flow=flow,
        hazard=hazard,
        integrator=spec,
        n_states=n_states,
        theta0=theta0,
        t0=0.0,
        horizon=horizon,
        grid=grid,
        gens=[gen],
        max_jumps=max_jumps,
        record_skeleton=True,
    )
    skeleton = _skeleton_from_engine(res, 0, 0.0, horizon, n_states)
    return res.grid_states[0], skeleton


def simulate_sgpc(
    ps: PotentialSet,
    eta: float,
    theta0,
    horizon: float,
    grid=None,
    spec: Optional[IntegratorSpec] = None,
    rng=None,
    max_jumps: int = DEFAULT_MAX_JUMPS,
) -> Trajectory:
    """Constant-rate switching gradient flow on ``[0, horizon]``.

    The index starts uniform, switches to a uniformly chosen other
    member at hazard ``1/eta``, and the state follows the gradient flow
    of the current member between switches.
    """
    if not eta > 0:
        raise ValueError("eta must be positive")
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    theta0 = _check_theta0(ps.dim, theta0)
    grid = _make_grid(grid, 0.0, horizon)
    spec = _check_spec(ps, spec, eta)
    states, skeleton = _single_continuous(
        _engine.GradientFlow(ps),
        _hazard_for("sgpc", eta, None, None, horizon),
        spec,
        ps.n,
        theta0,
        horizon,
        grid,
        rng,
        max_jumps,
    )
    return Trajectory(
        grid=grid,
        states=states,
        skeleton=skeleton,
        indices=index_process.state_at(skeleton, grid),
    )


def simulate_sgpd(
    ps: PotentialSet,
    schedule: Schedule,
    xi0,
    horizon: float,
    grid=None,
    spec: Optional[IntegratorSpec] = None,
    rng=None,
    max_jumps: int = DEFAULT_MAX_JUMPS,
) -> Trajectory:
    """Decaying-rate switching gradient flow.

    The switching hazard ``1/eta(t)`` grows as the learning rate decays,
    so paths average ever faster; ``tau = exp(-t)`` (the clock of the
    time-homogeneous reformulation) is recorded on the grid.
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    _validate_decaying_schedule(schedule, horizon)
    theta0 = _check_theta0(ps.dim, xi0)
    grid = _make_grid(grid, 0.0, horizon)
    spec = _check_spec(ps, spec, float(rates.eta_at(schedule, horizon)))
    states, skeleton = _single_continuous(
        _engine.GradientFlow(ps),
        _hazard_for("sgpd", None, schedule, None, horizon),
        spec,
        ps.n,
        theta0,
        horizon,
        grid,
        rng,
        max_jumps,
    )
    return Trajectory(
        grid=grid,
        states=states,
        skeleton=skeleton,
        tau=np.exp(-grid),
        indices=index_process.state_at(skeleton, grid),
    )


def simulate_auxiliary(
    ps: PotentialSet,
    schedule: Schedule,
    epsilon: float,
    xi0,
    horizon: float,
    grid=None,
    spec: Optional[IntegratorSpec] = None,
    rng=None,
    max_jumps: int = DEFAULT_MAX_JUMPS,
) -> Trajectory:
    """Rate-frozen companion of the decaying-rate process.

    Its clock ``tau_eps(t) = eps + (1-eps) exp(-t)`` levels off at
    ``eps`` instead of hitting 0, so the switching hazard saturates at
    ``1/eta(-log eps)`` and the process has a stationary regime matching
    the constant-rate process with that rate.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    _validate_decaying_schedule(schedule, horizon)
    theta0 = _check_theta0(ps.dim, xi0)
    grid = _make_grid(grid, 0.0, horizon)
    eta_floor = float(rates.eta_at(schedule, -np.log(epsilon)))
    spec = _check_spec(ps, spec, eta_floor)
    states, skeleton = _single_continuous(
        _engine.GradientFlow(ps),
        _hazard_for("auxiliary", None, schedule, epsilon, horizon),
        spec,
        ps.n,
        theta0,
        horizon,
        grid,
        rng,
        max_jumps,
    )
    return Trajectory(
        grid=grid,
        states=states,
        skeleton=skeleton,
        tau=epsilon + (1.0 - epsilon) * np.exp(-grid),
        indices=index_process.state_at(skeleton, grid),
    )


def _mean_member(ps: PotentialSet):
    if ps.all_quadratic:
        return potentials.mean_quadratic(ps)

    def mean_grad(x):
        acc = ps.members[0].gradient_rows(x)
        for m in ps.members[1:]:
            acc = acc + m.gradient_rows(x)
        return acc / ps.n

    return CustomPotential(grad=mean_grad)


def simulate_full_flow(
    ps: PotentialSet,
    zeta0,
    horizon: float,
    grid=None,
    spec: Optional[IntegratorSpec] = None,
) -> Trajectory:
    """Deterministic flow of the averaged objective.

    With the exact integrator every grid value is evaluated in closed
    form from ``t = 0``, so refining the grid never changes values at
    shared times.
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    zeta0 = _check_theta0(ps.dim, zeta0)
    grid = _make_grid(grid, 0.0, horizon)
    spec = _check_spec(ps, spec, 1.0)
    member = _mean_member(ps)
    if spec.kind == "exact":
        states = member.flow_rows(np.tile(zeta0, (grid.size, 1)), grid)
    else:
        mean_set = PotentialSet(members=(member,), dim=ps.dim)
        flow = _engine.GradientFlow(mean_set)
        states = np.empty((grid.size, ps.dim))
        x = zeta0[None, :]
        t_prev = 0.0
        for g in range(grid.size):
            x = _engine._advance_group(
                flow, spec, 0, x, np.array([grid[g] - t_prev])
            )
            t_prev = grid[g]
            states[g] = x[0]
    return Trajectory(grid=grid, states=states)


def simulate_switching_linear(
    matrices: Sequence[np.ndarray],
    lam: float,
    theta0,
    horizon: float,
    grid=None,
    rng=None,
    spec: Optional[IntegratorSpec] = None,
    max_jumps: int = DEFAULT_MAX_JUMPS,
) -> Trajectory:
    """Random switching among linear drifts ``x' = G_i x``.

    The index process is the constant pairwise-rate chain; segments are
    integrated with RK4 (no closed form is assumed for the ``G_i``).
    """
    if not lam > 0:
        raise ValueError("lam must be positive")
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    mats = [np.asarray(g, dtype=float) for g in matrices]
    n_states = len(mats)
    if n_states < 2:
        raise ValueError("need at least two matrices")
    theta0 = np.asarray(theta0, dtype=float).reshape(-1)
    for g in mats:
        if g.shape != (theta0.size, theta0.size):
            raise ValueError("matrix shapes must match the state dimension")
    grid = _make_grid(grid, 0.0, horizon)
    eta_eq = 1.0 / ((n_states - 1) * lam)
    if spec is None:
        spec = IntegratorSpec.rk4(min(0.01, eta_eq / 10.0))
    elif spec.kind in ("exact", "implicit_euler"):
        raise ValueError("switching linear systems integrate with euler/rk4")
    states, skeleton = _single_continuous(
        _engine.MatrixFlow(mats),
        _engine.AnalyticHazard(Schedule.constant(eta_eq)),
        spec,
        n_states,
        theta0,
        horizon,
        grid,
        rng,
        max_jumps,
    )
    return Trajectory(
        grid=grid,
        states=states,
        skeleton=skeleton,
        indices=index_process.state_at(skeleton, grid),
    )


def integrate_segment(
    ps: PotentialSet,
    i: int,
    theta0,
    t_start: float,
    t_end: float,
    spec: Optional[IntegratorSpec] = None,
) -> np.ndarray:
    """Single-member flow from ``t_start`` to ``t_end`` (one segment)."""
    if t_end < t_start:
        raise ValueError("need t_end >= t_start")
    if not 0 <= i < ps.n:
        raise ValueError(f"potential index {i} out of range")
    theta0 = _check_theta0(ps.dim, theta0)
    spec = _check_spec(ps, spec, 1.0)
    flow = _engine.GradientFlow(ps)
    out = _engine._advance_group(
        flow, spec, i, theta0[None, :], np.array([t_end - t_start])
    )
    return out[0]


def replay_skeleton(
    ps: PotentialSet,
    skeleton: JumpSkeleton,
    theta0,
    grid=None,
    spec: Optional[IntegratorSpec] = None,
) -> Trajectory:
    """Deterministic path driven by an already-sampled skeleton.

    Useful for comparing integrators or initial points on identical
    switching noise.
    """
    theta0 = _check_theta0(ps.dim, theta0)
    grid = _make_grid(grid, skeleton.t0, skeleton.horizon)
    spec = _check_spec(ps, spec, 1.0)
    states = np.empty((grid.size, ps.dim))
    x = theta0
    t_anchor = skeleton.t0
    next_jump = 0
    jt = skeleton.jump_times
    for g in range(grid.size):
        while next_jump < jt.size and jt[next_jump] <= grid[g]:
            x = integrate_segment(
                ps, int(skeleton.states[next_jump]), x, t_anchor, jt[next_jump], spec
            )
            t_anchor = jt[next_jump]
            next_jump += 1
        states[g] = integrate_segment(
            ps, int(skeleton.states[next_jump]), x, t_anchor, grid[g], spec
        )
    return Trajectory(
        grid=grid,
        states=states,
        skeleton=skeleton,
        indices=index_process.state_at(skeleton, grid),
    )


# ---------------------------------------------------------------------------
# discrete recursion and the schedule bridge


def sgd_schedule_from_continuous(schedule: Schedule, steps: int) -> np.ndarray:
    """Step sizes read off the continuous schedule at cumulative times.

    ``eta_hat[k] = eta(t_hat[k])`` with ``t_hat[0] = 0`` and
    ``t_hat[k+1] = t_hat[k] + eta_hat[k]``, so step ``k`` spans exactly
    the time its own length says it should.
    """
    if steps < 1:
        raise ValueError("need at least one step")
    out = np.empty(steps)
    t_hat = 0.0
    for k in range(steps):
        out[k] = rates.eta_at(schedule, t_hat)
        t_hat += out[k]
    return out


def run_sgd(
    ps: PotentialSet,
    etas,
    theta0,
    steps: Optional[int] = None,
    rng=None,
    indices=None,
) -> np.ndarray:
    """Stochastic gradient descent; returns all iterates, shape (steps+1, dim).

    Each step picks a member uniformly at random (repeats allowed,
    one uniform consumed per step) unless ``indices`` forces the draws.
    """
    etas = np.asarray(etas, dtype=float).reshape(-1)
    if steps is None:
        steps = etas.size
    if steps < 1 or etas.size < steps:
        raise ValueError("need 1 <= steps <= len(etas)")
    if np.any(etas[:steps] < 0):
        raise ValueError("step sizes must be nonnegative")
    theta0 = _check_theta0(ps.dim, theta0)
    if indices is not None:
        indices = np.asarray(indices, dtype=np.int64).reshape(-1)
        if indices.size < steps:
            raise ValueError("need one forced index per step")
        if np.any((indices < 0) | (indices >= ps.n)):
            raise ValueError("forced index out of range")
    _, _, iterates = _engine.run_sgd_paths(
        ps=ps,
        etas=etas[:steps],
        theta0=theta0,
        gens=[np.random.default_rng(rng)],
        checkpoint_steps=np.array([], dtype=np.int64),
        record_all=True,
        forced_indices=indices,
    )
    return iterates[0]


def matched_epsilon(schedule: Schedule, lam: float, n_states: int) -> float:
    """Freezing level at which the auxiliary process matches rate ``lam``.

    Solves ``1/((n-1) eta(-log eps)) = lam`` for ``eps in (0, 1]``; the
    constant-rate process with pairwise rate ``lam`` and the auxiliary
    process frozen at this level share their long-run behaviour.
    """
    if not lam > 0:
        raise ValueError("lam must be positive")
    if n_states < 2:
        raise ValueError("need at least two states")
    target = 1.0 / ((n_states - 1) * lam)
    eta0 = float(rates.eta_at(schedule, 0.0))
    if target > eta0 * (1.0 + 1e-12):
        raise ValueError("rate too small: schedule never runs that slowly")
    if schedule.kind == "constant":
        raise ValueError("constant schedules have a fixed rate; nothing to match")
    if schedule.kind == "exponential":
        s_star = np.log(schedule.a / target) / schedule.b
    elif schedule.kind == "rational":
        s_star = (1.0 / target - schedule.b) / schedule.a
    else:
        lo, hi = 0.0, 1.0
        while float(rates.eta_at(schedule, hi)) > target:
            lo, hi = hi, 2.0 * hi
            if hi > 1e12:
                raise rates.NumericalFailure("schedule never decays to the target")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if float(rates.eta_at(schedule, mid)) > target:
                lo = mid
            else:
                hi = mid
        s_star = 0.5 * (lo + hi)
    s_star = max(float(s_star), 0.0)
    return float(np.exp(-s_star))


# ---------------------------------------------------------------------------
# ensemble plumbing


_PROCESSES = ("sgpc", "sgpd", "auxiliary", "full_flow", "sgd", "switching_linear")


@dataclass(frozen=True, eq=False)
class RunSpec:
    """Everything needed to reproduce one simulation, minus the seed."""

    process: str
    potentials: Optional[PotentialSet] = None
    matrices: Optional[tuple] = None
    eta: Optional[float] = None
    schedule: Optional[Schedule] = None
    theta0: Union[float, tuple] = 0.0
    horizon: float = 1.0
    integrator: Optional[IntegratorSpec] = None
    epsilon: Optional[float] = None
    steps: Optional[int] = None
    lam: Optional[float] = None
    max_jumps: int = DEFAULT_MAX_JUMPS

    def __post_init__(self):
        if self.process not in _PROCESSES:
            raise ValueError(f"unknown process {self.process!r}")
        if self.process == "switching_linear":
            if self.matrices is None or self.lam is None:
                raise ValueError("switching_linear needs matrices and lam")
        elif self.potentials is None:
            raise ValueError(f"{self.process} needs a potential set")
        if self.process == "sgpc" and not (self.eta and self.eta > 0):
            raise ValueError("sgpc needs eta > 0")
        if self.process in ("sgpd", "auxiliary") and self.schedule is None:
            raise ValueError(f"{self.process} needs a schedule")
        if self.process == "auxiliary" and not (
            self.epsilon is not None and 0 < self.epsilon < 1
        ):
            raise ValueError("auxiliary needs epsilon in (0, 1)")
        if self.process == "sgd":
            if not (self.steps and self.steps >= 1):
                raise ValueError("sgd needs steps >= 1")
            if self.eta is None and self.schedule is None:
                raise ValueError("sgd needs eta or a schedule")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")

    @property
    def theta0_array(self) -> np.ndarray:
        return np.asarray(self.theta0, dtype=float).reshape(-1)

    def digest(self) -> str:
        """Hex digest of a canonical description (for result provenance)."""
        return hashlib.sha256(
            json.dumps(_describe(self), sort_keys=True).encode()
        ).hexdigest()


def _describe(spec: RunSpec) -> dict:
    def fmt(v):
        return f"{float(v):.17g}"

    d = {
        "process": spec.process,
        "theta0": [fmt(v) for v in spec.theta0_array],
        "horizon": fmt(spec.horizon),
        "max_jumps": spec.max_jumps,
    }
    if spec.eta is not None:
        d["eta"] = fmt(spec.eta)
    if spec.lam is not None:
        d["lam"] = fmt(spec.lam)
    if spec.epsilon is not None:
        d["epsilon"] = fmt(spec.epsilon)
    if spec.steps is not None:
        d["steps"] = spec.steps
    if spec.schedule is not None:
        s = spec.schedule
        d["schedule"] = {
            "kind": s.kind,
            "eta0": fmt(s.eta0),
            "a": fmt(s.a),
            "b": fmt(s.b),
        }
        if s.kind == "custom":
            d["schedule"]["eta_fn"] = getattr(s.eta_fn, "__qualname__", "custom")
    if spec.integrator is not None:
        d["integrator"] = {
            "kind": spec.integrator.kind,
            "step": fmt(spec.integrator.step or 0.0),
        }
    if spec.potentials is not None:
        members = []
        for m in spec.potentials.members:
            if isinstance(m, QuadraticPotential):
                members.append(
                    {
                        "a": [[fmt(v) for v in row] for row in m.a_mat],
                        "b": [fmt(v) for v in m.b_vec],
                    }
                )
            else:
                members.append({"custom": getattr(m.grad, "__qualname__", "grad")})
        d["potentials"] = members
    if spec.matrices is not None:
        d["matrices"] = [
            [[fmt(v) for v in row] for row in np.asarray(g, dtype=float)]
            for g in spec.matrices
        ]
    return d


def _sgd_etas(spec: RunSpec) -> np.ndarray:
    if spec.schedule is not None:
        return sgd_schedule_from_continuous(spec.schedule, spec.steps)
    return np.full(spec.steps, float(spec.eta))


def ensemble_paths(
    spec: RunSpec,
    gens: Sequence[np.random.Generator],
    checkpoints: np.ndarray,
    rep_offset: int = 0,
) -> Tuple[np.ndarray, np.ndarray]:
    """Engine dispatch for a block of replicates.

    Returns ``(checkpoint_states, terminal)`` with shapes
    (n, len(checkpoints), dim) and (n, dim).
    """
    n = len(gens)
    checkpoints = np.asarray(checkpoints, dtype=float)
    if checkpoints.size and (
        np.any(np.diff(checkpoints) <= 0)
        or checkpoints[0] < 0
        or checkpoints[-1] > spec.horizon + 1e-12
    ):
        raise ValueError("checkpoints must increase within [0, horizon]")

    if spec.process == "sgd":
        etas = _sgd_etas(spec)
        t_hat = np.concatenate([[0.0], np.cumsum(etas)])
        cp_steps = np.searchsorted(t_hat, checkpoints * (1 + 1e-12), side="right") - 1
        cp, terminal, _ = _engine.run_sgd_paths(
            ps=spec.potentials,
            etas=etas,
            theta0=spec.theta0_array,
            gens=gens,
            checkpoint_steps=cp_steps,
        )
        return cp, terminal

    if spec.process == "full_flow":
        traj_grid = checkpoints if checkpoints.size else np.array([spec.horizon])
        traj = simulate_full_flow(
            spec.potentials,
            spec.theta0_array,
            spec.horizon,
            grid=np.unique(np.concatenate([traj_grid, [spec.horizon]])),
            spec=spec.integrator,
        )
        cp_vals = traj.states[: checkpoints.size] if checkpoints.size else traj.states[:0]
        term = traj.states[-1]
        return (
            np.tile(cp_vals, (n, 1, 1)),
            np.tile(term, (n, 1)),
        )

    if spec.process == "switching_linear":
        mats = [np.asarray(g, dtype=float) for g in spec.matrices]
        n_states = len(mats)
        eta_eq = 1.0 / ((n_states - 1) * spec.lam)
        integ = spec.integrator or IntegratorSpec.rk4(min(0.01, eta_eq / 10.0))
        flow = _engine.MatrixFlow(mats)
        hazard = _engine.AnalyticHazard(Schedule.constant(eta_eq))
        theta0 = np.asarray(spec.theta0, dtype=float).reshape(-1)
    else:
        ps = spec.potentials
        n_states = ps.n
        if spec.process == "sgpc":
            eta_floor = spec.eta
        elif spec.process == "sgpd":
            _validate_decaying_schedule(spec.schedule, spec.horizon)
            eta_floor = float(rates.eta_at(spec.schedule, spec.horizon))
        else:
            _validate_decaying_schedule(spec.schedule, spec.horizon)
            eta_floor = float(rates.eta_at(spec.schedule, -np.log(spec.epsilon)))
        integ = _check_spec(ps, spec.integrator, eta_floor)
        flow = _engine.GradientFlow(ps)
        hazard = _hazard_for(
            spec.process, spec.eta, spec.schedule, spec.epsilon, spec.horizon
        )
        theta0 = spec.theta0_array

    res = _engine.run_paths(
        flow=flow,
        hazard=hazard,
        integrator=integ,
        n_states=n_states,
        theta0=theta0,
        t0=0.0,
        horizon=spec.horizon,
        grid=checkpoints,
        gens=gens,
        max_jumps=spec.max_jumps,
        rep_offset=rep_offset,
    )
    cp = res.grid_states if res.grid_states is not None else np.empty((n, 0, theta0.size))
    return cp, res.terminal
