"""Replicate-parallel simulation core.

One event loop drives every process variant: replicates advance in
lockstep over their own jump/grid/horizon events, with all per-event
arithmetic expressed through elementwise numpy operations.  Each
replicate owns a block-buffered uniform stream, so a run over n
replicates consumes exactly the same variates per replicate as n
single runs, and results are bitwise independent of how replicates are
chunked across threads.

Uniform consumption per replicate, in order: one draw for the initial
index (unless forced), one per waiting time, one per state switch.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from sgproc import rates
from sgproc.index_process import ExplosionGuardError
from sgproc.potentials import PotentialSet, QuadraticPotential, _mat_apply

STREAM_BLOCK = 1024
_U_LO = 5e-324
_U_HI = 1.0 - 2.0 * rates.S_CLIFF


class UniformStreams:
    """Per-replicate uniform variates with block prefetch."""

    def __init__(self, gens: Sequence[np.random.Generator], block: int = STREAM_BLOCK):
        self._gens = list(gens)
        self._block = block
        n = len(self._gens)
        self._buf = np.empty((n, block))
        for r, g in enumerate(self._gens):
            self._buf[r] = g.random(block)
        self._pos = np.zeros(n, dtype=np.int64)

    def take(self, rows: np.ndarray) -> np.ndarray:
        """One uniform for each replicate in ``rows`` (no duplicates)."""
        pos = self._pos[rows]
        if np.any(pos >= self._block):
            for r in rows[pos >= self._block]:
                self._buf[r] = self._gens[r].random(self._block)
                self._pos[r] = 0
            pos = self._pos[rows]
        u = self._buf[rows, pos]
        self._pos[rows] = pos + 1
        return u


def _clamp_u(u: np.ndarray) -> np.ndarray:
    """Keep uniforms inside the quantile's admissible open interval."""
    return np.clip(u, _U_LO, _U_HI)


def _index_from_uniform(u: np.ndarray, n_states: int) -> np.ndarray:
    return np.minimum((u * n_states).astype(np.int64), n_states - 1)


def _shifted_state(idx: np.ndarray, u: np.ndarray, n_states: int) -> np.ndarray:
    """Uniform over the other states, as an index shift."""
    shift = 1 + np.minimum((u * (n_states - 1)).astype(np.int64), n_states - 2)
    return (idx + shift) % n_states


# ---------------------------------------------------------------------------
# hazard models


class AnalyticHazard:
    """Closed-form waiting-time quantiles (constant/rational/exponential)."""

    def __init__(self, schedule: rates.Schedule):
        if schedule.kind == "custom":
            raise ValueError("use TabulatedHazard for custom schedules")
        self.schedule = schedule

    def quantile(self, u: np.ndarray, t0: np.ndarray) -> np.ndarray:
        return rates._quantile_named(self.schedule, u, t0)


class TabulatedHazard:
    """Waiting-time quantiles from a tabulated cumulative hazard.

    The cumulative hazard over ``[t_lo, t_hi]`` is precomputed with
    per-interval Simpson on a dense uniform grid and inverted by linear
    interpolation; waits reaching past ``t_hi`` come back as inf (the
    caller truncates at the horizon anyway).
    """

    def __init__(self, hazard_fn, t_lo: float, t_hi: float, n_intervals: int = 1 << 20):
        if not t_hi > t_lo:
            raise ValueError("empty tabulation window")
        t = np.linspace(t_lo, t_hi, n_intervals + 1)
        mid = 0.5 * (t[:-1] + t[1:])
        f = np.asarray(hazard_fn(t), dtype=float)
        fm = np.asarray(hazard_fn(mid), dtype=float)
        if np.any(f <= 0) or np.any(fm <= 0):
            raise ValueError("hazard must stay positive on the window")
        h = (t_hi - t_lo) / n_intervals
        inc = (h / 6.0) * (f[:-1] + 4.0 * fm + f[1:])
        cum = np.concatenate([[0.0], np.cumsum(inc)])
        self._t = t
        self._cum = cum

    def quantile(self, u: np.ndarray, t0: np.ndarray) -> np.ndarray:
        ell = -np.log1p(-u)
        base = np.interp(t0, self._t, self._cum)
        target = base + ell
        d = np.where(
            target > self._cum[-1],
            np.inf,
            np.interp(target, self._cum, self._t) - t0,
        )
        return np.maximum(d, 0.0)


# ---------------------------------------------------------------------------
# flow models


class GradientFlow:
    """Gradient descent on the members of a potential set."""

    def __init__(self, ps: PotentialSet):
        self.ps = ps
        self.exact_ok = ps.all_quadratic

    def rhs_rows(self, i: int, x: np.ndarray) -> np.ndarray:
        return -self.ps.members[i].gradient_rows(x)

    def exact_rows(self, i: int, x: np.ndarray, d) -> np.ndarray:
        return self.ps.members[i].flow_rows(x, d)

    def member(self, i: int):
        return self.ps.members[i]


class MatrixFlow:
    """Linear drift ``x' = G_i x`` (no potential behind it)."""

    exact_ok = False

    def __init__(self, matrices: Sequence[np.ndarray]):
        self.mats_t = [np.asarray(g, dtype=float).T.copy() for g in matrices]

    def rhs_rows(self, i: int, x: np.ndarray) -> np.ndarray:
        return _mat_apply(x, self.mats_t[i])


# ---------------------------------------------------------------------------
# segment integration


def advance_rows(flow, spec, idx: np.ndarray, x: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Move each row forward by its own duration under its own member."""
    out = np.empty_like(x)
    for i in np.unique(idx):
        mask = idx == i
        out[mask] = _advance_group(flow, spec, int(i), x[mask], d[mask])
    return out


def _advance_group(flow, spec, i: int, x: np.ndarray, d: np.ndarray) -> np.ndarray:
    if spec.kind == "exact":
        return flow.exact_rows(i, x, d)
    h = spec.step
    n_steps = np.maximum(np.ceil(d / h).astype(np.int64), 1)
    hs = d / n_steps
    x = x.copy()
    for s in range(int(n_steps.max())):
        mask = n_steps > s
        x[mask] = _one_step(flow, spec, i, x[mask], hs[mask])
    return x


def _one_step(flow, spec, i: int, x: np.ndarray, h: np.ndarray) -> np.ndarray:
    hcol = h[:, None]
    if spec.kind == "euler":
        return x + hcol * flow.rhs_rows(i, x)
    if spec.kind == "rk4":
        k1 = flow.rhs_rows(i, x)
        k2 = flow.rhs_rows(i, x + 0.5 * hcol * k1)
        k3 = flow.rhs_rows(i, x + 0.5 * hcol * k2)
        k4 = flow.rhs_rows(i, x + hcol * k3)
        return x + (hcol / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if spec.kind == "implicit_euler":
        member = flow.member(i)
        if not isinstance(member, QuadraticPotential):
            raise ValueError("implicit Euler needs a quadratic potential")
        a, b = member.a_mat, member.b_vec
        k = a.shape[0]
        if k == 1:
            return (x + hcol * b[0]) / (1.0 + hcol * a[0, 0])
        out = np.empty_like(x)
        eye = np.eye(k)
        for r in range(x.shape[0]):
            out[r] = np.linalg.solve(eye + h[r] * a, x[r] + h[r] * b)
        return out
    raise ValueError(f"unknown integrator kind {spec.kind!r}")


# ---------------------------------------------------------------------------
# event loop


@dataclass
class EngineResult:
    grid_states: Optional[np.ndarray]  # (n, len(grid), k)
    terminal: np.ndarray  # (n, k)
    final_state: np.ndarray  # (n,)
    jump_counts: np.ndarray  # (n,)
    jump_times: Optional[List[list]]
    jump_states: Optional[List[list]]
    initial_states: np.ndarray  # (n,)


def run_paths(
    *,
    flow,
    hazard,
    integrator,
    n_states: int,
    theta0: np.ndarray,
    t0: float,
    horizon: float,
    grid: np.ndarray,
    gens: Sequence[np.random.Generator],
    max_jumps: int,
    record_skeleton: bool = False,
    initial_state: Optional[int] = None,
    rep_offset: int = 0,
    stream_block: int = STREAM_BLOCK,
) -> EngineResult:
    n = len(gens)
    k_dim = theta0.size
    n_grid = grid.size
    streams = UniformStreams(gens, block=stream_block)
    all_rows = np.arange(n)

    t_anchor = np.full(n, float(t0))
    x = np.tile(np.asarray(theta0, dtype=float), (n, 1))
    if initial_state is None:
        idx = _index_from_uniform(streams.take(all_rows), n_states)
    else:
        idx = np.full(n, int(initial_state), dtype=np.int64)
    u = _clamp_u(streams.take(all_rows))
    next_jump = np.maximum(
        _next_jump_time(hazard, u, t_anchor), np.nextafter(t_anchor, np.inf)
    )

    grid_ptr = np.zeros(n, dtype=np.int64)
    jump_counts = np.zeros(n, dtype=np.int64)
    active = np.ones(n, dtype=bool)
    grid_states = np.empty((n, n_grid, k_dim)) if n_grid else None
    terminal = np.empty((n, k_dim))
    initial_states = idx.copy()
    jt: Optional[List[list]] = [[] for _ in range(n)] if record_skeleton else None
    js: Optional[List[list]] = [[] for _ in range(n)] if record_skeleton else None

    while True:
        rows = np.flatnonzero(active)
        if rows.size == 0:
            break
        ptr = grid_ptr[rows]
        if n_grid:
            tg = np.where(ptr < n_grid, grid[np.minimum(ptr, n_grid - 1)], np.inf)
        else:
            tg = np.full(rows.size, np.inf)
        tj = next_jump[rows]
        te = np.minimum(np.minimum(tj, tg), horizon)

        is_jump = tj <= te
        jrows = rows[is_jump]
        if jrows.size:
            d = next_jump[jrows] - t_anchor[jrows]
            x[jrows] = advance_rows(flow, integrator, idx[jrows], x[jrows], d)
            t_anchor[jrows] = next_jump[jrows]
            jump_counts[jrows] += 1
            if np.any(jump_counts[jrows] > max_jumps):
                bad = int(jrows[np.argmax(jump_counts[jrows] > max_jumps)])
                raise ExplosionGuardError(
                    f"replicate {bad + rep_offset}: more than {max_jumps} jumps "
                    "before the horizon; raise max_jumps or use a larger "
                    "learning rate"
                )
            u_state = streams.take(jrows)
            idx[jrows] = _shifted_state(idx[jrows], u_state, n_states)
            if record_skeleton:
                for r, tv, sv in zip(jrows, t_anchor[jrows], idx[jrows]):
                    jt[r].append(float(tv))
                    js[r].append(int(sv))
            u_wait = _clamp_u(streams.take(jrows))
            nj = _next_jump_time(hazard, u_wait, t_anchor[jrows])
            # strict progress even if the waiting time underflows
            next_jump[jrows] = np.maximum(nj, np.nextafter(t_anchor[jrows], np.inf))

        is_grid = tg <= te
        grows = rows[is_grid]
        if grows.size:
            d = te[is_grid] - t_anchor[grows]
            vals = advance_rows(flow, integrator, idx[grows], x[grows], d)
            grid_states[grows, grid_ptr[grows]] = vals
            grid_ptr[grows] += 1

        done = rows[(te == horizon) & ~is_jump & ~is_grid]
        if done.size:
            d = horizon - t_anchor[done]
            terminal[done] = advance_rows(flow, integrator, idx[done], x[done], d)
            active[done] = False

    return EngineResult(
        grid_states=grid_states,
        terminal=terminal,
        final_state=idx,
        jump_counts=jump_counts,
        jump_times=jt,
        jump_states=js,
        initial_states=initial_states,
    )


def _next_jump_time(hazard, u: np.ndarray, t_now: np.ndarray) -> np.ndarray:
    return t_now + hazard.quantile(u, t_now)


# ---------------------------------------------------------------------------
# discrete recursion (stochastic gradient descent)


def run_sgd_paths(
    *,
    ps: PotentialSet,
    etas: np.ndarray,
    theta0: np.ndarray,
    gens: Sequence[np.random.Generator],
    checkpoint_steps: np.ndarray,
    record_all: bool = False,
    forced_indices: Optional[np.ndarray] = None,
    stream_block: int = STREAM_BLOCK,
):
    """Vectorised SGD over replicates; one uniform per step per replicate.

    Returns ``(checkpoint_states, terminal, iterates)`` where
    ``checkpoint_states`` is (n, len(checkpoint_steps), k) and
    ``iterates`` (n, steps+1, k) is only filled when ``record_all``.
    """
    n = len(gens)
    steps = etas.size
    k_dim = theta0.size
    n_states = ps.n
    streams = UniformStreams(gens, block=stream_block)
    all_rows = np.arange(n)
    x = np.tile(np.asarray(theta0, dtype=float), (n, 1))
    cp_states = np.empty((n, checkpoint_steps.size, k_dim))
    iterates = np.empty((n, steps + 1, k_dim)) if record_all else None
    if record_all:
        iterates[:, 0] = x
    cp_lookup = {int(s): j for j, s in enumerate(checkpoint_steps)}
    if 0 in cp_lookup:
        cp_states[:, cp_lookup[0]] = x
    for step in range(steps):
        if forced_indices is None:
            idx = _index_from_uniform(streams.take(all_rows), n_states)
        else:
            idx = np.full(n, int(forced_indices[step]), dtype=np.int64)
        eta_k = etas[step]
        for i in np.unique(idx):
            mask = idx == i
            x[mask] = x[mask] - eta_k * ps.members[int(i)].gradient_rows(x[mask])
        j = cp_lookup.get(step + 1)
        if j is not None:
            cp_states[:, j] = x
        if record_all:
            iterates[:, step + 1] = x
    return cp_states, x, iterates
