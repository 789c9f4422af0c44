"""Ensembles and sample-cloud analysis.

Replicate seeding is explicit: replicate ``r`` of a run with master
seed ``m`` uses ``mix_seed(m, r)``, so any single replicate can be
reproduced in isolation and results cannot depend on how replicates are
distributed over threads.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from sgproc import dynamics
from sgproc.dynamics import RunSpec

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def mix_seed(master_seed: int, replicate: int) -> int:
    """Derive the seed of one replicate from the master seed.

    splitmix64 finalizer applied to ``master + (r+1)*gamma``: a full
    avalanche, so adjacent replicate indices give unrelated streams.
    """
    z = (int(master_seed) + (int(replicate) + 1) * _GAMMA) & _MASK64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & _MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & _MASK64
    z ^= z >> 31
    return z


@dataclass(frozen=True, eq=False)
class EnsembleResult:
    """Terminal and checkpoint states of n independent replicates."""

    replicate_count: int
    terminal_states: np.ndarray  # (n, dim)
    checkpoint_states: Dict[float, np.ndarray]  # time -> (n, dim)
    master_seed: int
    run_config_digest: str


def _run_chunks(
    spec: RunSpec,
    n: int,
    master_seed: int,
    checkpoints: np.ndarray,
    threads: int,
) -> Tuple[np.ndarray, np.ndarray]:
    if threads < 1:
        raise ValueError("threads must be >= 1")
    dim = (
        spec.theta0_array.size
        if spec.process != "switching_linear"
        else np.asarray(spec.theta0, dtype=float).reshape(-1).size
    )
    cp = np.empty((n, checkpoints.size, dim))
    terminal = np.empty((n, dim))

    def work(lo: int, hi: int):
        gens = [np.random.default_rng(mix_seed(master_seed, r)) for r in range(lo, hi)]
        c, t = dynamics.ensemble_paths(spec, gens, checkpoints, rep_offset=lo)
        cp[lo:hi] = c
        terminal[lo:hi] = t

    bounds = np.linspace(0, n, min(threads, n) + 1).astype(int)
    pairs = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    if len(pairs) <= 1:
        work(0, n)
    else:
        with ThreadPoolExecutor(max_workers=len(pairs)) as pool:
            futures = [pool.submit(work, lo, hi) for lo, hi in pairs]
            for f in futures:
                f.result()
    return cp, terminal


def run_ensemble(
    spec: RunSpec,
    n: int,
    master_seed: int,
    checkpoints=(),
    threads: int = 1,
) -> EnsembleResult:
    """Run ``n`` independent replicates of a simulation.

    Checkpoints are recorded along the way without perturbing the path;
    results are bitwise identical for any thread count.
    """
    if n < 1:
        raise ValueError("need at least one replicate")
    checkpoints = np.asarray(checkpoints, dtype=float)
    cp, terminal = _run_chunks(spec, n, master_seed, checkpoints, threads)
    return EnsembleResult(
        replicate_count=n,
        terminal_states=terminal,
        checkpoint_states={float(t): cp[:, j] for j, t in enumerate(checkpoints)},
        master_seed=int(master_seed),
        run_config_digest=spec.digest(),
    )


def ode_limit_curve(
    ps,
    etas,
    theta0,
    horizon: float,
    n: int,
    master_seed: int,
    grid_n: int = 1001,
    threads: int = 1,
) -> Tuple[np.ndarray, np.ndarray]:
    """Mean sup-distance to the averaged flow, per learning rate.

    For each ``eta`` the constant-rate process is run ``n`` times from
    ``theta0`` and compared on a shared grid against the deterministic
    averaged flow from the same point; smaller rates should hug the flow
    more tightly.
    """
    etas = np.asarray(etas, dtype=float).reshape(-1)
    grid = np.linspace(0.0, horizon, grid_n)
    ref = dynamics.simulate_full_flow(ps, theta0, horizon, grid=grid).states
    sups = np.empty(etas.size)
    for j, eta in enumerate(etas):
        spec = RunSpec(
            process="sgpc",
            potentials=ps,
            eta=float(eta),
            theta0=tuple(np.atleast_1d(theta0)),
            horizon=horizon,
        )
        cp, _ = _run_chunks(spec, n, master_seed, grid, threads)
        gaps = np.linalg.norm(cp - ref[None, :, :], axis=2)
        sups[j] = float(np.mean(np.max(gaps, axis=1)))
    return etas, sups


# ---------------------------------------------------------------------------
# distances


def wasserstein1_sorted(a, b) -> float:
    """W1 between two equal-size 1-d samples via the sorted coupling."""
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    if a.size != b.size or a.size == 0:
        raise ValueError("need two nonempty samples of equal size")
    return float(np.mean(np.abs(np.sort(a) - np.sort(b))))


@dataclass(frozen=True)
class TruncatedMetricSpec:
    """Ground cost ``min(1, |x - y|^q)`` with ``q in (0, 1]``."""

    q: float = 1.0
    max_points: int = 512

    def __post_init__(self):
        if not 0.0 < self.q <= 1.0:
            raise ValueError("q must lie in (0, 1]")


def wasserstein_truncated(a, b, spec: Optional[TruncatedMetricSpec] = None) -> float:
    """W1 under the truncated metric, by exact assignment.

    The truncated cost is not compatible with the sorted coupling, so
    this solves the assignment problem exactly; sample sizes above
    ``spec.max_points`` are refused (subsample first), the solver is
    cubic.
    """
    spec = spec or TruncatedMetricSpec()
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if b.ndim == 1:
        b = b[:, None]
    if a.shape != b.shape or a.shape[0] == 0:
        raise ValueError("need two nonempty samples of equal shape")
    if a.shape[0] > spec.max_points:
        raise ValueError(
            f"{a.shape[0]} points exceed the {spec.max_points}-point cap; "
            "subsample before calling"
        )
    dist = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
    cost = np.minimum(1.0, dist**spec.q)
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].mean())


# ---------------------------------------------------------------------------
# densities and summaries


def silverman_bandwidth(samples) -> float:
    """``1.06 sigma_hat n^(-1/5)`` (Gaussian reference rule)."""
    samples = np.asarray(samples, dtype=float).reshape(-1)
    if samples.size < 2:
        raise ValueError("need at least two samples")
    sigma = float(np.std(samples, ddof=1))
    if sigma == 0.0:
        raise ValueError("degenerate sample: zero variance")
    return 1.06 * sigma * samples.size ** (-0.2)


def kde(
    samples,
    grid,
    bandwidth: Optional[float] = None,
    boundary: Optional[Tuple[float, float]] = None,
) -> np.ndarray:
    """Gaussian kernel density on a grid, with optional reflection.

    With ``boundary = (lo, hi)`` the kernel mass leaking past either end
    is folded back in, so the density integrates to 1 over ``[lo, hi]``;
    grid points outside the boundary get density 0.
    """
    samples = np.asarray(samples, dtype=float).reshape(-1)
    grid = np.asarray(grid, dtype=float).reshape(-1)
    h = bandwidth if bandwidth is not None else silverman_bandwidth(samples)
    if not h > 0:
        raise ValueError("bandwidth must be positive")

    def gauss(x):
        z = (x[:, None] - samples[None, :]) / h
        return np.mean(np.exp(-0.5 * z * z), axis=1) / (h * np.sqrt(2.0 * np.pi))

    if boundary is None:
        return gauss(grid)
    lo, hi = float(boundary[0]), float(boundary[1])
    if not lo < hi:
        raise ValueError("boundary must be an increasing pair")
    if np.any(samples < lo) or np.any(samples > hi):
        raise ValueError("samples outside the reflection boundary")
    inside = (grid >= lo) & (grid <= hi)
    out = np.zeros_like(grid)
    g_in = grid[inside]
    out[inside] = (
        gauss(g_in) + gauss(2.0 * lo - g_in) + gauss(2.0 * hi - g_in)
    )
    return out


def summary_stats(samples) -> Tuple[float, float]:
    """Mean and unbiased variance of a 1-d sample."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 2 and samples.shape[1] == 1:
        samples = samples[:, 0]
    if samples.ndim != 1 or samples.size < 2:
        raise ValueError("need a 1-d sample with at least two points")
    return float(np.mean(samples)), float(np.var(samples, ddof=1))


def error_curve(result: EnsembleResult, target) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Mean and std of the distance to ``target`` at each checkpoint."""
    target = np.asarray(target, dtype=float).reshape(-1)
    times = np.array(sorted(result.checkpoint_states))
    means = np.empty(times.size)
    stds = np.empty(times.size)
    for j, t in enumerate(times):
        states = result.checkpoint_states[float(t)]
        if states.shape[1] != target.size:
            raise ValueError("target dimension does not match the states")
        d = np.linalg.norm(states - target[None, :], axis=1)
        means[j] = float(np.mean(d))
        stds[j] = float(np.std(d, ddof=1))
    return times, means, stds
