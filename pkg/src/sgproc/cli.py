"""Command-line front end.

Subcommands: simulate | ensemble | kernel-check | ode-limit | table1 |
densities | error-curves.  Configuration comes from a small sectioned
key-value file (see README); presets bundle the standard benchmark
problems.  Every output directory receives a ``metadata.json`` carrying
the resolved configuration, master seed and package version, enough to
regenerate all CSVs bitwise.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

import sgproc
from sgproc import analysis, dynamics, index_process, potentials, rates
from sgproc.dynamics import IntegratorSpec, RunSpec, Trajectory
from sgproc.rates import NumericalFailure, Schedule


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# presets


def preset_potentials(name: str):
    """Benchmark potential sets addressable from config files."""
    if name == "example6_1":
        # three quadratic wells at -2, 1.5, 2; averaged minimiser 0.5
        return potentials.from_least_squares(
            [
                (np.array([[1.0]]), np.array([-2.0])),
                (np.array([[1.0]]), np.array([1.5])),
                (np.array([[1.0]]), np.array([2.0])),
            ]
        )
    if name == "symmetric_pair":
        # two wells at +1 and -1; averaged minimiser 0
        return potentials.from_least_squares(
            [
                (np.array([[1.0]]), np.array([1.0])),
                (np.array([[1.0]]), np.array([-1.0])),
            ]
        )
    raise ConfigError(f"unknown preset {name!r}")


def population_matrices():
    """Two-environment bet-hedging demo: growth favouring one phenotype
    per environment plus slow phenotype switching."""
    g1 = np.array([[0.9, 0.1], [0.1, 0.1]])
    g2 = np.array([[0.1, 0.1], [0.1, 0.9]])
    return (g1, g2)


# ---------------------------------------------------------------------------
# config file parsing (line-referenced errors)

_SECTIONS = ("problem", "process", "schedule", "integrator", "run", "output")

_SCHEMA = {
    ("problem", "preset"): "str",
    ("problem", "blocks"): "strs",
    ("problem", "minima"): "floats",
    ("problem", "curvatures"): "floats",
    ("process", "kind"): "str",
    ("process", "epsilon"): "float",
    ("process", "lam"): "float",
    ("schedule", "kind"): "str",
    ("schedule", "eta"): "float",
    ("schedule", "a"): "float",
    ("schedule", "b"): "float",
    ("integrator", "kind"): "str",
    ("integrator", "step"): "float",
    ("run", "theta0"): "floats",
    ("run", "horizon"): "float",
    ("run", "grid"): "grid",
    ("run", "replicates"): "int",
    ("run", "master_seed"): "int",
    ("run", "checkpoints"): "floats",
    ("run", "max_jumps"): "int",
    ("output", "dir"): "str",
}

_PROCESS_KINDS = ("sgd", "sgpc", "sgpd", "full_flow", "auxiliary", "switching_linear")


def _convert(kind: str, raw: str, line: int, key: str):
    try:
        if kind == "str":
            return raw
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "floats":
            return tuple(float(x) for x in raw.split(",") if x.strip() != "")
        if kind == "strs":
            return tuple(x.strip() for x in raw.split(",") if x.strip() != "")
        if kind == "grid":
            parts = [x for x in raw.split(",") if x.strip() != ""]
            if len(parts) == 1 and "." not in parts[0]:
                return int(parts[0])
            return tuple(float(x) for x in parts)
    except ValueError:
        pass
    raise ConfigError(f"line {line}: cannot parse value for {key!r}: {raw!r}")
    # unreachable


def parse_config_text(text: str) -> dict:
    """Sectioned ``key = value`` format; unknown keys are errors."""
    values = {}
    section = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        if not s or s.startswith("#"):
            continue
        if s.startswith("["):
            if not s.endswith("]"):
                raise ConfigError(f"line {line_no}: malformed section header {s!r}")
            section = s[1:-1].strip()
            if section not in _SECTIONS:
                raise ConfigError(f"line {line_no}: unknown section [{section}]")
            continue
        if "=" not in s:
            raise ConfigError(f"line {line_no}: expected 'key = value', got {s!r}")
        if section is None:
            raise ConfigError(f"line {line_no}: key outside any section")
        key, raw_val = (p.strip() for p in s.split("=", 1))
        if (section, key) not in _SCHEMA:
            raise ConfigError(f"line {line_no}: unknown key {key!r} in [{section}]")
        if (section, key) in values:
            raise ConfigError(f"line {line_no}: duplicate key {key!r} in [{section}]")
        values[(section, key)] = _convert(_SCHEMA[(section, key)], raw_val, line_no, key)
    return values


@dataclass
class RunConfig:
    """Resolved configuration of one command invocation."""

    process: str = "sgpc"
    potential_set: Optional[potentials.PotentialSet] = None
    matrices: Optional[tuple] = None
    schedule: Optional[Schedule] = None
    integrator: Optional[IntegratorSpec] = None
    theta0: tuple = (-1.5,)
    horizon: float = 10.0
    grid: object = 201
    replicates: int = 1000
    master_seed: int = 1
    checkpoints: tuple = ()
    epsilon: Optional[float] = None
    lam: Optional[float] = None
    max_jumps: int = dynamics.DEFAULT_MAX_JUMPS
    output_dir: str = "out"
    threads: int = 1
    describe: dict = field(default_factory=dict)


def _build_schedule(values: dict) -> Optional[Schedule]:
    kind = values.get(("schedule", "kind"))
    if kind is None:
        return None
    try:
        if kind == "constant":
            if ("schedule", "eta") not in values:
                raise ConfigError("[schedule] constant needs eta")
            return Schedule.constant(values[("schedule", "eta")])
        if kind in ("rational", "exponential"):
            if ("schedule", "a") not in values or ("schedule", "b") not in values:
                raise ConfigError(f"[schedule] {kind} needs a and b")
            maker = Schedule.rational if kind == "rational" else Schedule.exponential
            return maker(values[("schedule", "a")], values[("schedule", "b")])
    except ValueError as exc:
        raise ConfigError(f"[schedule] {exc}") from exc
    raise ConfigError(f"[schedule] unknown kind {kind!r}")


def _resolve_problem(values: dict) -> Optional[potentials.PotentialSet]:
    """Potential set from [problem] keys, or None if the section is empty."""
    preset = values.get(("problem", "preset"))
    if preset is not None and preset != "population":
        return preset_potentials(preset)
    if ("problem", "blocks") in values:
        try:
            return potentials.load_least_squares_csv(values[("problem", "blocks")])
        except (OSError, ValueError) as exc:
            raise ConfigError(f"[problem] blocks: {exc}") from exc
    if ("problem", "minima") in values:
        minima = values[("problem", "minima")]
        curvatures = values.get(("problem", "curvatures"), tuple(1.0 for _ in minima))
        if len(curvatures) != len(minima):
            raise ConfigError("[problem] curvatures must match minima in length")
        if any(c <= 0 for c in curvatures):
            raise ConfigError("[problem] curvatures must be positive")
        blocks = [
            (np.array([[np.sqrt(c)]]), np.array([np.sqrt(c) * m]))
            for m, c in zip(minima, curvatures)
        ]
        return potentials.from_least_squares(blocks)
    return None


def resolve_config(values: dict, args) -> RunConfig:
    cfg = RunConfig()
    cfg.process = values.get(("process", "kind"), "sgpc")
    if cfg.process not in _PROCESS_KINDS:
        raise ConfigError(f"[process] unknown kind {cfg.process!r}")

    if cfg.process == "switching_linear":
        cfg.matrices = population_matrices()
        cfg.theta0 = (1.0, 1.0)
        cfg.lam = values.get(("process", "lam"), 1.0)
    if values.get(("problem", "preset")) == "population":
        if cfg.process != "switching_linear":
            raise ConfigError("the population preset needs process switching_linear")
    else:
        cfg.potential_set = _resolve_problem(values)
        if cfg.potential_set is None and cfg.process != "switching_linear":
            raise ConfigError("[problem] needs a preset, blocks or minima")

    cfg.schedule = _build_schedule(values)
    ikind = values.get(("integrator", "kind"))
    if ikind is not None:
        try:
            cfg.integrator = IntegratorSpec(
                kind=ikind, step=values.get(("integrator", "step"))
            )
        except ValueError as exc:
            raise ConfigError(f"[integrator] {exc}") from exc

    if ("run", "theta0") in values:
        cfg.theta0 = values[("run", "theta0")]
    cfg.horizon = values.get(("run", "horizon"), cfg.horizon)
    cfg.grid = values.get(("run", "grid"), cfg.grid)
    cfg.replicates = values.get(("run", "replicates"), cfg.replicates)
    cfg.master_seed = values.get(("run", "master_seed"), cfg.master_seed)
    cfg.checkpoints = values.get(("run", "checkpoints"), ())
    cfg.epsilon = values.get(("process", "epsilon"))
    cfg.max_jumps = values.get(("run", "max_jumps"), cfg.max_jumps)
    if cfg.max_jumps < 1:
        raise ConfigError("[run] max_jumps must be >= 1")
    cfg.output_dir = values.get(("output", "dir"), cfg.output_dir)

    # command-line overrides
    if getattr(args, "seed", None) is not None:
        cfg.master_seed = args.seed
    if getattr(args, "replicates", None) is not None:
        cfg.replicates = args.replicates
    if getattr(args, "out", None) is not None:
        cfg.output_dir = args.out
    cfg.threads = _resolve_threads(getattr(args, "threads", 1))

    _check_compat(cfg)
    cfg.describe = {
        k[0] + "." + k[1]: (list(v) if isinstance(v, tuple) else v)
        for k, v in values.items()
    }
    return cfg


def _resolve_threads(threads) -> int:
    if threads is None:
        return 1
    threads = int(threads)
    if threads == 0:
        return os.cpu_count() or 1
    if threads < 0:
        raise ConfigError("--threads must be >= 0")
    return threads


def _check_compat(cfg: RunConfig) -> None:
    if cfg.process == "sgpc":
        if cfg.schedule is None or cfg.schedule.kind != "constant":
            raise ConfigError("sgpc needs a constant schedule ([schedule] kind = constant)")
    if cfg.process in ("sgpd", "auxiliary"):
        if cfg.schedule is None:
            raise ConfigError(f"{cfg.process} needs a schedule section")
        if cfg.schedule.kind == "constant":
            warnings.warn(
                "sgpd with a constant schedule is the constant-rate process; "
                "running it as such",
                stacklevel=2,
            )
    if cfg.process == "auxiliary":
        if cfg.epsilon is None or not 0 < cfg.epsilon < 1:
            raise ConfigError("auxiliary needs [process] epsilon in (0, 1)")
    if cfg.process == "sgd" and cfg.schedule is None:
        raise ConfigError("sgd needs a schedule section")


def load_config(path, args) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return resolve_config(parse_config_text(text), args)


# ---------------------------------------------------------------------------
# output helpers (all writes happen on the calling thread)


def _outdir(cfg_dir: str) -> Path:
    p = Path(cfg_dir)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [f"{v:.17g}" if isinstance(v, float) else v for v in row]
            )


def _write_metadata(outdir: Path, command: str, cfg: Optional[RunConfig], extra=None):
    meta = {"command": command, "version": sgproc.__version__}
    if cfg is not None:
        meta["config"] = cfg.describe
        meta["master_seed"] = cfg.master_seed
        meta["replicates"] = cfg.replicates
        meta["threads"] = cfg.threads
        meta["process"] = cfg.process
        meta["output_dir"] = str(cfg.output_dir)
    if extra:
        meta.update(extra)
    with open(outdir / "metadata.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)


def _runspec_from_config(cfg: RunConfig, steps: Optional[int] = None) -> RunSpec:
    kwargs = dict(
        process=cfg.process,
        theta0=tuple(cfg.theta0),
        horizon=cfg.horizon,
        integrator=cfg.integrator,
        max_jumps=cfg.max_jumps,
    )
    if cfg.process == "switching_linear":
        kwargs.update(matrices=cfg.matrices, lam=cfg.lam)
    else:
        kwargs.update(potentials=cfg.potential_set)
    if cfg.process == "sgpc":
        kwargs.update(eta=cfg.schedule.eta0)
    elif cfg.process in ("sgpd", "auxiliary"):
        if cfg.schedule.kind == "constant":
            kwargs.update(process="sgpc", eta=cfg.schedule.eta0)
        else:
            kwargs.update(schedule=cfg.schedule)
            if cfg.process == "auxiliary":
                kwargs.update(epsilon=cfg.epsilon)
    elif cfg.process == "sgd":
        kwargs.update(schedule=cfg.schedule, steps=steps or _sgd_steps(cfg))
    return RunSpec(**kwargs)


def _sgd_steps(cfg: RunConfig) -> int:
    """Steps whose cumulative schedule time fills the horizon."""
    t_hat = 0.0
    steps = 0
    while t_hat < cfg.horizon - 1e-12:
        t_hat += float(rates.eta_at(cfg.schedule, t_hat))
        steps += 1
        if steps > 50_000_000:
            raise NumericalFailure("schedule decays too fast to fill the horizon")
    return steps


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    cfg = load_config(args.config, args)
    outdir = _outdir(cfg.output_dir)
    rng = analysis.mix_seed(cfg.master_seed, 0)
    ps = cfg.potential_set
    if cfg.process == "sgpc" or (
        cfg.process in ("sgpd", "auxiliary") and cfg.schedule.kind == "constant"
    ):
        traj = dynamics.simulate_sgpc(
            ps, cfg.schedule.eta0, cfg.theta0, cfg.horizon,
            grid=cfg.grid, spec=cfg.integrator, rng=rng, max_jumps=cfg.max_jumps,
        )
    elif cfg.process == "sgpd":
        traj = dynamics.simulate_sgpd(
            ps, cfg.schedule, cfg.theta0, cfg.horizon,
            grid=cfg.grid, spec=cfg.integrator, rng=rng, max_jumps=cfg.max_jumps,
        )
    elif cfg.process == "auxiliary":
        traj = dynamics.simulate_auxiliary(
            ps, cfg.schedule, cfg.epsilon, cfg.theta0, cfg.horizon,
            grid=cfg.grid, spec=cfg.integrator, rng=rng, max_jumps=cfg.max_jumps,
        )
    elif cfg.process == "full_flow":
        traj = dynamics.simulate_full_flow(
            ps, cfg.theta0, cfg.horizon, grid=cfg.grid, spec=cfg.integrator
        )
    elif cfg.process == "switching_linear":
        traj = dynamics.simulate_switching_linear(
            cfg.matrices, cfg.lam, cfg.theta0, cfg.horizon,
            grid=cfg.grid, rng=rng, spec=cfg.integrator, max_jumps=cfg.max_jumps,
        )
    else:  # sgd: iterates against their cumulative schedule times
        steps = _sgd_steps(cfg)
        etas = dynamics.sgd_schedule_from_continuous(cfg.schedule, steps)
        iterates = dynamics.run_sgd(ps, etas, cfg.theta0, rng=rng)
        t_hat = np.concatenate([[0.0], np.cumsum(etas)])
        traj = Trajectory(grid=t_hat, states=iterates)
    dynamics.trajectory_to_csv(traj, outdir / "trajectory.csv")
    _write_metadata(outdir, "simulate", cfg, {"replicate": 0})
    return 0


def cmd_ensemble(args) -> int:
    cfg = load_config(args.config, args)
    outdir = _outdir(cfg.output_dir)
    spec = _runspec_from_config(cfg)
    result = analysis.run_ensemble(
        spec, cfg.replicates, cfg.master_seed,
        checkpoints=cfg.checkpoints, threads=cfg.threads,
    )
    term = result.terminal_states
    _write_csv(
        outdir / "terminal.csv",
        [f"x{j}" for j in range(term.shape[1])],
        [[float(v) for v in row] for row in term],
    )
    extra = {"run_config_digest": result.run_config_digest}
    stats = {}
    for j in range(term.shape[1]):
        mean, var = analysis.summary_stats(term[:, j])
        stats[f"x{j}"] = {"mean": mean, "variance": var}
    if term.shape[1] == 1:
        bw = analysis.silverman_bandwidth(term[:, 0])
        lo, hi = float(term.min()), float(term.max())
        pad = 3.0 * bw
        grid = np.linspace(lo - pad, hi + pad, 512)
        dens = analysis.kde(term[:, 0], grid, bandwidth=bw)
        _write_csv(
            outdir / "kde.csv", ["x", "density"],
            [[float(x), float(d)] for x, d in zip(grid, dens)],
        )
        extra["kde_bandwidth"] = bw
    with open(outdir / "stats.json", "w") as fh:
        json.dump(stats, fh, indent=2, sort_keys=True)
    _write_metadata(outdir, "ensemble", cfg, extra)
    return 0


def cmd_kernel_check(args) -> int:
    if args.lam is None and args.schedule_kind is None:
        raise ConfigError("kernel-check needs --lam or --schedule-kind")
    n_states = args.n_states
    if n_states < 2:
        raise ConfigError("--n-states must be >= 2")
    times = tuple(float(t) for t in args.times.split(","))
    if any(t < 0 for t in times):
        raise ConfigError("--times must be nonnegative")
    t0 = 0.0
    if args.lam is not None:
        if args.lam <= 0:
            raise ConfigError("--lam must be positive")
        rate = float(args.lam)
        schedule = index_process._as_schedule(rate, n_states)
    else:
        try:
            if args.schedule_kind == "constant":
                schedule = Schedule.constant(args.eta if args.eta else 1.0)
            elif args.schedule_kind == "rational":
                schedule = Schedule.rational(args.a, args.b)
            elif args.schedule_kind == "exponential":
                schedule = Schedule.exponential(args.a, args.b)
            else:
                raise ConfigError(
                    f"unknown --schedule-kind {args.schedule_kind!r}"
                )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        rate = schedule
    seed = args.seed if args.seed is not None else 1
    n_skeletons = args.skeletons
    horizon = max(times)
    rng = np.random.default_rng(analysis.mix_seed(seed, 0))
    skeletons = [
        index_process.sample_jump_skeleton(
            rate, n_states, t0, horizon, rng, initial_state=0
        )
        for _ in range(n_skeletons)
    ]
    rows = []
    h = 1e-5
    for t in times:
        kern = index_process.kernel_inhomogeneous(schedule, n_states, t0, t, 0)
        emp = index_process.occupancy_histogram(skeletons, t)
        tv = 0.5 * float(np.sum(np.abs(kern - emp)))
        if t - h >= t0:
            resid = index_process.forward_equation_residual(
                schedule, n_states, t0, t, h=h
            )
        else:
            resid = float("nan")
        rows.append([float(t), float(resid), float(tv)])
    outdir = _outdir(args.out or "out")
    _write_csv(outdir / "kernel_check.csv", ["t", "residual", "tv_gap"], rows)
    _write_metadata(
        outdir, "kernel-check", None,
        {
            "n_states": n_states,
            "skeletons": n_skeletons,
            "master_seed": seed,
            "lam": args.lam,
            "schedule_kind": args.schedule_kind,
            "times": list(times),
        },
    )
    return 0


def cmd_ode_limit(args) -> int:
    etas = tuple(float(x) for x in args.etas.split(","))
    if any(e <= 0 for e in etas):
        raise ConfigError("--etas must be positive")
    if any(b >= a for a, b in zip(etas, etas[1:])) and len(etas) > 1:
        raise ConfigError("--etas must be descending")
    cfg = RunConfig(theta0=(0.8,))
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        values = parse_config_text(text)
        # only the problem, run and output sections matter here
        ps = _resolve_problem(values)
        if ps is None:
            raise ConfigError("[problem] needs a preset, blocks or minima")
        cfg.potential_set = ps
        cfg.theta0 = values.get(("run", "theta0"), cfg.theta0)
        cfg.horizon = values.get(("run", "horizon"), cfg.horizon)
        cfg.replicates = values.get(("run", "replicates"), cfg.replicates)
        cfg.master_seed = values.get(("run", "master_seed"), cfg.master_seed)
        cfg.output_dir = values.get(("output", "dir"), cfg.output_dir)
        cfg.describe = {
            k[0] + "." + k[1]: (list(v) if isinstance(v, tuple) else v)
            for k, v in values.items()
        }
    else:
        cfg.potential_set = preset_potentials("symmetric_pair")
    if args.seed is not None:
        cfg.master_seed = args.seed
    if args.replicates is not None:
        cfg.replicates = args.replicates
    if args.out is not None:
        cfg.output_dir = args.out
    cfg.threads = _resolve_threads(args.threads)
    ps = cfg.potential_set
    _, sups = analysis.ode_limit_curve(
        ps, etas, cfg.theta0, cfg.horizon,
        n=cfg.replicates, master_seed=cfg.master_seed,
        grid_n=1001, threads=cfg.threads,
    )
    outdir = _outdir(cfg.output_dir)
    _write_csv(
        outdir / "ode_limit.csv", ["eta", "mean_sup_distance"],
        [[float(e), float(s)] for e, s in zip(etas, sups)],
    )
    _write_metadata(outdir, "ode-limit", cfg, {"etas": list(etas), "grid_n": 1001})
    return 0


def cmd_table1(args) -> int:
    n = args.replicates if args.replicates is not None else 10_000
    seed = args.seed if args.seed is not None else 1
    threads = _resolve_threads(args.threads)
    ps = preset_potentials("example6_1")
    horizon = 10.0
    rows = []
    stats = {}
    for eta in (0.1, 0.01, 0.001):
        spec_c = RunSpec(
            process="sgpc", potentials=ps, eta=eta, theta0=(-1.5,), horizon=horizon
        )
        res_c = analysis.run_ensemble(spec_c, n, seed, threads=threads)
        _, var_c = analysis.summary_stats(res_c.terminal_states)
        spec_d = RunSpec(
            process="sgd", potentials=ps, eta=eta, theta0=(-1.5,),
            horizon=horizon, steps=round(horizon / eta),
        )
        res_d = analysis.run_ensemble(spec_d, n, seed + 1, threads=threads)
        _, var_d = analysis.summary_stats(res_d.terminal_states)
        rows.append(["sgpc", float(eta), float(var_c), float(var_c / eta)])
        rows.append(["sgd", float(eta), float(var_d), float(var_d / eta)])
        stats[f"eta={eta:g}"] = {"sgpc_variance": var_c, "sgd_variance": var_d}
    outdir = _outdir(args.out or "out")
    _write_csv(
        outdir / "table1.csv", ["process", "eta", "variance", "variance_over_eta"], rows
    )
    with open(outdir / "stats.json", "w") as fh:
        json.dump(stats, fh, indent=2, sort_keys=True)
    _write_metadata(
        outdir, "table1", None,
        {"replicates": n, "master_seed": seed, "threads": threads,
         "theta0": [-1.5], "horizon": horizon},
    )
    return 0


_DENSITY_TIMES = (0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 10.0)


def cmd_densities(args) -> int:
    n = args.replicates if args.replicates is not None else 10_000
    seed = args.seed if args.seed is not None else 1
    threads = _resolve_threads(args.threads)
    ps = preset_potentials("example6_1")
    boundary = (-2.0, 2.0)
    grid = np.linspace(boundary[0], boundary[1], 401)
    outdir = _outdir(args.out or "out")
    bandwidths = {}
    for label, schedule in (
        ("exponential", Schedule.exponential(1.0, 1.0)),
        ("rational", Schedule.rational(100.0, 1.0)),
    ):
        spec = RunSpec(
            process="sgpd", potentials=ps, schedule=schedule,
            theta0=(-1.5,), horizon=10.0,
        )
        res = analysis.run_ensemble(
            spec, n, seed, checkpoints=_DENSITY_TIMES, threads=threads
        )
        for t in _DENSITY_TIMES:
            samples = np.clip(res.checkpoint_states[t][:, 0], *boundary)
            bw = analysis.silverman_bandwidth(samples)
            dens = analysis.kde(samples, grid, bandwidth=bw, boundary=boundary)
            name = f"density_{label}_t{t:g}.csv"
            _write_csv(
                outdir / name, ["x", "density"],
                [[float(x), float(d)] for x, d in zip(grid, dens)],
            )
            bandwidths[name] = bw
    _write_metadata(
        outdir, "densities", None,
        {"replicates": n, "master_seed": seed, "threads": threads,
         "times": list(_DENSITY_TIMES), "boundary": list(boundary),
         "bandwidths": bandwidths},
    )
    return 0


def cmd_error_curves(args) -> int:
    n = args.replicates if args.replicates is not None else 10_000
    seed = args.seed if args.seed is not None else 1
    threads = _resolve_threads(args.threads)
    ps = preset_potentials("example6_1")
    target = potentials.minimiser(ps)
    checkpoints = tuple(float(t) for t in range(1, 11))
    curves = {}
    for label, schedule in (
        ("exponential", Schedule.exponential(1.0, 1.0)),
        ("rational", Schedule.rational(100.0, 1.0)),
    ):
        spec = RunSpec(
            process="sgpd", potentials=ps, schedule=schedule,
            theta0=(-1.5,), horizon=10.0,
        )
        res = analysis.run_ensemble(
            spec, n, seed, checkpoints=checkpoints, threads=threads
        )
        _, means, stds = analysis.error_curve(res, target)
        curves[label] = (means, stds)
    rows = [
        [
            float(t),
            float(curves["exponential"][0][j]),
            float(curves["exponential"][1][j]),
            float(curves["rational"][0][j]),
            float(curves["rational"][1][j]),
        ]
        for j, t in enumerate(checkpoints)
    ]
    outdir = _outdir(args.out or "out")
    _write_csv(
        outdir / "error_curves.csv",
        ["t", "mean_exponential", "std_exponential", "mean_rational", "std_rational"],
        rows,
    )
    _write_metadata(
        outdir, "error-curves", None,
        {"replicates": n, "master_seed": seed, "threads": threads,
         "checkpoints": list(checkpoints), "target": [float(v) for v in target]},
    )
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(sub):
    sub.add_argument("--config", type=str, default=None, help="config file path")
    sub.add_argument("--seed", type=int, default=None, help="master seed (64-bit)")
    sub.add_argument("--replicates", type=int, default=None)
    sub.add_argument("--out", type=str, default=None, help="output directory")
    sub.add_argument("--threads", type=int, default=1, help="0 = auto")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sgproc",
        description="Simulate switching gradient processes and their SGD origins.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    for name in ("simulate", "ensemble"):
        sub = subs.add_parser(name)
        _add_common(sub)

    sub = subs.add_parser("kernel-check")
    _add_common(sub)
    sub.add_argument("--n-states", type=int, default=3)
    sub.add_argument("--lam", type=float, default=None, help="homogeneous pairwise rate")
    sub.add_argument("--schedule-kind", type=str, default=None)
    sub.add_argument("--eta", type=float, default=None)
    sub.add_argument("--a", type=float, default=1.0)
    sub.add_argument("--b", type=float, default=1.0)
    sub.add_argument("--times", type=str, default="0,0.5,1")
    sub.add_argument("--skeletons", type=int, default=10_000)

    sub = subs.add_parser("ode-limit")
    _add_common(sub)
    sub.add_argument("--etas", type=str, default="1,0.1,0.01,0.001")

    for name in ("table1", "densities", "error-curves"):
        sub = subs.add_parser(name)
        _add_common(sub)

    return parser


_DISPATCH = {
    "simulate": cmd_simulate,
    "ensemble": cmd_ensemble,
    "kernel-check": cmd_kernel_check,
    "ode-limit": cmd_ode_limit,
    "table1": cmd_table1,
    "densities": cmd_densities,
    "error-curves": cmd_error_curves,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command in ("simulate", "ensemble") and args.config is None:
        print("error: --config is required for this command", file=sys.stderr)
        return 2
    try:
        return _DISPATCH[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
