"""Simulation and analysis of stochastic gradient descent and its
piecewise-deterministic continuous-time limit.

The package is organised around the objects of that limit:

- :mod:`sgproc.rates`: learning-rate schedules, jump hazards and
  waiting-time sampling,
- :mod:`sgproc.index_process`: the switching index process (jump
  skeletons, transition kernels),
- :mod:`sgproc.potentials`: quadratic/least-squares potential sets and
  their exact gradient flows,
- :mod:`sgproc.dynamics`: path simulation (continuous processes, SGD,
  bridges between the two),
- :mod:`sgproc.analysis`: ensembles, Wasserstein distances, densities,
- :mod:`sgproc.cli`: command-line front end.
"""

from sgproc.rates import (
    NumericalFailure,
    Schedule,
    WaitingTimeDistribution,
    cumulative_hazard,
    eta_at,
    hazard_at,
    sample_waiting_time,
    validate_growth_condition,
    waiting_time_cdf,
    waiting_time_quantile,
)
from sgproc.index_process import (
    ExplosionGuardError,
    JumpSkeleton,
    forward_equation_residual,
    kernel_homogeneous,
    kernel_inhomogeneous,
    occupancy_histogram,
    sample_jump_skeleton,
    state_at,
)
from sgproc.potentials import (
    CustomPotential,
    PotentialSet,
    QuadraticPotential,
    exact_flow,
    from_least_squares,
    load_least_squares_csv,
    minimiser,
    population_field,
)
from sgproc.dynamics import (
    IntegratorSpec,
    RunSpec,
    Trajectory,
    integrate_segment,
    matched_epsilon,
    replay_skeleton,
    run_sgd,
    sgd_schedule_from_continuous,
    simulate_auxiliary,
    simulate_full_flow,
    simulate_sgpc,
    simulate_sgpd,
    simulate_switching_linear,
)
from sgproc.analysis import (
    EnsembleResult,
    TruncatedMetricSpec,
    error_curve,
    kde,
    mix_seed,
    run_ensemble,
    silverman_bandwidth,
    summary_stats,
    wasserstein1_sorted,
    wasserstein_truncated,
)

__version__ = "0.1.0"
