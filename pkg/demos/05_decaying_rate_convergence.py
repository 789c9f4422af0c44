"""Convergence under a decaying learning rate, and the frozen companion.

Two stories in one script.  First: with a decaying rate the process
actually converges to the averaged minimiser, and how fast depends on
the schedule (an exponential schedule beats 1/(100t+1) here).  Second:
freezing the decay at level eps leaves a process that behaves like the
constant-rate process whose rate matches the frozen one; their terminal
clouds are statistically indistinguishable.
"""

import numpy as np

from sgproc import analysis, dynamics, potentials
from sgproc.dynamics import RunSpec
from sgproc.rates import Schedule

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

OUT = __file__.rsplit("/", 1)[0] + "/output"


def three_wells():
    return potentials.from_least_squares(
        [
            (np.array([[1.0]]), np.array([-2.0])),
            (np.array([[1.0]]), np.array([1.5])),
            (np.array([[1.0]]), np.array([2.0])),
        ]
    )


def main():
    ps = three_wells()
    n = 2000
    checkpoints = tuple(float(t) for t in range(1, 11))
    curves = {}
    for label, sched in (
        ("exponential e^-t", Schedule.exponential(1.0, 1.0)),
        ("rational 1/(100t+1)", Schedule.rational(100.0, 1.0)),
    ):
        res = analysis.run_ensemble(
            RunSpec(process="sgpd", potentials=ps, schedule=sched,
                    theta0=(-1.5,), horizon=10.0),
            n, master_seed=31, checkpoints=checkpoints, threads=4,
        )
        t, mean, _ = analysis.error_curve(res, [0.5])
        curves[label] = (t, mean)
        print(f"{label:22s} mean error t=1: {mean[0]:.3f}   t=10: {mean[-1]:.4f}")

    # frozen companion tuned to the eta = 0.01 constant-rate process
    sched = Schedule.exponential(1.0, 1.0)
    lam = 1.0 / ((ps.n - 1) * 0.01)
    eps = dynamics.matched_epsilon(sched, lam, ps.n)
    frozen = analysis.run_ensemble(
        RunSpec(process="auxiliary", potentials=ps, schedule=sched, epsilon=eps,
                theta0=(-1.5,), horizon=10.0),
        n, master_seed=32, threads=4,
    )
    const = analysis.run_ensemble(
        RunSpec(process="sgpc", potentials=ps, eta=0.01, theta0=(-1.5,), horizon=10.0),
        n, master_seed=33, threads=4,
    )
    w1 = analysis.wasserstein1_sorted(
        frozen.terminal_states[:, 0], const.terminal_states[:, 0]
    )
    print(f"freeze level eps = {eps:.4e}")
    print(f"W1(frozen cloud, constant-rate cloud) = {w1:.4f}")

    if plt:
        import os

        os.makedirs(OUT, exist_ok=True)
        fig, ax = plt.subplots(figsize=(6, 4))
        for label, (t, mean) in curves.items():
            ax.semilogy(t, mean, "o-", label=label)
        ax.set_xlabel("t")
        ax.set_ylabel("mean |x - 0.5|")
        ax.legend()
        fig.tight_layout()
        fig.savefig(f"{OUT}/decaying_rate_convergence.png", dpi=120)
        print(f"wrote {OUT}/decaying_rate_convergence.png")


if __name__ == "__main__":
    main()
