"""Waiting times between switches.

The time to the next switch has survival exp(-integral of 1/eta), so a
decaying learning rate makes waits shorter and shorter.  This script
draws waits for three schedules, checks the sample mean against a
numerical integral of the survival function, and (optionally) plots the
histograms against the exact densities.
"""

import numpy as np

from sgproc import rates
from sgproc.rates import Schedule, WaitingTimeDistribution

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

OUT = __file__.rsplit("/", 1)[0] + "/output"


def main():
    rng = np.random.default_rng(1)
    schedules = {
        "constant eta=0.5": Schedule.constant(0.5),
        "rational 1/(t+1)": Schedule.rational(1.0, 1.0),
        "exponential e^-t": Schedule.exponential(1.0, 1.0),
    }
    if plt:
        fig, axes = plt.subplots(1, 3, figsize=(12, 3.2))
    for ax_idx, (label, sched) in enumerate(schedules.items()):
        wt = WaitingTimeDistribution(sched, n_states=3, t0=0.0)
        draws = np.array([rates.sample_waiting_time(wt, rng) for _ in range(5000)])

        # mean waiting time = integral of the survival function
        grid = np.linspace(0, draws.max() * 1.5, 4000)
        surv = 1.0 - np.array([rates.waiting_time_cdf(wt, d) for d in grid])
        mean_exact = np.trapezoid(surv, grid)
        print(f"{label:20s} sample mean {draws.mean():.4f}  exact {mean_exact:.4f}")

        if plt:
            ax = axes[ax_idx]
            x = np.linspace(1e-3, np.quantile(draws, 0.99), 300)
            cdf = np.array([rates.waiting_time_cdf(wt, d) for d in x])
            pdf = np.gradient(cdf, x)
            ax.hist(draws, bins=60, density=True, alpha=0.5, range=(0, x[-1]))
            ax.plot(x, pdf, lw=2)
            ax.set_title(label)
            ax.set_xlabel("wait")
    if plt:
        import os

        os.makedirs(OUT, exist_ok=True)
        fig.tight_layout()
        fig.savefig(f"{OUT}/waiting_times.png", dpi=120)
        print(f"wrote {OUT}/waiting_times.png")


if __name__ == "__main__":
    main()
