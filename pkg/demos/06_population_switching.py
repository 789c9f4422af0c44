"""Random switching in a linear population model.

Two phenotypes grow in an environment that flips at random; each
environment favours the opposite phenotype, and slow phenotype switching
hedges between them.  The same jump-process machinery drives the
switching; the flow segments are linear ODEs x' = G_i x instead of
gradient descent.
"""

import numpy as np

from sgproc import dynamics

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

OUT = __file__.rsplit("/", 1)[0] + "/output"


def main():
    # growth diag(f) plus phenotype switching with zero column sums
    g1 = np.array([[0.9, 0.1], [0.1, 0.1]])
    g2 = np.array([[0.1, 0.1], [0.1, 0.9]])
    traj = dynamics.simulate_switching_linear(
        [g1, g2], lam=1.0, theta0=[1.0, 1.0], horizon=12.0, grid=601, rng=3
    )
    total = traj.states.sum(axis=1)
    # long-run growth rate of the total population
    rate = np.polyfit(traj.grid[200:], np.log(total[200:]), 1)[0]
    print(f"environment switches: {traj.skeleton.jump_times.size}")
    print(f"empirical long-run growth rate: {rate:.3f}")
    print(f"final composition: {traj.states[-1] / total[-1]}")

    if plt:
        import os

        os.makedirs(OUT, exist_ok=True)
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.semilogy(traj.grid, traj.states[:, 0], label="phenotype 0")
        ax.semilogy(traj.grid, traj.states[:, 1], label="phenotype 1")
        ax.semilogy(traj.grid, total, "k--", lw=1, label="total")
        for t in traj.skeleton.jump_times:
            ax.axvline(t, color="gray", lw=0.4, alpha=0.5)
        ax.set_xlabel("t")
        ax.set_ylabel("abundance")
        ax.legend()
        fig.tight_layout()
        fig.savefig(f"{OUT}/population_switching.png", dpi=120)
        print(f"wrote {OUT}/population_switching.png")


if __name__ == "__main__":
    main()
