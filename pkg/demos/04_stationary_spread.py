"""How the stationary spread scales with the learning rate.

With a constant switching rate the process settles into a stationary
cloud around the averaged minimiser whose variance shrinks linearly in
eta; the discrete recursion behaves the same way.  This reproduces that
scaling with modest ensembles and sketches the terminal densities.
"""

import numpy as np

from sgproc import analysis, potentials
from sgproc.dynamics import RunSpec

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
    etas = (0.1, 0.01, 0.001)
    print(f"{'eta':>8} {'var cont':>10} {'var/eta':>9} {'var sgd':>10} {'var/eta':>9}")
    clouds = {}
    for eta in etas:
        cont = analysis.run_ensemble(
            RunSpec(process="sgpc", potentials=ps, eta=eta, theta0=(-1.5,), horizon=10.0),
            n, master_seed=21, threads=4,
        )
        sgd = analysis.run_ensemble(
            RunSpec(
                process="sgd", potentials=ps, eta=eta, theta0=(-1.5,),
                horizon=10.0, steps=round(10.0 / eta),
            ),
            n, master_seed=22, threads=4,
        )
        _, v_c = analysis.summary_stats(cont.terminal_states)
        _, v_d = analysis.summary_stats(sgd.terminal_states)
        clouds[eta] = cont.terminal_states[:, 0]
        print(f"{eta:>8g} {v_c:>10.5f} {v_c / eta:>9.3f} {v_d:>10.5f} {v_d / eta:>9.3f}")

    if plt:
        import os

        os.makedirs(OUT, exist_ok=True)
        fig, ax = plt.subplots(figsize=(7, 4))
        for eta in etas:
            samples = clouds[eta]
            lo, hi = samples.min() - 0.1, samples.max() + 0.1
            grid = np.linspace(lo, hi, 400)
            ax.plot(grid, analysis.kde(samples, grid), lw=1.5, label=f"eta={eta:g}")
        ax.axvline(0.5, color="k", ls=":", lw=1)
        ax.set_xlabel("terminal x")
        ax.set_ylabel("density")
        ax.legend()
        fig.tight_layout()
        fig.savefig(f"{OUT}/stationary_spread.png", dpi=120)
        print(f"wrote {OUT}/stationary_spread.png")


if __name__ == "__main__":
    main()
