"""One path of each process on the three-well benchmark.

Three quadratic wells with minima at -2, 1.5 and 2 average to an
objective bottoming at 0.5.  A constant switching rate keeps the path
rattling around that point forever; a decaying learning rate switches
ever faster, so the rattling dies out; the deterministic averaged flow
is the noiseless reference.
"""

import numpy as np

from sgproc import dynamics, potentials
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
    horizon, grid = 10.0, 801
    flow = dynamics.simulate_full_flow(ps, [-1.5], horizon, grid=grid)
    cons = dynamics.simulate_sgpc(ps, 0.2, [-1.5], horizon, grid=grid, rng=5)
    decay = dynamics.simulate_sgpd(
        ps, Schedule.exponential(1.0, 1.0), [-1.5], horizon, grid=grid, rng=5
    )
    print(f"averaged flow endpoint:   {flow.states[-1, 0]: .4f}")
    print(f"constant-rate endpoint:   {cons.states[-1, 0]: .4f} "
          f"({cons.skeleton.jump_times.size} switches)")
    print(f"decaying-rate endpoint:   {decay.states[-1, 0]: .4f} "
          f"({decay.skeleton.jump_times.size} switches)")

    if plt:
        import os

        os.makedirs(OUT, exist_ok=True)
        fig, ax = plt.subplots(figsize=(8, 4))
        ax.plot(cons.grid, cons.states[:, 0], lw=0.8, label="constant rate (eta=0.2)")
        ax.plot(decay.grid, decay.states[:, 0], lw=0.8, label="decaying rate (e^-t)")
        ax.plot(flow.grid, flow.states[:, 0], "k--", lw=2, label="averaged flow")
        ax.axhline(0.5, color="gray", ls=":", lw=1)
        ax.set_xlabel("t")
        ax.set_ylabel("x")
        ax.legend()
        fig.tight_layout()
        fig.savefig(f"{OUT}/single_paths.png", dpi=120)
        print(f"wrote {OUT}/single_paths.png")


if __name__ == "__main__":
    main()
