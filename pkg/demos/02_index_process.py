"""The switching index as a continuous-time chain.

Which potential is active follows a Markov chain on {0..n-1} that picks
a uniformly random other index at each switch.  Its transition
probabilities have a closed form; here we sample many jump skeletons and
watch the empirical occupancy relax towards that analytic kernel (and
towards the uniform distribution).
"""

import numpy as np

from sgproc import index_process
from sgproc.rates import Schedule

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

OUT = __file__.rsplit("/", 1)[0] + "/output"


def main():
    n_states = 3
    sched = Schedule.rational(1.0, 1.0)  # switching speeds up over time
    rng = np.random.default_rng(7)
    skeletons = [
        index_process.sample_jump_skeleton(sched, n_states, 0.0, 4.0, rng, initial_state=0)
        for _ in range(4000)
    ]
    print(f"mean jumps per path: {np.mean([s.jump_times.size for s in skeletons]):.2f}")

    times = np.linspace(0.0, 4.0, 21)
    kern = np.array(
        [index_process.kernel_inhomogeneous(sched, n_states, 0.0, t, 0) for t in times]
    )
    emp = np.array([index_process.occupancy_histogram(skeletons, t) for t in times])
    worst = np.max(0.5 * np.abs(kern - emp).sum(axis=1))
    print(f"worst total-variation gap (empirical vs analytic): {worst:.4f}")

    if plt:
        import os

        os.makedirs(OUT, exist_ok=True)
        fig, ax = plt.subplots(figsize=(6, 4))
        for i in range(n_states):
            (line,) = ax.plot(times, kern[:, i], lw=2, label=f"state {i} analytic")
            ax.plot(times, emp[:, i], "o", ms=4, color=line.get_color())
        ax.axhline(1.0 / n_states, color="k", ls=":", lw=1)
        ax.set_xlabel("t")
        ax.set_ylabel("occupancy probability (started at 0)")
        ax.legend()
        fig.tight_layout()
        fig.savefig(f"{OUT}/index_process.png", dpi=120)
        print(f"wrote {OUT}/index_process.png")


if __name__ == "__main__":
    main()
