"""A hundred trajectories that never leave the free-flow box.

Draws 100 random starts inside the invariant set (densities below critical,
routing shares below capacity over inflow), integrates them all under the
tuned signal, and overlays the normalized trajectories.  None of them exits
the unit box, so the congestion-free guarantee is visible at a glance.
"""

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from paraflow import check_invariance, integrate_batch, sample_invariant_set

from common import ETA, case_study_network, designed_signal, ensure_output_dir

net = case_study_network()
sig = designed_signal()
rng = np.random.default_rng(11)
starts = sample_invariant_set(net, 100, rng)
trajectories = integrate_batch(starts, net, sig, ETA, t_end=50.0, dt=0.01)

violations = sum(check_invariance(t, net).n_violations for t in trajectories)
print(f"trajectories: {len(trajectories)}, samples outside the box: {violations}")

xbar = net.critical_density_vec
caps = net.routing_cap_vec()
fig, axes = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
for traj in trajectories:
    axes[0].plot(traj.times, traj.x / xbar, lw=0.3, alpha=0.25, color="tab:blue")
    axes[1].plot(traj.times, traj.r / caps, lw=0.3, alpha=0.25, color="tab:orange")
for ax, label in zip(axes, ("x / x_crit", "r / (f_crit / inflow)")):
    ax.axhline(1.0, color="k", lw=0.9, ls="--")
    ax.set_ylabel(label)
    ax.set_ylim(0.0, 1.1)
axes[1].set_xlabel("time")
out = ensure_output_dir()
fig.tight_layout()
fig.savefig(out / "invariance_portrait.png", dpi=150)
print(f"wrote {out / 'invariance_portrait.png'}")
