"""Designing affine information: efficiency against credibility.

Optimizes the affine signal for a range of credibility weights at eta = 20
and reports, for each weight, the total travel time at the induced
equilibrium and how far the announced values sit from the true travel times
there.  Weight zero buys the most efficient free-flow equilibrium; raising
it pulls the announcement toward the BPR times at a small efficiency cost.
"""

import csv

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from paraflow import DesignProblem, TravelTimeSignal, gamma_sweep, solve_extended

from common import ETA, case_study_network, ensure_output_dir

net = case_study_network()
gammas = [0.0, 0.01, 0.1, 0.3, 1.0]

problem = DesignProblem(network=net, eta=ETA, gamma=0.0, n_starts=10, max_evals=2500, seed=0)
points = gamma_sweep(problem, gammas)

# reference: what truthful information costs at the same responsiveness
truth_eq = solve_extended(net, TravelTimeSignal(net), ETA)
truth_tt = net.total_travel_time(truth_eq.x)
print(f"truthful information at eta = {ETA:g}: total travel time {truth_tt:.4f} "
      f"(road 5 congested: {truth_eq.regimes[4] == 'congested'})")

out = ensure_output_dir()
with open(out / "design_tradeoff.csv", "w", newline="") as fh:
    writer = csv.writer(fh)
    writer.writerow(["gamma", "total_travel_time", "credibility_error", "objective"])
    for pt in points:
        writer.writerow(
            [pt.gamma, f"{pt.total_travel_time:.8f}", f"{pt.credibility_error:.8f}",
             f"{pt.result.objective:.8f}"]
        )
        print(f"gamma = {pt.gamma:<5g} tt = {pt.total_travel_time:.4f}  "
              f"announcement error = {pt.credibility_error:.4f}  a = {np.round(pt.result.a, 3)}")

fig, ax1 = plt.subplots(figsize=(6, 4))
ax1.plot([p.gamma for p in points], [p.total_travel_time for p in points], "o-", color="tab:blue")
ax1.axhline(truth_tt, color="tab:blue", ls="--", lw=0.8, label="truthful info")
ax1.set_xlabel("credibility weight gamma")
ax1.set_ylabel("total travel time", color="tab:blue")
ax2 = ax1.twinx()
ax2.plot([p.gamma for p in points], [p.credibility_error for p in points], "s-", color="tab:red")
ax2.set_ylabel("announcement error at equilibrium", color="tab:red")
fig.tight_layout()
fig.savefig(out / "design_tradeoff.png", dpi=150)
print(f"\nwrote {out / 'design_tradeoff.csv'} and .png")
