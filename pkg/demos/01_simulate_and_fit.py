"""Simulate a clustered-intercept dataset, fit the GP + DP model, summarize.

Run from the repository root::

    python3 demos/01_simulate_and_fit.py

Takes about a minute with the short chain below.
"""

import numpy as np

from npglm import ChainConfig, ModelSpec, evaluate, generate_dataset, generate_truth, run_chain
from npglm.summaries import cluster_summary, functional_summary, occupied_clusters, summarize_coefficients

# Scenario 2 draws the 33 state intercepts from a Chinese restaurant process,
# so several states share a level. That is where DP intercepts should help.
truth = generate_truth(2, seed=1)
data = generate_dataset(truth)
print(f"n = {data.n}, groups = {data.n_groups}, distinct true intercepts = {np.unique(truth.mu).size}")
print(f"observed success rate {data.y.mean():.3f}")

draws = run_chain(data, ModelSpec(), ChainConfig(iterations=1500, burn_in=500, seed=1))
print(f"kept {draws.n_draws} draws")

# Fixed effects: truth is (0.3, 0.5).
for row in summarize_coefficients(draws):
    print(f"{row['name']:>6}: mean {row['mean']:+.3f}  95% HPD [{row['hpd_lo']:+.3f}, {row['hpd_hi']:+.3f}]")

# Functional effect for level 0, on a coarse slice of the age grid.
band = functional_summary(draws, 0)
print("\nage   f0 mean   lo      hi      truth")
for g, mean, lo, hi in band[::7]:
    print(f"{g:4.0f}  {mean:+.3f}  {lo:+.3f}  {hi:+.3f}  {truth.f[0][int(g) - 1]:+.3f}")

# How many clusters does the posterior use?
counts = np.bincount(occupied_clusters(draws.S))
print(f"\nmodal number of occupied clusters: {counts.argmax()}")
co, mu = cluster_summary(draws)
same = truth.mu[:, None] == truth.mu[None, :]
print(f"mean co-clustering, truly tied pairs {co[same & ~np.eye(33, dtype=bool)].mean():.2f}"
      f" vs untied pairs {co[~same].mean():.2f}")

m = evaluate(draws, truth)
print("\nerror summary against the truth:")
for name, value in m.items():
    # beta rows: absolute error of the posterior mean; curves and intercepts: (mean, 95th pct) squared error.
    print(f"  {name:>5}: " + ", ".join(f"{v:.4f}" for v in np.atleast_1d(value)))
