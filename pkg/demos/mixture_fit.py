#!/usr/bin/env python3
"""Fit a mixture of sparse Gaussian graphical models with latent clusters.

Simulates three overlapping components that share one conditional-independence
graph but differ in their means, then runs the label-imputation fit: each
cycle imputes cluster labels from the current posterior, re-estimates moments,
screens a network per cluster, and pools the per-cluster evidence into one
z-score matrix. Post-burn-in averages give the reported estimates.
"""

import numpy as np

from mixggm import SimDesign, ic_fit, simulate_mixture
from mixggm.metrics import cluster_rates, confusion, pr_curve

design = SimDesign(M=3, p=30, n_per=60, m=0.8, c=(0.5, 0.5, 0.5), seed=21)
sim = simulate_mixture(design)
print(f"data: {design.n} samples in {design.M} shuffled clusters, p={design.p}")
print(f"cluster means sit at 0 and +/-{design.m} per coordinate")
print()

fit = ic_fit(sim.data, 3, seed=1, restarts=2)

print(f"ran {fit.settings['T']} cycles, averaged the last "
      f"{fit.settings['T'] - fit.settings['burn_in']}, best of "
      f"{fit.settings['restarts']} chains by BIC")
print(f"mixing proportions: {np.round(fit.params.pi, 3)}")
print()

fsr, nsr = cluster_rates(fit.assignment, sim.labels, 3)
print(f"cluster recovery: fsr = {fsr:.3f}, nsr = {nsr:.3f}")

tp, fp, fn, tn = confusion(fit.adjacency, sim.adjacency)
_, auc = pr_curve(fit.zbar, sim.adjacency)
print(f"network recovery: tp={tp} fp={fp} fn={fn} tn={tn}, auc = {auc:.3f}")
print()

print("the averaged z matrix is the evidence trail; its largest entries:")
iu = np.triu_indices(design.p, 1)
order = np.argsort(-np.abs(fit.zbar[iu]))[:5]
for k in order:
    i, j = iu[0][k], iu[1][k]
    print(f"  ({i + 1:2d}, {j + 1:2d})  zbar = {fit.zbar[i, j]:7.2f}")

print()
print("per-cluster covariance estimates respect the shared graph: the")
print("precision of each sigma_k is zero off the recovered edge set")
K = np.linalg.inv(fit.params.sigma[0])
off_graph = ~fit.adjacency & ~np.eye(design.p, dtype=bool)
print(f"  max |precision| off-graph (cluster 1): {np.abs(K[off_graph]).max():.2e}")
