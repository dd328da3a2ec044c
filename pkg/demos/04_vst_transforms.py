"""Variance stabilization: kSigma and the generalized Anscombe transform.

Poisson-Gaussian noise has signal-dependent variance; after the
transforms it is (approximately) signal-independent, which is what lets
a fixed-threshold Gaussian denoiser work at every brightness.
"""

import numpy as np

from rawbench import PgParams, gat_forward, gat_inverse, ksigma_forward, ksigma_inverse

rng = np.random.default_rng(0)
p = PgParams(K=0.8, sigma=4.0)

print("electron mean | raw variance | Var after GAT | Var/mean after kSigma")
for e in (5, 10, 50, 200, 1000, 5000):
    y = p.K * rng.poisson(float(e), 500_000) + rng.normal(0, p.sigma, 500_000)
    t = gat_forward(y, p)
    f = ksigma_forward(y, p)
    print(f"{e:13d} | {np.var(y):12.1f} | {np.var(t):13.4f} | {np.var(f)/np.mean(f):21.4f}")

y = np.linspace(0, 10000, 7)
print("\nGAT round trip max error:",
      float(np.abs(gat_inverse(gat_forward(y, p), p) - y).max()))
print("kSigma round trip max error:",
      float(np.abs(ksigma_inverse(ksigma_forward(y, p), p) - y).max()))
