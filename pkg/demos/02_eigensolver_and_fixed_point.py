#!/usr/bin/env python3
"""The inner machinery: weighted eigensolver and the fixed-point loop.

Feeding the potential generated by the symmetric soliton into the
Schroedinger solver must return eigenvalue -mu; iterating the potential
update keeps the eigenvalue sequence monotone and reproduces the soliton
as a fixed point.
"""

import numpy as np

from ckn.eigensolver import SolverCache, lowest_eigenpair
from ckn.fixedpoint import roothan_solve, self_potential
from ckn.model import Field, ProblemParams, build_grid
from ckn.symmetric import mu_FS, soliton

p, d = 2.8, 5
params = ProblemParams(d, p, 1.0, "probability")
grid = build_grid(10.0, 200, 24, params)
cache = SolverCache()

print("eigenvalue oracle: potential from the soliton at mu gives lambda = -mu")
for mu in (2.0, mu_FS(p, d), 8.0):
    u = soliton(mu, p).sample(grid)
    V = self_potential(u)
    kappa = float(grid.integrate(np.abs(u.values) ** p) ** ((p - 2) / p))
    res = lowest_eigenpair(kappa, V, grid, cache=cache)
    print(f"  mu = {mu:8.4f}: lambda = {res.lam:+.6f}  "
          f"(rel err {abs(res.lam + mu) / mu:.1e}, {res.iterations} iterations)")

print("\nfree Laplacian check (kappa = 0): lowest Dirichlet mode")
c = (1.0 / grid.integrate(np.ones(grid.shape))) ** ((p - 2.0) / p)
res = lowest_eigenpair(0.0, Field(grid, np.full(grid.shape, c)), grid)
print(f"  lambda = {res.lam:.6f} vs (pi/2L)^2 = {(np.pi / 20) ** 2:.6f}")

print("\nfixed point at the soliton (kappa = critical level):")
mu = mu_FS(p, d)
u = soliton(mu, p).sample(grid)
kappa = float(grid.integrate(np.abs(u.values) ** p) ** ((p - 2) / p))
fp = roothan_solve(kappa, self_potential(u), grid, params, warm_start=u, cache=cache)
print(f"  converged = {fp.converged} after {fp.iterations} iterations")
print(f"  mu(kappa) = {fp.mu:.6f}  (target {mu:.6f})")
diffs = np.diff(fp.lambda_history)
print(f"  eigenvalue increments all <= 0: {bool(np.all(diffs <= 1e-12))}")
print(f"  largest increment: {diffs.max() if diffs.size else 0.0:+.2e}")
