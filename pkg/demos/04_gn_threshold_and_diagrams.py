#!/usr/bin/env python3
"""Critical-exponent diagnostics: the Euclidean limit level and thresholds.

At theta = Theta(p, d) the branch energies approach the level set by the
Gagliardo-Nirenberg ground state on R^d; where the symmetric curve pierces
that level defines the existence threshold Lambda_GN.  Writes a bifurcation
diagram for the closed-form symmetric curve to demo_out/.
"""

from pathlib import Path

import numpy as np

from ckn.analysis import lambda_FS, lambda_GN, symmetric_theta_curve
from ckn.gn import J_infinity, radial_ground_state
from ckn.model import ProblemParams, theta_critical
from ckn.svg import render_diagram
from ckn.symmetric import mu_FS

p, d = 2.8, 5
theta = theta_critical(p, d)
params = ProblemParams(d, p, theta, "surface")

print(f"critical exponent Theta({p}, {d}) = {theta:.6f}")

profile = radial_ground_state(p, d)
rx, ry = profile.pohozaev_residuals()
print(f"\nradial ground state on R^{d}: u(0) = {profile.u0:.6f}")
print(f"  norms X = {profile.X_e:.2f}, Y = {profile.Y_e:.2f}, Z = {profile.Z_e:.2f}")
print(f"  Pohozaev residuals: {rx:.1e}, {ry:.1e}")

j_inf = J_infinity(p, d, "surface", profile)
print(f"\nlimit level J_inf = {j_inf:.6f} (surface measure)")

lam_gn = lambda_GN(p, d, j_inf, "surface")
lam_fs = lambda_FS(p, theta, d)
print(f"existence threshold Lambda_GN = {lam_gn:.6f}")
print(f"bifurcation location Lambda_FS(p, Theta) = {lam_fs:.6f}")
print(f"Lambda_GN < Lambda_FS: {lam_gn < lam_fs}")

mu_fs = mu_FS(p, d)
mus = np.geomspace(0.05 * mu_fs, 60 * mu_fs, 400)
curve = symmetric_theta_curve(params, theta, mus)
out = Path("demo_out")
out.mkdir(exist_ok=True)
level = (np.array([curve.Lambda.min(), curve.Lambda.max()]),
         np.array([j_inf, j_inf]))
render_diagram(out / "demo_gn_level.svg", level, (curve.Lambda, curve.J),
               title=f"symmetric curve vs limit level, d={d} p={p}",
               xlabel="Lambda", ylabel="J")
print(f"\nwrote {out / 'demo_gn_level.svg'} "
      "(dashed: symmetric curve, solid: limit level)")
