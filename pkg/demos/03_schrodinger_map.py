# Schroedinger map flow: energy conservation and orbital stability.

import numpy as np

from hypmaps.flows import discrete_harmonic_state, perturb, run_smap
from hypmaps.geometry import build_grid
from hypmaps.target import HYPERBOLIC

grid = build_grid(20.0, 400)
base = discrete_harmonic_state(HYPERBOLIC, 0.5, grid)
u = perturb(base, grid.nodes * np.exp(-grid.nodes**2 / 8) * (1 + 0.5j), 1e-2)

# Implicit midpoint conserves the discrete energy up to the Newton tolerance.
_, diag = run_smap(u, base, dt=2e-3, t_max=4.0, record_every=250)
print(f"relative energy drift {diag.relative_energy_drift():.2e}")
for t, d in zip(diag.times, diag.distance):
    print(f"  t={t:5.2f}  distance to the harmonic map {d:.4e}")
print("max constraint defect", max(diag.constraint_defect))
