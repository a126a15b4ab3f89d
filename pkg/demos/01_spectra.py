# Spectra of the linearized operator around equivariant harmonic maps.
#
# On the hyperbolic plane the radial Laplacian has its spectrum above 1/4.
# Linearizing around a harmonic map adds a potential, and the question is
# whether that potential pulls an eigenvalue into the gap (0, 1/4).

import numpy as np

from hypmaps.geometry import build_grid, negative_mode_laplacian
from hypmaps.linop import find_gap_eigenvalues, stability_certificate
from hypmaps.target import HYPERBOLIC, SPHERE

grid = build_grid(20.0, 1000)

# Bare Laplacian first: the bottom sits a bit above 1/4 because the domain is truncated.
for m in range(4):
    print(f"-Delta_{m}: lowest eigenvalue {negative_mode_laplacian(grid, m).eigen(1)[0]:.5f}")

# Hyperbolic target: every mode stays above the threshold.
cert = stability_certificate(HYPERBOLIC, 0.5, grid)
print("H2 target, lambda=0.5, strongly stable:", cert.strongly_stable)
for rep in cert.report:
    print(f"  m={rep.m:+d}  lowest={rep.lowest_eigenvalues[0]:.5f}  quotient={rep.resonance_quotient:.4f}")

# Sphere target: wide maps develop a gap eigenvalue.
lambdas = [0.5, 1, 2, 5, 10]
gap = find_gap_eigenvalues(SPHERE, lambdas, grid, lower=0.02)
for g in gap:
    print(f"S2 target, lambda={g.lam:g}, m={g.m}: gap eigenvalue {g.eigenvalue:.5f} (refined {g.refined:.5f})")
if not gap:
    print("no gap eigenvalues found for", lambdas)

print("lowest S2 eigenvalues, m=0:",
      np.round([stability_certificate(SPHERE, lam, grid).report[2].lowest_eigenvalues[0] for lam in lambdas], 4))
