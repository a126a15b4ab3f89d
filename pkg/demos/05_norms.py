# Local smoothing and Strichartz norms of linearized Schroedinger evolutions.

import numpy as np

from hypmaps.flows import linear_schrodinger_evolve, sponge_profile
from hypmaps.geometry import build_grid
from hypmaps.linop import mode_operator
from hypmaps.norms import inequality_suite, le_norm, smooth_corpus, strichartz_norm
from hypmaps.target import HYPERBOLIC

grid = build_grid(40.0, 600)
op = mode_operator(HYPERBOLIC, 0.5, grid, 1)
phi0 = smooth_corpus(grid, 1, 1, seed=12, support=6.0)[0]

dt, every = 0.025, 20
samples = linear_schrodinger_evolve(op, phi0, dt, 2000, every, absorber=sponge_profile(grid, 25.0, 2.0))
times = dt * every * np.arange(len(samples))

half = len(times) // 2
le_half = le_norm(grid, samples[: half + 1], times[: half + 1], 1, r_window=20.0)
le_full = le_norm(grid, samples, times, 1, r_window=20.0)
print(f"LE norm on [0, T/2]: {le_half:.4f}; on [0, T]: {le_full:.4f}")
print(f"Strichartz norm: {strichartz_norm(grid, samples, times):.4f}")

report = inequality_suite(build_grid(20.0, 200), modes=(0, 1), count=20)
for row in report.rows:
    print(f"{row.inequality:>15s} m={row.mode}: constant {row.empirical_constant:.4f}")
