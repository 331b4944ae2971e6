# %% [markdown]
# # A small wave map into the round sphere
#
# Gaussian velocity data on S^2, evolved with the projected leapfrog scheme.
# We watch the conserved energy and the distance of Phi from the sphere.

# %%
import numpy as np

from wavemap import TargetManifold, build_grid, init_state
from wavemap.estimates import energy
from wavemap.solver import evolve

grid = build_grid(2.0 ** -6, 16.0)
S2 = TargetManifold("sphere")
state = init_state("gaussian_bump", 0.2, 1.0, 0.0, grid, S2, t_planned=4.0)
E0 = energy(state)
print(f"J = {grid.J} nodes, E0 = {E0:.6e}")

# %% the observer sees every accepted step
drift, constraint, defect = [], [], []


def watch(s, n):
    drift.append(abs(energy(s) - E0) / E0)
    constraint.append(s.constraint_residual())
    defect.append(s.projection_defect)


traj = evolve(state, 4.0, observers=[watch], save_every=64)
print(f"{traj.steps} steps of dt = {traj.dt:.4g}")
print(f"max relative energy drift  {max(drift):.3e}")
print(f"max ||Phi| - 1| (projected) {max(constraint):.2e}")
print(f"max defect before projection {max(defect):.2e}")

# %% [markdown]
# Halving dr should cut the drift by about four.

# %%
for k in (5, 6, 7):
    g = build_grid(2.0 ** -k, 16.0)
    s0 = init_state("gaussian_bump", 0.2, 1.0, 0.0, g, S2, t_planned=4.0)
    fin = evolve(s0, 4.0).snapshots[-1]
    print(f"dr = 2^-{k}:  drift {abs(energy(fin) - energy(s0)) / energy(s0):.3e}")
