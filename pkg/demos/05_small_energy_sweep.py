# %% [markdown]
# # Small data stay regular
#
# For a few amplitudes we track the second-order energy and the space-time
# source integrals.  All of them shrink with the data.

# %%
from wavemap import harness

cfg = harness.validate({
    "target.kind": "sphere", "grid.dr": 2.0 ** -5, "grid.r_max": 16.0,
    "time.t_end": 8.0, "time.cfl": 0.5,
    "data.family": "gaussian_bump", "data.amplitude": 0.1, "data.width": 1.0, "data.center": 0.0,
    "output.save_every": 4,
})
rep = harness.amplitude_sweep(cfg, [0.05, 0.1, 0.2, 0.4])
print(f"{'a':>5} {'E0':>10} {'supH2/H2(0)':>12} {'g1':>10} {'g2':>10} {'G_beta':>10} {'src/(E0 H2)':>12}")
for r in rep["rows"]:
    print(f"{r['amplitude']:5.2f} {r['E0']:10.3e} {r['sup_H2_ratio']:12.6f} {r['g1_int']:10.3e} "
          f"{r['g2_int']:10.3e} {r['G_beta_int']:10.3e} {r['source_ratio']:12.4e}")
print("monotone in amplitude:", rep["monotone"])
