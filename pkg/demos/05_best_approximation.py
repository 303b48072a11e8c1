"""Best approximation in L-infinity and a VTK snapshot series.

Writes CSV, JSON and VTK files to ``demo_output/`` in the working directory
(or ``$STDGLAB_OUTPUT_DIR``).
"""
# %%
import os

from stdglab.experiments import ExperimentConfig, finest_solution, run_experiment

out = os.environ.get("STDGLAB_OUTPUT_DIR", "demo_output")

# %% [markdown]
# The ratio of the dG error to the interpolation error, divided by the two
# log factors, should not grow under simultaneous refinement of h and k.

# %%
for sol in ("smooth", "rough_time"):
    cfg = ExperimentConfig.from_dict({"q": 1, "solution": sol, "levels": [8, 16, 32]}, "bestapprox")
    rep = run_experiment(cfg)
    print(sol)
    for r in rep.rows:
        print(f"  n={r['n']:3d} M={r['M']:3d}  err={r['err_inf']:.3e}  ba={r['ba_inf']:.3e}"
              f"  ratio={r['ratio']:.3f}  normalized={r['normalized_ratio']:.4f}")
    print("  drift", rep.summary["drift"])
    paths = rep.write(os.path.join(out, sol))

# %%
cfg = ExperimentConfig.from_dict({"q": 1, "levels": [16]}, "bestapprox")
snaps = finest_solution(cfg).write_vtk_snapshots(os.path.join(out, "vtk"))
print(f"wrote {len(snaps)} VTK files to {os.path.dirname(snaps[0])}")
