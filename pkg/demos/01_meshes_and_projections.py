"""Meshes, finite element spaces and the three projections.

Run from anywhere: ``python demos/01_meshes_and_projections.py``.
"""
# %%
import numpy as np

from stdglab import (FeSpace, build_polygon_mesh, build_unit_square_mesh, interpolate_nodal,
                     project_l2, project_ritz)
from stdglab.fem import norms

# %% [markdown]
# The unit square mesh with parameter n has 2 n^2 congruent right triangles
# and h = sqrt(2)/n.  Any convex polygon works too; it is triangulated from
# its corners and refined uniformly.

# %%
for n in (4, 8, 16):
    m = build_unit_square_mesh(n)
    print(f"n={n:3d}  cells={m.n_cells:5d}  h={m.h:.4f}  quasi-uniformity={m.quasi_uniformity:.3f}")

kite = build_polygon_mesh([[0, 0], [2, 0], [2.4, 1.2], [0.3, 1.5]], levels=3)
print(kite, "area", round(kite.area, 12))

# %% [markdown]
# Interpolation, L2 projection and Ritz projection of a smooth function.
# All three converge at second order in the nodal maximum norm.

# %%
u = lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y)
grad = lambda x, y: (np.pi * np.cos(np.pi * x) * np.sin(np.pi * y),
                     np.pi * np.sin(np.pi * x) * np.cos(np.pi * y))
prev = None
for n in (8, 16, 32, 64):
    V = FeSpace(build_unit_square_mesh(n), 1)
    I = interpolate_nodal(V, u)
    errs = np.array([np.abs(P.coeffs - I.coeffs).max()
                     for P in (project_l2(V, u, degree=8), project_ritz(V, u, grad=grad))])
    rates = "" if prev is None else "  rates " + " ".join(f"{r:.2f}" for r in np.log2(prev / errs))
    print(f"n={n:3d}  |P_h u - i_h u|={errs[0]:.2e}  |R_h u - i_h u|={errs[1]:.2e}{rates}")
    prev = errs

# %%
print(norms(I))
