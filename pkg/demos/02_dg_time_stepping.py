"""Discontinuous Galerkin time stepping on an eigenmode.

On an eigenvector of the discrete Laplacian, dG(q) acts as the subdiagonal
Pade approximant of exp(-x), x = lambda k.  The second half shows that the
dual problem with terminal data is the forward problem run backwards.
"""
# %%
import numpy as np
import scipy.linalg as sla

from stdglab import FeSpace, build_unit_square_mesh
from stdglab.mollifiers import build_smoothed_delta
from stdglab.spacetime import build_partition, solve_dual_terminal, solve_forward

V = FeSpace(build_unit_square_mesh(8), 1)
lam, vecs = sla.eigh(V.stiffness.toarray(), V.mass.toarray())
part = build_partition(1.0, 10)

# %%
print("   x      dG(0)       1/(1+x)      dG(1)     (6-2x)/(6+4x+x^2)   exp(-x)")
for i in (0, 10, len(lam) - 1):
    x = lam[i] * part.k
    f0 = solve_forward(part, V, u0=vecs[:, i], q=0).left(1) @ (V.mass @ vecs[:, i])
    f1 = solve_forward(part, V, u0=vecs[:, i], q=1).left(1) @ (V.mass @ vecs[:, i])
    print(f"{x:7.2f}  {f0:.8f}  {1 / (1 + x):.8f}  {f1:+.8f}  {(6 - 2 * x) / (6 + 4 * x + x * x):+.8f}"
          f"   {np.exp(-x):.2e}")

# %% [markdown]
# Both factors stay below 1 in modulus for every x > 0, which is the
# discrete smoothing property; dG(1) is accurate to third order at nodes.

# %%
d = build_smoothed_delta(V, (0.51, 0.49))
for q in (0, 1, 2):
    g = solve_dual_terminal(part, V, d, q)
    u = solve_forward(part, V, u0=V.mass.solve(d.load_vector()), q=q)
    sign = (-1.0) ** np.arange(q + 1)
    gap = np.abs(g.coeffs - u.coeffs[::-1] * sign[None, :, None]).max()
    print(f"q={q}: |dual - reversed forward| = {gap:.1e}")
