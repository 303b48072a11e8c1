"""Smoothed deltas, the weight sigma and the interior cutoff."""
# %%
import math

from stdglab import FeSpace, build_unit_square_mesh
from stdglab.mollifiers import (CutoffOmega, WeightSigma, build_smoothed_delta, build_time_delta,
                                sigma_properties_check)
from stdglab.spacetime import build_partition

x0 = (0.5 + 1 / 97, 0.5 - 1 / 113)

# %% [markdown]
# The smoothed delta is a polynomial on the cell containing x0 that
# reproduces point values of polynomials of degree r.  Its L1 norm stays
# bounded while its maximum grows like h^-2.

# %%
for n in (8, 16, 32, 64):
    V = FeSpace(build_unit_square_mesh(n), 1)
    d = build_smoothed_delta(V, x0)
    nr = d.norms()
    print(f"n={n:3d} cell={d.cell:5d}  |delta|_1={nr['l1']:.3f}  h^2 |delta|_inf={nr['linf'] * V.h ** 2:.3f}")

# %% [markdown]
# The weight sigma = sqrt(|x - x0|^2 + K^2 h^2): the integral of sigma^-2
# grows by about 2 pi ln 2 = 4.355 per halving of h.

# %%
prev = None
for n in (16, 32, 64, 128):
    V = FeSpace(build_unit_square_mesh(n), 1)
    res = sigma_properties_check(WeightSigma(x0, 4.0, V.h), V, degree=10)
    step = "" if prev is None else f"  increment {res['inv_norm_sq'] - prev:.3f}"
    print(f"n={n:3d}  int sigma^-2 = {res['inv_norm_sq']:.3f}  max|grad sigma| = {res['grad_max']:.3f}"
          f"  cell ratio = {res['cell_ratio']:.3f}{step}")
    prev = res["inv_norm_sq"]
print(f"2 pi ln 2 = {2 * math.pi * math.log(2):.3f}")

# %%
part = build_partition(1.0, 8)
th = build_time_delta(part, 0.9, 2)
print("time delta moments:", [round(th.moments(lambda t, j=j: t ** j), 12) for j in range(3)])
om = CutoffOmega(x0, 0.2)
print("cutoff constants:", om.constants(), " exact: 15/8 and 10/sqrt(3) =", 15 / 8, 10 / math.sqrt(3))
