"""How far the resonant JCM tracks the xz-SOM as the coupling grows.

lam = -0.01 fixed; kappa grows so that g = lam kappa / sqrt(2) takes the
values -0.01, -0.1 and -1.
"""
import math

from somwork import SystemParams, TimeGrid
from somwork.measures import rwa_comparison
from somwork.models import choose_cutoff, derived_constants

grid = TimeGrid(0.0, 200.0, 0.05)
for kappa in (math.sqrt(2), 10 * math.sqrt(2), 100 * math.sqrt(2)):
    p = SystemParams(lam=-0.01, kappa=kappa, alpha=1.0, c=0.7)
    n = max(choose_cutoff(p, grid.t1, kind=k) for k in ("xz", "jcm"))
    cmp = rwa_comparison(p, grid, n)
    g = derived_constants(p).g
    print(f"g = {g:6.3f}  cutoff {n:3d}  max |dP| = {cmp.deviation.max():.3e}"
          f"  max relative = {cmp.relative.max():.3e}")
