"""Oscillator purity of the z-SOM: numerics against the closed form.

The spin starts in diag(0.7, 0.3), the oscillator in its ground state. The
purity dips once per oscillator period and never falls below the bound
(1 + exp(-8 xi)) / 2.
"""
import math

import numpy as np

from somwork import SystemParams, TimeGrid, build_hamiltonian, evolve, initial_state
from somwork.measures import min_purity_bound
from somwork.models import choose_cutoff, derived_constants
from somwork.oracles import analytic_purity

params = SystemParams(lam=0.1, c=0.7, alpha=0.0)
grid = TimeGrid(0.0, 4 * math.pi, math.pi / 8)
n = choose_cutoff(params, grid.t1, kind="z")
traj = evolve(initial_state(params, n), build_hamiltonian(params, "z", n), grid)
numeric = traj.purities()[:, 1]
exact = analytic_purity(params, traj.times)

print(f"cutoff {n}, xi = {derived_constants(params).xi:g}")
print(f"{'t':>8} {'numeric':>12} {'closed form':>12}")
for t, a, b in zip(traj.times[::2], numeric[::2], exact[::2]):
    print(f"{t:8.4f} {a:12.8f} {b:12.8f}")
print(f"max deviation {np.max(np.abs(numeric - exact)):.2e}")
print(f"minimum purity bound {min_purity_bound(derived_constants(params).xi):.6f}")
