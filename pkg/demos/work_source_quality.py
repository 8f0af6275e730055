"""Integrated work-source quality R(200, 0) of the oscillator, seen by the spin.

Case (a): vacuum oscillator, maximally mixed spin. Case (b): coherent
oscillator with alpha = 2, spin in its ground state. The breakdown time t*
marks where the RWA purity reaches the z-SOM minimum bound.
"""
from somwork import SystemParams, TimeGrid, evolve, initial_state
from somwork.lembas import flux_series
from somwork.measures import breakdown_time, integral_quality, min_purity_bound
from somwork.models import build_hamiltonian, choose_cutoff, derived_constants, som_hamiltonian

grid = TimeGrid(0.0, 200.0, 0.05)
for label, p in (("a", SystemParams(lam=0.1, kappa=0.1, c=0.5)),
                 ("b", SystemParams(lam=0.1, kappa=0.1, alpha=2.0, c=1.0))):
    n = choose_cutoff(p, grid.t1)
    parts = som_hamiltonian(p, "xz", n)
    rho0 = initial_state(p, n)
    traj = evolve(rho0, parts.total, grid)
    rwa = evolve(rho0, build_hamiltonian(p, "jcm", n), grid)
    t_star = breakdown_time((rwa.times, rwa.purities()[:, 1]), min_purity_bound(derived_constants(p).xi))
    rep = integral_quality(flux_series(traj, parts.total, parts.h_int, parts.h_spin), 0.0, 200.0, t_star)
    print(f"case ({label}): t* = {t_star:6.2f}  W = {rep.W_abs:.4e}  Q = {rep.Q_abs:.4e}"
          f"  R = {rep.R:.4f}  (trapezoid {rep.R_trapezoid:.4f})")
