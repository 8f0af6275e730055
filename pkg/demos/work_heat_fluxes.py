"""Work and heat fluxes into the spin along an exact xz-SOM trajectory.

The local energy change rate splits into W_dot + Q_dot at every sample; the
residual printed last is that balance.
"""
from somwork import SystemParams, TimeGrid, evolve, initial_state
from somwork.lembas import flux_series
from somwork.models import choose_cutoff, som_hamiltonian

p = SystemParams(lam=0.1, kappa=0.1, alpha=2.0, c=1.0)
grid = TimeGrid(0.0, 20.0, 0.05)
n = choose_cutoff(p, grid.t1)
parts = som_hamiltonian(p, "xz", n)
traj = evolve(initial_state(p, n), parts.total, grid)
fs = flux_series(traj, parts.total, parts.h_int, parts.h_spin, which=0)

print(f"{'t':>6} {'W_dot':>12} {'Q_dot':>12} {'u_dot':>12}")
for i in range(0, len(fs), 40):
    s = fs[i]
    print(f"{s.t:6.2f} {s.w_dot:12.4e} {s.q_dot:12.4e} {s.u_dot:12.4e}")
print(f"max balance residual {fs.balance_residual.max():.1e}")
