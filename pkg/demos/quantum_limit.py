"""Two routes to xi -> 0 in the z-SOM.

Classical: heavier oscillator. Quantum: stiffer oscillator with lam^2/omega_o
fixed, which keeps a finite stroke of the spin's splitting while the
oscillator purity approaches 1.
"""
from somwork import SystemParams
from somwork.oracles import LimitKind, LimitSpec, limit_sweep, quantum_limit_amplitude

base = SystemParams(lam=0.1, c=0.7, alpha=4.0)
for kind in LimitKind:
    print(kind.value)
    for row in limit_sweep(base, LimitSpec(kind), (1, 4, 16, 64)):
        print(f"  scale {row.scale:4g}  xi = {row.xi:.3e}  P_min = {row.p_min:.6f}  stroke = {row.amplitude:.5f}")
print(f"quantum-limit stroke {quantum_limit_amplitude(base):.5f}")
