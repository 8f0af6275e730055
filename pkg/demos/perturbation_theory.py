"""First-order perturbation theory for the resonant JCM.

The distance sqrt(1 - F) to the exact state shrinks as (g t)^2. Starting in
|0>|alpha> the spin stays nearly pure; starting in |1>|alpha> it does not.
"""
import math

import numpy as np

from somwork.oracles import first_order_pt_state
from somwork.propagation import jcm_closed_form_propagator
from somwork.quantum_core import StateVector, coherent_state, fidelity, partial_trace, purity

alpha, n, t = 1.0, 30, 5.0


def exact(spin, g):
    psi = np.zeros(2 * n, dtype=complex)
    psi[spin * n:(spin + 1) * n] = coherent_state(alpha, n).data
    return StateVector(jcm_closed_form_propagator(g, n, t).data @ psi, (2, n))


for g in (0.02, 0.01, 0.005, 0.0025):
    d = math.sqrt(max(1 - fidelity(exact(1, g), first_order_pt_state(1, alpha, g, t, n)), 0.0))
    print(f"gt = {g * t:.4f}  sqrt(1 - F) = {d:.3e}")
for spin in (0, 1):
    deficit = 1 - purity(partial_trace(exact(spin, 0.01).projector(), 0))
    print(f"|{spin}>|alpha>: spin purity deficit at gt = 0.05 is {deficit:.2e}")
