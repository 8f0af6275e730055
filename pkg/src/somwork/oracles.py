"""
Closed-form reference results used to validate the numerical engine.

* oscillator purity of the z-SOM for diagonal initial spin states;
* the peak-to-peak modulation ("stroke") of the spin's effective splitting
  under the factorization approximation;
* first-order perturbation theory for the resonant JCM;
* the two ways of driving the dimensionless coupling xi to zero.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import CutoffError
from .measures import min_purity_bound
from .models import SystemParams, derived_constants
from .quantum_core import NORM_DEFICIT_TOL, StateVector, coherent_state


def analytic_purity(params: SystemParams, t):
    """Oscillator purity of the z-SOM, scalar or array valued in ``t``.

    P(t) = c^2 + (1-c)^2 + 2 c (1-c) exp(-8 xi sin^2(omega_o t / 2))
    """
    if params.kappa != 0:
        raise ValueError("analytic purity holds for kappa = 0 only")
    c = params.c
    xi = derived_constants(params).xi
    decay = np.exp(-8.0 * xi * np.sin(params.omega_o * np.asarray(t, dtype=float) / 2) ** 2)
    out = c * c + (1 - c) ** 2 + 2 * c * (1 - c) * decay
    return float(out) if np.ndim(out) == 0 else out


def stroke_amplitude(params: SystemParams):
    """Peak-to-peak amplitude of lam <x>(t) driving the spin's splitting.

    Under the factorization approximation the oscillator sees the constant
    force from lam (1 - 2c) x and oscillates about the shifted equilibrium,
    so the spin's effective field lam <x>(t) swings by

        2 |lam| sqrt(2 / (m omega_o)) |alpha + sign(lam) gamma|

    with gamma = sqrt(xi/2) (1 - 2c). Only real alpha is supported.
    """
    if params.kappa != 0:
        raise ValueError("stroke amplitude holds for kappa = 0 only")
    if params.alpha.imag != 0:
        raise ValueError("stroke amplitude is defined for real alpha only")
    gamma = derived_constants(params).gamma
    shifted = params.alpha.real + np.sign(params.lam) * gamma
    return float(2 * abs(params.lam) * np.sqrt(2.0 / (params.mass * params.omega_o)) * abs(shifted))


def coherent_state_derivative(alpha, cutoff):
    """Fock coefficients of the derivative object d|alpha>/d(alpha*).

    Defined so that a^dag |alpha> = (d/d(alpha*) + alpha*/2) |alpha> holds:
    the n-th coefficient is exp(-|alpha|^2/2) n alpha^(n-1)/sqrt(n!) minus
    alpha*/2 times the coherent amplitude.

    Raises
    ------
    CutoffError
        If ``cutoff`` levels miss more than 1e-9 of the norm of a^dag |alpha>.
    """
    alpha = complex(alpha)
    coh = np.empty(cutoff + 1, dtype=complex)
    coh[0] = np.exp(-abs(alpha) ** 2 / 2)
    for n in range(1, cutoff + 1):
        coh[n] = coh[n - 1] * alpha / np.sqrt(n)
    n = np.arange(cutoff)
    # a^dag |alpha> has coefficients sqrt(n) <n-1|alpha>
    raised = np.zeros(cutoff, dtype=complex)
    raised[1:] = np.sqrt(n[1:]) * coh[: cutoff - 1]
    deficit = (abs(alpha) ** 2 + 1) - np.sum(np.abs(raised) ** 2)
    if deficit > NORM_DEFICIT_TOL * (1 + abs(alpha) ** 2):
        raise CutoffError(f"cutoff {cutoff} too small for a^dag|alpha> at alpha={alpha}")
    return raised - alpha.conjugate() / 2 * coh[:cutoff]


def first_order_pt_state(spin, alpha, g, t, cutoff):
    """Normalized first-order JCM state |spin>|alpha> in the interaction picture.

    |0>|alpha> -> (|0> - i alpha g t |1>) |alpha>
    |1>|alpha> -> (|1> - i alpha*/2 g t |0>) |alpha> - i g t |0> d|alpha>/d(alpha*)
    """
    if spin not in (0, 1):
        raise ValueError("spin must be 0 or 1")
    alpha = complex(alpha)
    coh = coherent_state(alpha, cutoff).data
    gt = g * t
    up, down = np.zeros(cutoff, dtype=complex), np.zeros(cutoff, dtype=complex)
    if spin == 0:
        down = coh.copy()
        up = -1j * alpha * gt * coh
    else:
        up = coh.copy()
        down = -1j * alpha.conjugate() / 2 * gt * coh - 1j * gt * coherent_state_derivative(alpha, cutoff)
    return StateVector(np.concatenate([down, up]), (2, cutoff), normalize=True)


class LimitKind(enum.Enum):
    CLASSICAL = "classical"
    QUANTUM = "quantum"


@dataclass(frozen=True)
class LimitSpec:
    """How to drive xi to zero.

    CLASSICAL multiplies the mass by the scale (and, with ``fixed_ratio``,
    alpha by its square root so that |alpha|^2/m stays fixed). QUANTUM
    multiplies omega_o by the scale and lam by its square root, keeping
    lam^2/omega_o fixed.
    """

    kind: LimitKind
    fixed_ratio: bool = False

    def apply(self, params, scale):
        if not scale > 0:
            raise ValueError("scale must be positive")
        if self.kind is LimitKind.CLASSICAL:
            alpha = params.alpha * np.sqrt(scale) if self.fixed_ratio else params.alpha
            return params.replace(mass=params.mass * scale, alpha=alpha)
        return params.replace(omega_o=params.omega_o * scale, lam=params.lam * np.sqrt(scale))


class LimitRow(NamedTuple):
    scale: float
    params: SystemParams
    xi: float
    p_min: float
    amplitude: float


def quantum_limit_amplitude(params):
    """Limiting stroke amplitude 2 |lam| sqrt(2/(m omega_o)) |alpha| as xi -> 0 at fixed lam^2/omega_o."""
    return float(2 * abs(params.lam) * np.sqrt(2.0 / (params.mass * params.omega_o)) * abs(params.alpha))


def limit_sweep(params, limit, scales):
    """Per scale: the rescaled parameters, xi, minimum purity bound and stroke amplitude."""
    if params.kappa != 0:
        raise ValueError("limit sweeps are defined for kappa = 0")
    rows = []
    for s in scales:
        p = limit.apply(params, s)
        xi = derived_constants(p).xi
        rows.append(LimitRow(float(s), p, xi, min_purity_bound(xi), stroke_amplitude(p)))
    return rows
