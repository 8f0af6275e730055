"""
Spin-oscillator model (SOM) Hamiltonians and parameter bookkeeping.

The total Hamiltonian is

    H = omega_s/2 sigma_z + H_int + omega_o (a^dag a + 1/2)

with H_int = lam sigma_z x (z-SOM), lam (sigma_z + kappa sigma_x) x (xz-SOM),
or the resonant Jaynes-Cummings coupling g (sigma_+ a + sigma_- a^dag) obtained
from the xz-SOM in rotating-wave approximation. The spin is factor 0, the
oscillator factor 1.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from math import ceil
from typing import NamedTuple

import numpy as np

from .errors import CutoffError
from .quantum_core import (
    IDENTITY_2,
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    DensityMatrix,
    Operator,
    coherent_state,
    ladder_operators,
    tensor,
)

#: Default occupation threshold used to size the Fock space.
CUTOFF_THRESHOLD = 1e-6
MAX_CUTOFF = 120


class ModelKind(enum.Enum):
    Z_SOM = "z"
    XZ_SOM = "xz"
    JCM_RWA = "jcm"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip()
        for kind in cls:
            if key.lower() in (kind.value, kind.name.lower()):
                return kind
        raise ValueError(f"unknown model kind {value!r}")


@dataclass(frozen=True)
class SystemParams:
    """Parameters of one SOM instance (hbar = 1).

    ``c`` is the ground-state weight of the initial spin state
    diag(c, 1 - c); ``alpha`` the amplitude of the initial coherent state.
    """

    omega_s: float = 1.0
    omega_o: float = 1.0
    lam: float = 0.0
    kappa: float = 0.0
    mass: float = 1.0
    alpha: complex = 0.0
    c: float = 1.0

    def __post_init__(self):
        for name in ("omega_s", "omega_o", "mass"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.c <= 1.0:
            raise ValueError("c must lie in [0, 1]")
        for name in ("omega_s", "omega_o", "lam", "kappa", "mass", "c"):
            object.__setattr__(self, name, float(getattr(self, name)))
        object.__setattr__(self, "alpha", complex(self.alpha))

    def replace(self, **changes):
        return replace(self, **changes)

    def as_dict(self):
        alpha = self.alpha
        return {
            "omega_s": self.omega_s,
            "omega_o": self.omega_o,
            "lam": self.lam,
            "kappa": self.kappa,
            "mass": self.mass,
            "alpha": alpha.real if alpha.imag == 0 else [alpha.real, alpha.imag],
            "c": self.c,
        }


class DerivedConstants(NamedTuple):
    g: float
    xi: float
    gamma: float
    Omega: float
    Delta: float


def derived_constants(params):
    """JCM coupling g, dimensionless coupling xi, shift gamma, and Omega/Delta."""
    p = params
    xi = p.lam ** 2 / (p.mass * p.omega_o ** 3)
    return DerivedConstants(
        g=p.lam * p.kappa / np.sqrt(2.0 * p.mass * p.omega_o),
        xi=xi,
        gamma=np.sqrt(xi / 2.0) * (1.0 - 2.0 * p.c),
        Omega=p.omega_s + p.omega_o,
        Delta=p.omega_s - p.omega_o,
    )


class SOMHamiltonian(NamedTuple):
    """Total Hamiltonian and its local/interaction parts.

    ``h_spin`` and ``h_osc`` act on their own factor; ``h_int`` and ``total``
    on the composite (2, cutoff) space.
    """

    total: Operator
    h_spin: Operator
    h_osc: Operator
    h_int: Operator


def som_hamiltonian(params, kind, cutoff):
    kind = ModelKind.parse(kind)
    p = params
    a, adag, x = ladder_operators(cutoff, p.mass, p.omega_o)
    eye_o = Operator(np.eye(cutoff), (cutoff,))
    if kind is ModelKind.JCM_RWA:
        if p.omega_s != p.omega_o:
            raise ValueError(
                f"JCM_RWA requires resonance omega_s == omega_o, got {p.omega_s} != {p.omega_o}"
            )
        g = derived_constants(p).g
        h_int = g * (tensor(Operator(SIGMA_PLUS, (2,)), a) + tensor(Operator(SIGMA_MINUS, (2,)), adag))
    elif kind is ModelKind.Z_SOM:
        h_int = p.lam * tensor(Operator(SIGMA_Z, (2,)), x)
    else:
        h_int = p.lam * tensor(Operator(SIGMA_Z + p.kappa * SIGMA_X, (2,)), x)
    h_spin = Operator(p.omega_s / 2 * SIGMA_Z, (2,))
    h_osc = p.omega_o * (adag @ a + 0.5 * eye_o)
    total = tensor(h_spin, eye_o) + tensor(Operator(IDENTITY_2, (2,)), h_osc) + h_int
    return SOMHamiltonian(total, h_spin, h_osc, h_int)


def build_hamiltonian(params, kind, cutoff):
    """Total SOM Hamiltonian on the (2, cutoff) space.

    ``Z_SOM`` uses only ``lam`` (kappa is ignored); ``JCM_RWA`` requires
    exact resonance and uses ``g = lam kappa / sqrt(2 m omega_o)``.
    """
    return som_hamiltonian(params, kind, cutoff).total


def initial_state(params, cutoff, spin_state=None):
    """diag(c, 1 - c) (x) |alpha><alpha|, or ``spin_state`` (x) |alpha><alpha|."""
    if spin_state is None:
        spin_state = np.diag([params.c, 1.0 - params.c])
    spin = DensityMatrix(np.asarray(spin_state, dtype=complex), (2,))
    return tensor(spin, coherent_state(params.alpha, cutoff).projector())


def excitation_number(cutoff):
    """sigma_z/2 + a^dag a, conserved by the JCM."""
    a, adag, _ = ladder_operators(cutoff)
    return tensor(Operator(SIGMA_Z / 2, (2,)), Operator(np.eye(cutoff), (cutoff,))) + tensor(
        Operator(IDENTITY_2, (2,)), adag @ a
    )


class CanonicalCoupling(NamedTuple):
    lam: float
    kappa: float
    phi: float
    shift: float


def z_rotation(phi):
    """Spin unitary exp(-i phi sigma_z / 2), a rotation by ``phi`` about z."""
    return np.diag(np.exp(-0.5j * phi * np.diag(SIGMA_Z)))


def pauli_coefficients(s, tol=1e-12):
    """Real coefficients (c_0, c_x, c_y, c_z) of a Hermitian 2x2 matrix."""
    s = np.asarray(s, dtype=complex)
    basis = (IDENTITY_2, SIGMA_X, SIGMA_Y, SIGMA_Z)
    return np.array([np.trace(b @ s) / 2 for b in basis])


def canonicalize_coupling(s_coefficients, tol=1e-12):
    """Bring a spin coupling operator to the xz normal form.

    The coupling ``s = c_0 1 + c_x sigma_x + c_y sigma_y + c_z sigma_z``
    (Pauli-basis coefficients, real for Hermitian ``s``) satisfies

        U (c_x sigma_x + c_y sigma_y + c_z sigma_z) U^dag = lam (sigma_z + kappa sigma_x)

    with ``U = z_rotation(phi)``. ``kappa >= 0``; the sign of the transverse
    part is absorbed in ``phi``. The identity part ``c_0`` is returned as
    ``shift``: multiplied by the oscillator coordinate it is local to the
    oscillator.

    Raises
    ------
    ValueError
        If the coefficients describe a non-Hermitian operator, or ``c_z = 0``
        with a nonzero transverse part (no finite kappa exists).
    """
    coeffs = np.asarray(s_coefficients, dtype=complex).ravel()
    if coeffs.size != 4:
        raise ValueError("expected four Pauli-basis coefficients")
    if np.max(np.abs(coeffs.imag)) > tol:
        raise ValueError("coupling operator is not Hermitian (complex Pauli coefficients)")
    c0, cx, cy, cz = coeffs.real
    r = np.hypot(cx, cy)
    if r <= tol:
        return CanonicalCoupling(float(cz), 0.0, 0.0, float(c0))
    if abs(cz) <= tol:
        raise ValueError("pure transverse coupling has no finite kappa in the xz normal form")
    target = 0.0 if cz > 0 else np.pi
    phi = np.arctan2(cy, cx) - target
    phi = float((phi + np.pi) % (2 * np.pi) - np.pi)
    if np.isclose(phi, -np.pi):
        phi = np.pi
    return CanonicalCoupling(float(cz), float(r / abs(cz)), phi, float(c0))


def coupling_hamiltonian(omega_s, omega_o, mass, s, cutoff, osc_shift=0.0):
    """omega_s/2 sigma_z + s (x) x + omega_o (a^dag a + 1/2) + osc_shift x."""
    a, adag, x = ladder_operators(cutoff, mass, omega_o)
    eye_o = Operator(np.eye(cutoff), (cutoff,))
    h_osc = omega_o * (adag @ a + 0.5 * eye_o) + osc_shift * x
    return (
        tensor(Operator(omega_s / 2 * SIGMA_Z, (2,)), eye_o)
        + tensor(Operator(np.asarray(s, dtype=complex), (2,)), x)
        + tensor(Operator(IDENTITY_2, (2,)), h_osc)
    )


def cutoff_floor(alpha):
    a = abs(complex(alpha))
    return int(ceil(a * a + 6 * a + 10))


def boundary_population(rho_osc_diag):
    """Population of the two highest Fock levels from diagonal(s) of rho_osc."""
    d = np.asarray(rho_osc_diag).real
    return d[..., -1] + d[..., -2]


def choose_cutoff(params, horizon, threshold=CUTOFF_THRESHOLD, kind=None, max_cutoff=MAX_CUTOFF):
    """Smallest Fock cutoff keeping the boundary population below ``threshold``.

    A pilot run over ``[0, horizon]`` is repeated with doubling cutoffs,
    starting from ``ceil(|alpha|^2 + 6|alpha| + 10)``; the smallest passing
    value is then located by bisection. The boundary population is the summed
    occupation of the two highest Fock levels of the reduced oscillator state.
    """
    from .propagation import TimeGrid, evolve

    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    if kind is None:
        kind = ModelKind.XZ_SOM if params.kappa else ModelKind.Z_SOM
    kind = ModelKind.parse(kind)
    omega_max = max(params.omega_s, params.omega_o, abs(derived_constants(params).g))
    step = min(0.25 / omega_max, horizon / 200.0) if horizon > 0 else 1.0
    grid = TimeGrid(0.0, max(horizon, step), step)

    def passes(n):
        try:
            rho0 = initial_state(params, n)
        except CutoffError:
            return False
        traj = evolve(rho0, build_hamiltonian(params, kind, n), grid)
        return float(np.max(traj.boundary_population())) < threshold

    lo = None
    n = max(cutoff_floor(params.alpha), 2)
    if n > max_cutoff:
        raise CutoffError(f"cutoff floor {n} for alpha={params.alpha} exceeds max_cutoff={max_cutoff}")
    while not passes(n):
        if n >= max_cutoff:
            raise CutoffError(
                f"no cutoff <= {max_cutoff} keeps boundary population below {threshold:g}"
            )
        lo = n
        n = min(2 * n, max_cutoff)
    hi = n
    if lo is None:
        return hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if passes(mid):
            hi = mid
        else:
            lo = mid
    return hi
