"""
Time evolution of the spin-oscillator model.

Exact dynamics use a single eigendecomposition of the (time-independent)
Hamiltonian: every grid sample is reached as ``V exp(-i E t) V^dag`` applied
to the initial state, so no error accumulates along the grid. Mixed initial
states are propagated as an ensemble of eigenvectors of the initial density
matrix, which keeps the memory footprint at ``samples x rank x dim``.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import floor

import numpy as np

from .errors import DimensionError, IntegrationError
from .models import CUTOFF_THRESHOLD, SystemParams, boundary_population
from .quantum_core import (
    SIGMA_X,
    SIGMA_Z,
    DensityMatrix,
    Operator,
    StateVector,
    coherent_state,
    ladder_operators,
)

#: Largest number of samples a :class:`TimeGrid` may hold.
MAX_SAMPLES = 40_000


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t0, t0 + step, ...`` up to and including ``t1`` (when aligned)."""

    t0: float
    t1: float
    step: float

    def __post_init__(self):
        if not self.t1 > self.t0:
            raise ValueError("t1 must exceed t0")
        if not self.step > 0:
            raise ValueError("step must be positive")
        if self.samples > MAX_SAMPLES:
            raise ValueError(f"grid has {self.samples} samples, more than MAX_SAMPLES={MAX_SAMPLES}")

    @property
    def samples(self):
        return int(floor((self.t1 - self.t0) / self.step + 1e-9)) + 1

    @property
    def times(self):
        return self.t0 + self.step * np.arange(self.samples)

    def halved(self):
        return TimeGrid(self.t0, self.t1, self.step / 2)


def _eigh_checked(H, tol=1e-10):
    h = H.data if isinstance(H, Operator) else np.asarray(H, dtype=complex)
    if np.max(np.abs(h - h.conj().T), initial=0.0) > tol:
        raise ValueError("Hamiltonian is not Hermitian")
    return np.linalg.eigh((h + h.conj().T) / 2)


def eigen_propagator(H, t):
    """U(t) = V exp(-i Lambda t) V^dag for Hermitian ``H``."""
    evals, vecs = _eigh_checked(H)
    return Operator((vecs * np.exp(-1j * evals * t)) @ vecs.conj().T, H.dims)


def _ensemble(initial, rel_tol=1e-14):
    if isinstance(initial, StateVector):
        return np.ones(1), initial.data[None, :]
    w, v = np.linalg.eigh((initial.data + initial.data.conj().T) / 2)
    keep = w > rel_tol * w.max()
    w = w[keep]
    return w / w.sum(), v[:, keep].T.copy()


class Trajectory:
    """Exact trajectory stored as a time-dependent pure-state ensemble.

    ``states[t, k]`` is the k-th ensemble member at sample ``t`` with weight
    ``weights[k]``; ``rho(t) = sum_k weights[k] |states[t,k]><states[t,k]|``.
    Reduced states of the two factors of a bipartite space are formed on
    demand.
    """

    def __init__(self, grid, times, weights, states, dims, hamiltonian=None, threshold=CUTOFF_THRESHOLD):
        self.grid = grid
        self.times = times
        self.weights = weights
        self.states = states
        self.dims = tuple(dims)
        self.hamiltonian = hamiltonian
        self.threshold = threshold

    def __len__(self):
        return len(self.times)

    def _blocks(self):
        d1, d2 = self.dims
        return self.states.reshape(len(self.times), len(self.weights), d1, d2)

    def total_state(self, i):
        v = self.states[i]
        rho = np.einsum("k,ki,kj->ij", self.weights, v, v.conj())
        return DensityMatrix((rho + rho.conj().T) / 2, self.dims)

    @property
    def reduced_spin(self):
        """(samples, d1, d1) array of factor-0 reduced states."""
        psi = self._blocks()
        return np.einsum("k,tkai,tkbi->tab", self.weights, psi, psi.conj())

    def reduced(self, i, keep):
        psi = self._blocks()[i]
        if keep == 0:
            rho = np.einsum("k,kai,kbi->ab", self.weights, psi, psi.conj())
        elif keep == 1:
            rho = np.einsum("k,kai,kaj->ij", self.weights, psi, psi.conj())
        else:
            raise DimensionError(f"invalid factor index {keep}")
        return DensityMatrix((rho + rho.conj().T) / 2, (self.dims[keep],))

    def reduced_osc(self, i):
        return self.reduced(i, 1)

    def purities(self):
        """(samples, 2) array of the two reduced-state purities."""
        psi = self._blocks()
        w = self.weights
        m = np.einsum("tkai,tlbi->tklab", psi, psi.conj())
        rho1 = np.einsum("k,tkkab->tab", w, m)
        p1 = np.einsum("tab,tba->t", rho1, rho1).real
        p2 = np.einsum("k,l,tklab->t", w, w, np.abs(m) ** 2).real
        return np.stack([p1, p2], axis=1)

    def expect(self, op):
        """Expectation value series of a composite-space operator."""
        o = op.data if isinstance(op, Operator) else np.asarray(op)
        ov = self.states @ o.T
        return np.einsum("k,tki,tki->t", self.weights, self.states.conj(), ov).real

    def osc_populations(self):
        psi = self._blocks()
        return np.einsum("k,tkai->ti", self.weights, np.abs(psi) ** 2)

    def boundary_population(self):
        """Summed occupation of the two highest Fock levels per sample."""
        return boundary_population(self.osc_populations())

    def first_tainted_time(self, threshold=None):
        thr = self.threshold if threshold is None else threshold
        bad = np.flatnonzero(self.boundary_population() >= thr)
        return float(self.times[bad[0]]) if bad.size else None

    @property
    def tainted(self):
        return self.first_tainted_time() is not None


def evolve(initial, H, grid, threshold=CUTOFF_THRESHOLD):
    """Propagate ``initial`` under time-independent ``H`` along ``grid``.

    Parameters
    ----------
    initial : DensityMatrix or StateVector
    H : Operator
        Hermitian Hamiltonian with the same dims as ``initial``.
    grid : TimeGrid
    threshold : float
        Boundary population above which the trajectory counts as tainted.
    """
    if initial.dims != H.dims:
        raise DimensionError(f"state dims {initial.dims} do not match Hamiltonian dims {H.dims}")
    evals, vecs = _eigh_checked(H)
    weights, members = _ensemble(initial)
    coeffs = members @ vecs.conj()  # (K, d): <E_j|psi_k>
    times = grid.times
    phases = np.exp(-1j * np.outer(times, evals))  # (T, d)
    states = np.einsum("ij,tj,kj->tki", vecs, phases, coeffs, optimize=True)
    if len(H.dims) != 2:
        dims = (H.dims[0], int(np.prod(H.dims[1:])))
    else:
        dims = H.dims
    return Trajectory(grid, times, weights, states, dims, hamiltonian=H, threshold=threshold)


def free_propagator(omega_s, omega_o, cutoff, t):
    """exp(-i (omega_s/2 sigma_z + omega_o (a^dag a + 1/2)) t) on (2, cutoff)."""
    e_s = omega_s / 2 * np.diag(SIGMA_Z).real
    e_o = omega_o * (np.arange(cutoff) + 0.5)
    energies = (e_s[:, None] + e_o[None, :]).ravel()
    return Operator(np.diag(np.exp(-1j * energies * t)), (2, cutoff))


def jcm_closed_form_propagator(g, cutoff, t):
    """Resonant Jaynes-Cummings propagator in the interaction picture.

    Spin-block form, with A = sqrt(a^dag a + 1) and B = sqrt(a^dag a)::

        [ cos(g t B)                  -i a^dag sin(g t A) A^-1 ]
        [ -i sin(g t A) A^-1 a        cos(g t A)               ]

    The Schroedinger-picture propagator is ``free_propagator(...) @ U``.
    Matrix elements touching the top Fock level differ from the evolution
    generated by the truncated Hamiltonian.
    """
    if cutoff < 2:
        raise ValueError("cutoff must be at least 2")
    n = np.arange(cutoff, dtype=float)
    gt = g * t
    u = np.zeros((2 * cutoff, 2 * cutoff), dtype=complex)
    u[:cutoff, :cutoff] = np.diag(np.cos(gt * np.sqrt(n)))
    u[cutoff:, cutoff:] = np.diag(np.cos(gt * np.sqrt(n + 1)))
    m = np.arange(cutoff - 1)
    # |1,m> -> |0,m+1> and |0,m+1> -> |1,m>, both at Rabi frequency g sqrt(m+1)
    s = -1j * np.sin(gt * np.sqrt(m + 1))
    u[m + 1, cutoff + m] = s
    u[cutoff + m, m + 1] = s
    return Operator(u, (2, cutoff))


def z_shift(params):
    """Coherent-amplitude shifts (beta_minus, beta_plus) of the z-SOM branches."""
    b = params.lam / np.sqrt(2.0 * params.mass * params.omega_o ** 3)
    return -b, b


def z_som_branch_amplitudes(params, t):
    """Coherent amplitudes of the spin-|0> and spin-|1> oscillator branches."""
    rot = np.exp(-1j * params.omega_o * np.asarray(t))
    return tuple((params.alpha + b) * rot - b for b in z_shift(params))


def z_som_analytic_state(params, t, cutoff):
    """Closed-form z-SOM state for the initial state diag(c, 1-c) (x) |alpha><alpha|.

    Each spin block carries a coherent oscillator state
    ``|(alpha + beta) e^{-i omega_o t} - beta>``; global phases are dropped,
    which is exact because the initial spin state has no coherences.
    """
    if params.kappa != 0:
        raise ValueError("z_som_analytic_state requires kappa = 0")
    a_minus, a_plus = z_som_branch_amplitudes(params, t)
    v_minus = coherent_state(a_minus, cutoff).data
    v_plus = coherent_state(a_plus, cutoff).data
    rho = np.zeros((2 * cutoff, 2 * cutoff), dtype=complex)
    rho[:cutoff, :cutoff] = params.c * np.outer(v_minus, v_minus.conj())
    rho[cutoff:, cutoff:] = (1.0 - params.c) * np.outer(v_plus, v_plus.conj())
    return DensityMatrix(rho, (2, cutoff))


@dataclass(frozen=True)
class FAState:
    rho_spin: DensityMatrix
    psi_osc: StateVector


class FATrajectory:
    """Factorization-approximation trajectory; indexable as a sequence of :class:`FAState`."""

    def __init__(self, times, rho_spin, psi_osc, x_op, max_error):
        self.times = times
        self.rho_spin = rho_spin
        self.psi_osc = psi_osc
        self._x = x_op
        self.max_error = max_error

    def __len__(self):
        return len(self.times)

    def __getitem__(self, i):
        n = self.psi_osc.shape[1]
        return FAState(
            DensityMatrix(self.rho_spin[i], (2,)),
            StateVector(self.psi_osc[i], (n,), normalize=True),
        )

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @property
    def x_expect(self):
        psi = self.psi_osc
        return np.einsum("ti,ij,tj->t", psi.conj(), self._x, psi).real

    @property
    def norm_drift(self):
        return np.abs(np.linalg.norm(self.psi_osc, axis=1) - 1.0)


def _rk4(f, y, h):
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def fa_evolve(params: SystemParams, grid: TimeGrid, cutoff: int, spin_state=None, tol=1e-8):
    """Integrate the semi-mixed factorization-approximation equations.

    The spin (mixed) and oscillator (pure) evolve under mutual mean-field
    Hamiltonians::

        i d/dt rho_s   = [omega_s/2 sigma_z + lam <x>(t) S, rho_s]
        i d/dt |psi_o> = (H_o + lam tr(S rho_s) x) |psi_o>

    with ``S = sigma_z + kappa sigma_x``. Classic RK4 with the grid step;
    each step is repeated as two half steps and the difference (divided by
    15) serves as the local error estimate.

    Raises
    ------
    IntegrationError
        If a local error estimate exceeds ``tol``.
    """
    p = params
    a, adag, x = ladder_operators(cutoff, p.mass, p.omega_o)
    h_o = p.omega_o * (adag.data @ a.data + 0.5 * np.eye(cutoff))
    xm = x.data
    S = SIGMA_Z + p.kappa * SIGMA_X
    h_s = p.omega_s / 2 * SIGMA_Z
    if spin_state is None:
        spin_state = np.diag([p.c, 1.0 - p.c])
    rho0 = DensityMatrix(np.asarray(spin_state, dtype=complex), (2,)).data
    psi0 = coherent_state(p.alpha, cutoff).data

    def rhs(y):
        rho = y[:4].reshape(2, 2)
        psi = y[4:]
        xexp = np.real(np.vdot(psi, xm @ psi))
        hs = h_s + p.lam * xexp * S
        drho = -1j * (hs @ rho - rho @ hs)
        sexp = np.real(np.trace(S @ rho))
        dpsi = -1j * (h_o @ psi + p.lam * sexp * (xm @ psi))
        return np.concatenate([drho.ravel(), dpsi])

    times = grid.times
    h = grid.step
    y = np.concatenate([rho0.ravel(), psi0])
    out = np.empty((len(times), y.size), dtype=complex)
    out[0] = y
    max_err = 0.0
    for i in range(1, len(times)):
        full = _rk4(rhs, y, h)
        half = _rk4(rhs, _rk4(rhs, y, h / 2), h / 2)
        err = np.max(np.abs(half - full)) / 15.0
        if err > tol:
            raise IntegrationError(
                f"local error estimate {err:.2e} exceeds tol={tol:g} at t={times[i]:.6g}; "
                "reduce the grid step"
            )
        max_err = max(max_err, err)
        y = half
        out[i] = y
    rho = out[:, :4].reshape(-1, 2, 2)
    rho = (rho + rho.conj().transpose(0, 2, 1)) / 2
    return FATrajectory(times, rho, out[:, 4:], xm, max_err)
