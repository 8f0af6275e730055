"""
Local decomposition of subsystem energy changes into work and heat.

For a bipartite state rho = rho_1 (x) rho_2 + C_12 the exact local equation
of motion of subsystem 1 reads

    d/dt rho_1 = -i [H_1 + H_eff(t), rho_1] + L_eff[rho]

with the mean-field Hamiltonian H_eff = tr_2{H_12 (1 (x) rho_2)} and the
correlation-driven generator L_eff[rho] = -i tr_2 [H_12, C_12]. The part of
H_eff commuting with H_1 is absorbed into the local energy H_1' = H_1 + H_eff_a;
changes driven by H_eff count as work, those driven by L_eff as heat:

    W_dot = tr{ dH_eff_a/dt rho_1 - i [H_1', H_eff_b] rho_1 }
    Q_dot = tr{ H_1' L_eff[rho] }

"Factor" arguments (``which``) select the subsystem of interest: 0 for the
first tensor factor (the spin), 1 for the second.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DimensionError
from .quantum_core import (
    DensityMatrix,
    Operator,
    operator_schmidt,
    partial_trace,
    swap_factors,
)

#: Largest tolerated imaginary residue of a flux (relative to max(1, |flux|)).
IMAG_TOL = 1e-10


@dataclass(frozen=True)
class LembasSplit:
    h_local: Operator
    h_eff: Operator
    h_eff_a: Operator
    h_eff_b: Operator
    h_prime: Operator


class FluxSample(NamedTuple):
    t: float
    w_dot: float
    q_dot: float
    u_dot: float


@dataclass(frozen=True)
class FluxSeries:
    """Sampled work/heat fluxes of one subsystem on a uniform grid."""

    times: np.ndarray
    w_dot: np.ndarray
    q_dot: np.ndarray
    u_dot: np.ndarray
    step: float
    first_tainted_time: float | None = None

    def __len__(self):
        return len(self.times)

    def __getitem__(self, i):
        return FluxSample(float(self.times[i]), float(self.w_dot[i]), float(self.q_dot[i]), float(self.u_dot[i]))

    @property
    def balance_residual(self):
        return np.abs(self.u_dot - (self.w_dot + self.q_dot))

    @classmethod
    def from_samples(cls, samples, first_tainted_time=None):
        samples = list(samples)
        t = np.array([s.t for s in samples], dtype=float)
        step = float(t[1] - t[0]) if len(t) > 1 else 0.0
        return cls(
            t,
            np.array([s.w_dot for s in samples], dtype=float),
            np.array([s.q_dot for s in samples], dtype=float),
            np.array([s.u_dot for s in samples], dtype=float),
            step,
            first_tainted_time,
        )


def _other(which):
    if which not in (0, 1):
        raise DimensionError(f"factor index must be 0 or 1, got {which}")
    return 1 - which


def _local_embed(op_local, which, dims):
    eye = np.eye(dims[_other(which)], dtype=complex)
    return np.kron(op_local, eye) if which == 0 else np.kron(eye, op_local)


def effective_hamiltonian(H12, rho_other, which=0):
    """Mean-field Hamiltonian tr_other{H12 (rho_other on the other factor)}."""
    dims = H12.dims
    other = _other(which)
    if len(dims) != 2 or rho_other.dims != (dims[other],):
        raise DimensionError(f"rho_other dims {rho_other.dims} incompatible with H12 dims {dims}")
    embedded = Operator(_local_embed(rho_other.data, other, dims), dims)
    return partial_trace(H12 @ embedded, which)


def _eigenspace_projectors(h_local, tol=1e-9):
    evals, vecs = np.linalg.eigh((h_local + h_local.conj().T) / 2)
    scale = max(1.0, np.max(np.abs(evals)))
    groups = [[0]]
    for i in range(1, len(evals)):
        if evals[i] - evals[groups[-1][-1]] <= tol * scale:
            groups[-1].append(i)
        else:
            groups.append([i])
    return [vecs[:, g] @ vecs[:, g].conj().T for g in groups]


def pinch(op, h_local):
    """Block-diagonal projection of ``op`` onto the eigenspaces of ``h_local``.

    Works on a single matrix or a stack of matrices (leading axes).
    """
    x = op.data if isinstance(op, Operator) else np.asarray(op)
    h = h_local.data if isinstance(h_local, Operator) else np.asarray(h_local)
    out = sum(p @ x @ p for p in _eigenspace_projectors(h))
    if isinstance(op, Operator):
        return Operator(out, op.dims)
    return out


def split_commuting(h_eff, h_local):
    """(h_eff_a, h_eff_b): the part of ``h_eff`` commuting with ``h_local`` and the rest.

    The commuting part is the pinching of ``h_eff`` onto the eigenspaces of
    ``h_local``, so ``[h_eff_a, h_local] = 0`` holds by construction, also
    for degenerate ``h_local``.
    """
    if h_eff.dims != h_local.dims:
        raise DimensionError("h_eff and h_local dims differ")
    a = pinch(h_eff, h_local)
    return a, h_eff - a


def incoherent_generator(H12, rho_total, which=0):
    """L_eff[rho] = -i tr_other [H12, rho - rho_1 (x) rho_2] on factor ``which``."""
    if H12.dims != rho_total.dims:
        raise DimensionError("H12 and rho_total dims differ")
    r1 = partial_trace(rho_total, 0)
    r2 = partial_trace(rho_total, 1)
    corr = rho_total.data - np.kron(r1.data, r2.data)
    comm = H12.data @ corr - corr @ H12.data
    return partial_trace(Operator(-1j * comm, H12.dims), which)


def _liouville(H_total, rho_total):
    h, r = H_total.data, rho_total.data
    return Operator(-1j * (h @ r - r @ h), H_total.dims)


def h_eff_time_derivative(H12, rho_total, H_total, which=0, h_local=None):
    """Analytic d/dt H_eff = tr_other{H12 (d/dt rho_other)}.

    The other factor's derivative is the partial trace of the exact
    Liouville-von Neumann derivative -i [H_total, rho]. If ``h_local`` is
    given, the result is pinched onto its eigenspaces (the derivative of the
    commuting part, since ``h_local`` is time independent).
    """
    other = _other(which)
    rho_dot = partial_trace(_liouville(H_total, rho_total), other)
    embedded = Operator(_local_embed(rho_dot.data, other, H12.dims), H12.dims)
    d = partial_trace(H12 @ embedded, which)
    return pinch(d, h_local) if h_local is not None else d


def lembas_split(H12, rho_total, h_local, which=0):
    rho_other = partial_trace(rho_total, _other(which))
    h_eff = effective_hamiltonian(H12, rho_other, which)
    a, b = split_commuting(h_eff, h_local)
    return LembasSplit(h_local, h_eff, a, b, h_local + a)


def _real(value, name):
    value = complex(value)
    if abs(value.imag) > IMAG_TOL * max(1.0, abs(value.real)):
        raise ValueError(f"{name} has imaginary residue {value.imag:.3e}; non-Hermitian input?")
    return value.real


def fluxes(state, H_total, H12, h_split, which=0, t=0.0):
    """Work flux, heat flux and local energy change rate for one snapshot."""
    rho = state.data
    rho1 = partial_trace(state, which).data
    hp = h_split.h_prime.data
    hb = h_split.h_eff_b.data
    hdot_a = h_eff_time_derivative(H12, state, H_total, which, h_split.h_local).data
    leff = incoherent_generator(H12, state, which).data
    rho1_dot = partial_trace(_liouville(H_total, DensityMatrix(rho, state.dims)), which).data
    work_local = np.trace(hdot_a @ rho1)
    w = work_local - 1j * np.trace((hp @ hb - hb @ hp) @ rho1)
    q = np.trace(hp @ leff)
    u = work_local + np.trace(hp @ rho1_dot)
    return FluxSample(float(t), _real(w, "w_dot"), _real(q, "q_dot"), _real(u, "u_dot"))


def _tr(stack):
    return np.einsum("...ii->...", stack)


def flux_series(trajectory, H_total, H12, h_local, which=0):
    """Fluxes along an exact :class:`~somwork.propagation.Trajectory`.

    Vectorized over the grid. The coupling is split as H12 = sum_j A_j (x) B_j
    (operator-Schmidt decomposition), so every partial trace reduces to small
    matrix products of the ensemble amplitudes.
    """
    d1, d2 = trajectory.dims
    n_t, n_k = len(trajectory.times), len(trajectory.weights)
    psi = trajectory.states
    H, V = H_total, H12
    if which == 1:
        H, V = swap_factors(H_total), swap_factors(H12)
        psi = psi.reshape(n_t, n_k, d1, d2).transpose(0, 1, 3, 2).reshape(n_t, n_k, d1 * d2)
        d1, d2 = d2, d1
    elif which != 0:
        raise DimensionError(f"factor index must be 0 or 1, got {which}")
    hl = h_local.data if isinstance(h_local, Operator) else np.asarray(h_local)
    if hl.shape != (d1, d1):
        raise DimensionError("h_local does not match the selected factor")
    w = trajectory.weights
    blocks = psi.reshape(n_t, n_k, d1, d2)
    phi = (psi @ H.data.T).reshape(n_t, n_k, d1, d2)

    rho1 = np.einsum("k,tkai,tkbi->tab", w, blocks, blocks.conj())
    rho1_dot = -1j * np.einsum("k,tkai,tkbi->tab", w, phi, blocks.conj())
    rho1_dot = rho1_dot + rho1_dot.conj().transpose(0, 2, 1)

    h_eff = np.zeros((n_t, d1, d1), dtype=complex)
    h_eff_dot = np.zeros_like(h_eff)
    tr2_comm = np.zeros_like(h_eff)
    for A, B in operator_schmidt(V):
        bpsi = blocks @ B.T  # (1 (x) B)|psi>
        b = np.einsum("k,tkai,tkai->t", w, blocks.conj(), bpsi)
        b_dot = -1j * np.einsum("k,tkai,tkai->t", w, blocks.conj(), phi @ B.T) + 1j * np.einsum(
            "k,tkai,tkai->t", w, phi.conj(), bpsi
        )
        G = np.einsum("k,tkai,tkbi->tab", w, bpsi, blocks.conj())
        h_eff += b[:, None, None] * A
        h_eff_dot += b_dot[:, None, None] * A
        tr2_comm += A @ G - G @ A
    leff = -1j * tr2_comm + 1j * (h_eff @ rho1 - rho1 @ h_eff)

    h_a = pinch(h_eff, hl)
    h_b = h_eff - h_a
    hdot_a = pinch(h_eff_dot, hl)
    h_prime = hl + h_a
    work_local = _tr(hdot_a @ rho1)
    w_dot = work_local - 1j * _tr((h_prime @ h_b - h_b @ h_prime) @ rho1)
    q_dot = _tr(h_prime @ leff)
    u_dot = work_local + _tr(h_prime @ rho1_dot)
    for name, arr in (("w_dot", w_dot), ("q_dot", q_dot), ("u_dot", u_dot)):
        if np.any(np.abs(arr.imag) > IMAG_TOL * np.maximum(1.0, np.abs(arr.real))):
            raise ValueError(f"{name} has imaginary residue {np.max(np.abs(arr.imag)):.3e}")
    return FluxSeries(
        trajectory.times,
        w_dot.real.copy(),
        q_dot.real.copy(),
        u_dot.real.copy(),
        float(trajectory.grid.step),
        trajectory.first_tainted_time(),
    )
