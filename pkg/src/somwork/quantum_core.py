"""
Dense operator algebra on finite composite Hilbert spaces.

Every object carries its tensor-factor dimensions so that partial traces and
factor permutations are unambiguous. Spin factors have dimension 2, oscillator
factors the Fock cutoff. Units: hbar = 1.

The spin basis is ordered (|0>, |1>) = (ground, excited), so that
``SIGMA_Z = diag(-1, +1)`` and the spin Hamiltonian ``omega_s/2 * SIGMA_Z``
gives |0> the energy -omega_s/2.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import ceil, prod
from typing import Sequence

import numpy as np

from .errors import CutoffError, DimensionError

#: Largest composite dimension accepted by :func:`tensor` (2 x 120 Fock levels).
MAX_DIMENSION = 240

#: Largest tolerated norm deficit of a truncated coherent state.
NORM_DEFICIT_TOL = 1e-9

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[-1, 0], [0, 1]], dtype=complex)
#: |1><0|, raises the spin from ground to excited state.
SIGMA_PLUS = np.array([[0, 0], [1, 0]], dtype=complex)
SIGMA_MINUS = SIGMA_PLUS.T.copy()
IDENTITY_2 = np.eye(2, dtype=complex)


def _check_dims(dims, size):
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 1 for d in dims):
        raise DimensionError(f"invalid factor dimensions {dims}")
    if prod(dims) != size:
        raise DimensionError(f"dims {dims} do not multiply to {size}")
    return dims


@dataclass(frozen=True, eq=False)
class Operator:
    """Square complex matrix acting on ``prod(dims)``-dimensional space."""

    data: np.ndarray
    dims: tuple

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise DimensionError(f"operator must be square, got {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("operator has non-finite entries")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "dims", _check_dims(self.dims, data.shape[0]))

    @property
    def shape(self):
        return self.data.shape

    def dag(self):
        return Operator(self.data.conj().T, self.dims)

    def tr(self):
        return complex(np.trace(self.data))

    def is_hermitian(self, tol=1e-10):
        return bool(np.max(np.abs(self.data - self.data.conj().T), initial=0.0) <= tol)

    def expect(self, state):
        """Expectation value in a :class:`StateVector` or density matrix."""
        if isinstance(state, StateVector):
            v = state.data
            return complex(v.conj() @ self.data @ v)
        return complex(np.trace(self.data @ np.asarray(_raw(state))))

    def _same(self, other):
        if isinstance(other, Operator) and other.dims != self.dims:
            raise DimensionError(f"dims mismatch {self.dims} vs {other.dims}")
        return _raw(other)

    def __add__(self, other):
        return Operator(self.data + self._same(other), self.dims)

    def __sub__(self, other):
        return Operator(self.data - self._same(other), self.dims)

    def __neg__(self):
        return Operator(-self.data, self.dims)

    def __mul__(self, scalar):
        if isinstance(scalar, (Operator, np.ndarray)):
            return NotImplemented
        return Operator(self.data * scalar, self.dims)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return Operator(self.data / scalar, self.dims)

    def __matmul__(self, other):
        if isinstance(other, StateVector):
            if other.dims != self.dims:
                raise DimensionError(f"dims mismatch {self.dims} vs {other.dims}")
            return StateVector(self.data @ other.data, other.dims, normalize=True)
        return Operator(self.data @ self._same(other), self.dims)

    def __repr__(self):
        return f"Operator(dims={self.dims})"


class DensityMatrix(Operator):
    """Operator validated as a physical state: Hermitian, unit trace, PSD."""

    def __post_init__(self):
        super().__post_init__()
        d = self.data
        if np.max(np.abs(d - d.conj().T), initial=0.0) > 1e-10:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(d) - 1.0) > 1e-9:
            raise ValueError(f"density matrix trace {np.trace(d).real:.3e} != 1")
        if np.linalg.eigvalsh(d).min() < -1e-9:
            raise ValueError("density matrix has negative eigenvalues")

    def __repr__(self):
        return f"DensityMatrix(dims={self.dims})"


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized complex amplitude vector."""

    data: np.ndarray
    dims: tuple
    normalize: bool = False

    def __post_init__(self):
        v = np.asarray(self.data, dtype=complex).ravel()
        nrm = np.linalg.norm(v)
        if self.normalize:
            if nrm == 0:
                raise ValueError("cannot normalize the zero vector")
            v = v / nrm
        elif abs(nrm - 1.0) > 1e-10:
            raise ValueError(f"state vector norm {nrm:.12f} != 1")
        object.__setattr__(self, "data", v)
        object.__setattr__(self, "dims", _check_dims(self.dims, v.size))
        object.__setattr__(self, "normalize", False)

    def projector(self):
        return DensityMatrix(np.outer(self.data, self.data.conj()), self.dims)

    def overlap(self, other):
        return complex(self.data.conj() @ other.data)

    def __repr__(self):
        return f"StateVector(dims={self.dims})"


def _raw(x):
    return x.data if isinstance(x, (Operator, StateVector)) else np.asarray(x)


def as_operator(matrix, dims=None):
    matrix = np.asarray(matrix, dtype=complex)
    return Operator(matrix, dims or (matrix.shape[0],))


def tensor(a, b):
    """Kronecker product; factor dimensions are concatenated as ``a.dims + b.dims``."""
    dims = a.dims + b.dims
    if prod(dims) > MAX_DIMENSION:
        raise DimensionError(
            f"composite dimension {prod(dims)} exceeds MAX_DIMENSION={MAX_DIMENSION}; "
            "check the Fock cutoff"
        )
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        return StateVector(np.kron(a.data, b.data), dims)
    if isinstance(a, StateVector) or isinstance(b, StateVector):
        raise TypeError("cannot tensor a state vector with an operator")
    data = np.kron(a.data, b.data)
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        return DensityMatrix(data, dims)
    return Operator(data, dims)


def partial_trace(rho, keep):
    """Trace out every factor except those listed in ``keep``.

    Parameters
    ----------
    rho : Operator or DensityMatrix
        Operator on a space with at least two factors.
    keep : int or sequence of int
        Index (or indices, in increasing order) of the factors to keep.
    """
    dims = rho.dims
    keep = (keep,) if np.isscalar(keep) else tuple(keep)
    if len(dims) < 2:
        raise DimensionError("partial trace needs at least two factors")
    if not keep or any(k < 0 or k >= len(dims) for k in keep) or len(set(keep)) != len(keep):
        raise DimensionError(f"invalid factor index {keep} for dims {dims}")
    keep = tuple(sorted(keep))
    n = len(dims)
    t = rho.data.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for i in range(n):
        if i not in keep:
            col[i] = row[i]
    out = "".join(row[k] for k in keep) + "".join(col[k] for k in keep)
    red = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    kdims = tuple(dims[k] for k in keep)
    side = prod(kdims)
    red = red.reshape(side, side)
    cls = DensityMatrix if isinstance(rho, DensityMatrix) else Operator
    if cls is DensityMatrix:
        red = (red + red.conj().T) / 2
    return cls(red, kdims)


def purity(rho):
    """tr(rho^2) of a density matrix."""
    d = _raw(rho)
    return float(np.real(np.vdot(d.conj().T, d)))


def commutator(a, b):
    return a @ b - b @ a


def coherent_state(alpha, cutoff):
    """Truncated, renormalized coherent state |alpha> on ``cutoff`` Fock levels.

    Raises
    ------
    CutoffError
        If the truncated norm squared falls short of 1 by more than
        :data:`NORM_DEFICIT_TOL`.
    """
    if cutoff < 1:
        raise CutoffError("cutoff must be positive")
    alpha = complex(alpha)
    amps = np.empty(cutoff, dtype=complex)
    amps[0] = np.exp(-abs(alpha) ** 2 / 2)
    for n in range(1, cutoff):
        amps[n] = amps[n - 1] * alpha / np.sqrt(n)
    deficit = 1.0 - np.sum(np.abs(amps) ** 2)
    if deficit > NORM_DEFICIT_TOL:
        raise CutoffError(
            f"cutoff {cutoff} too small for alpha={alpha}: norm deficit {deficit:.2e}"
        )
    return StateVector(amps, (cutoff,), normalize=True)


def fock_state(n, cutoff):
    v = np.zeros(cutoff, dtype=complex)
    v[n] = 1.0
    return StateVector(v, (cutoff,))


def ladder_operators(cutoff, mass=1.0, omega=1.0):
    """Truncated annihilation, creation and position operators.

    The position operator is ``x = (a + a^dag) / sqrt(2 m omega)``.
    """
    if cutoff < 2:
        raise CutoffError("cutoff must be at least 2")
    a = np.diag(np.sqrt(np.arange(1, cutoff, dtype=float)), 1).astype(complex)
    adag = a.T.copy()
    x = (a + adag) / np.sqrt(2.0 * mass * omega)
    dims = (cutoff,)
    return Operator(a, dims), Operator(adag, dims), Operator(x, dims)


def momentum_operator(cutoff, mass=1.0, omega=1.0):
    a, adag, _ = ladder_operators(cutoff, mass, omega)
    return 1j * np.sqrt(mass * omega / 2.0) * (adag - a)


def number_operator(cutoff):
    return Operator(np.diag(np.arange(cutoff, dtype=float)).astype(complex), (cutoff,))


def displacement_operator(beta, cutoff):
    """exp(beta a^dag - beta^* a) on the truncated Fock space.

    The generator is anti-Hermitian; its Hermitian counterpart
    ``i (beta a^dag - beta^* a)`` is diagonalized and exponentiated exactly.
    """
    a, adag, _ = ladder_operators(cutoff)
    beta = complex(beta)
    gen = beta * adag.data - np.conj(beta) * a.data
    herm = 1j * gen
    herm = (herm + herm.conj().T) / 2
    evals, vecs = np.linalg.eigh(herm)
    data = (vecs * np.exp(-1j * evals)) @ vecs.conj().T
    return Operator(data, (cutoff,))


def interior_size(beta, cutoff):
    """Size of the Fock block unaffected by truncation for D(beta)."""
    return max(cutoff - int(ceil(4 * abs(beta))), 0)


def hermitian_part(m):
    m = np.asarray(m)
    return (m + m.conj().T) / 2


def fidelity(rho, sigma):
    """Uhlmann fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.

    Accepts state vectors or density matrices. Eigenvalues below ``1e-12``
    (relative) are treated as exact zeros so that low-rank states do not
    accumulate square-root noise from round-off.
    """
    if isinstance(rho, StateVector) and isinstance(sigma, StateVector):
        return abs(rho.overlap(sigma)) ** 2
    if isinstance(rho, StateVector):
        rho, sigma = sigma, rho
    if isinstance(sigma, StateVector):
        v = sigma.data
        return float(np.real(v.conj() @ _raw(rho) @ v))
    r = hermitian_part(_raw(rho))
    s = hermitian_part(_raw(sigma))
    ev, vec = np.linalg.eigh(r)
    ev = np.where(ev > 1e-12 * max(ev.max(), 1e-300), ev, 0.0)
    sq = (vec * np.sqrt(ev)) @ vec.conj().T
    mu = np.linalg.eigvalsh(hermitian_part(sq @ s @ sq))
    mu = np.where(mu > 1e-12 * max(mu.max(), 1e-300), mu, 0.0)
    return float(np.sum(np.sqrt(mu)) ** 2)


def trace_distance(rho, sigma):
    """Half the trace norm of ``rho - sigma``."""
    diff = hermitian_part(_raw(rho) - _raw(sigma))
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(diff))))


def swap_factors(op):
    """Reorder a bipartite operator or state from (1, 2) to (2, 1)."""
    if len(op.dims) != 2:
        raise DimensionError("swap_factors needs exactly two factors")
    d1, d2 = op.dims
    if isinstance(op, StateVector):
        return StateVector(op.data.reshape(d1, d2).T.ravel(), (d2, d1))
    data = op.data.reshape(d1, d2, d1, d2).transpose(1, 0, 3, 2).reshape(d1 * d2, d1 * d2)
    return type(op)(data, (d2, d1))


def operator_schmidt(op, tol=1e-13):
    """Decompose a bipartite operator as ``sum_j A_j (x) B_j``.

    Returns
    -------
    list of (ndarray, ndarray)
        Pairs of local matrices; terms with singular value below ``tol``
        relative to the largest are dropped.
    """
    if len(op.dims) != 2:
        raise DimensionError("operator_schmidt needs exactly two factors")
    d1, d2 = op.dims
    realigned = op.data.reshape(d1, d2, d1, d2).transpose(0, 2, 1, 3).reshape(d1 * d1, d2 * d2)
    u, s, vh = np.linalg.svd(realigned, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return []
    terms = []
    for j in np.flatnonzero(s > tol * s[0]):
        terms.append((u[:, j].reshape(d1, d1) * s[j], vh[j].reshape(d2, d2)))
    return terms


def random_density_matrix(dim, rng, rank=None):
    """Random full- or reduced-rank density matrix (test helper)."""
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def random_hermitian(dim, rng):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (g + g.conj().T) / 2


def ket(amplitudes: Sequence[complex], dims=None):
    v = np.asarray(amplitudes, dtype=complex).ravel()
    return StateVector(v, dims or (v.size,), normalize=True)
