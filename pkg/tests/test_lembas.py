import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from somwork.errors import DimensionError
from somwork.lembas import (
    FluxSeries,
    effective_hamiltonian,
    flux_series,
    fluxes,
    h_eff_time_derivative,
    incoherent_generator,
    lembas_split,
    pinch,
    split_commuting,
)
from somwork.models import SystemParams, initial_state, som_hamiltonian
from somwork.propagation import TimeGrid, eigen_propagator, evolve
from somwork.quantum_core import (
    SIGMA_X,
    SIGMA_Z,
    DensityMatrix,
    Operator,
    coherent_state,
    ladder_operators,
    momentum_operator,
    partial_trace,
    random_density_matrix,
    random_hermitian,
    tensor,
)


def random_problem(rng, d1=2, d2=3):
    h1 = Operator(random_hermitian(d1, rng), (d1,))
    h2 = Operator(random_hermitian(d2, rng), (d2,))
    h12 = Operator(random_hermitian(d1 * d2, rng), (d1, d2))
    H = tensor(h1, Operator(np.eye(d2), (d2,))) + tensor(Operator(np.eye(d1), (d1,)), h2) + h12
    rho = DensityMatrix(random_density_matrix(d1 * d2, rng), (d1, d2))
    return h1, h2, h12, H, rho


def liouville(H, rho):
    return -1j * (H.data @ rho.data - rho.data @ H.data)


# -- effective Hamiltonian ------------------------------------------------------

def test_z_som_effective_hamiltonian_on_spin():
    n, lam = 30, 0.1
    p = SystemParams(lam=lam)
    parts = som_hamiltonian(p, "z", n)
    rho_o = coherent_state(0.8 - 0.3j, n).projector()
    x0 = math.sqrt(2) * 0.8
    h = effective_hamiltonian(parts.h_int, rho_o, 0)
    np.testing.assert_allclose(h.data, lam * x0 * SIGMA_Z, atol=1e-9)


def test_z_som_effective_hamiltonian_on_oscillator():
    n, lam, c = 12, 0.1, 0.7
    parts = som_hamiltonian(SystemParams(lam=lam), "z", n)
    h = effective_hamiltonian(parts.h_int, DensityMatrix(np.diag([c, 1 - c]), (2,)), 1)
    _, _, x = ladder_operators(n)
    np.testing.assert_allclose(h.data, lam * (1 - 2 * c) * x.data, atol=1e-14)


def test_zero_coupling_gives_zero(rng):
    h12 = Operator(np.zeros((6, 6)), (2, 3))
    rho2 = DensityMatrix(random_density_matrix(3, rng), (3,))
    assert not effective_hamiltonian(h12, rho2, 0).data.any()


def test_effective_hamiltonian_dims_checked(rng):
    h12 = Operator(random_hermitian(6, rng), (2, 3))
    with pytest.raises(DimensionError):
        effective_hamiltonian(h12, DensityMatrix(np.eye(2) / 2, (2,)), 0)
    with pytest.raises(DimensionError):
        effective_hamiltonian(h12, DensityMatrix(np.eye(3) / 3, (3,)), 2)


# -- commuting split ------------------------------------------------------------

def test_split_nondegenerate_is_diagonal(rng):
    h = Operator(random_hermitian(2, rng), (2,))
    a, b = split_commuting(h, Operator(SIGMA_Z, (2,)))
    np.testing.assert_allclose(a.data, np.diag(np.diag(h.data)), atol=1e-15)
    np.testing.assert_allclose((a + b).data, h.data, atol=1e-15)


def test_split_transverse_and_longitudinal():
    hz = Operator(0.5 * SIGMA_Z, (2,))
    a, b = split_commuting(Operator(0.3 * SIGMA_X, (2,)), hz)
    assert not a.data.any()
    a, b = split_commuting(Operator(0.02 * SIGMA_Z, (2,)), hz)
    np.testing.assert_allclose(a.data, 0.02 * SIGMA_Z)
    assert np.max(np.abs(b.data)) == 0


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_split_commutes_with_degenerate_local(seed):
    rng = np.random.default_rng(seed)
    q = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))[0]
    h_local = Operator(q @ np.diag([1.0, 1.0, 2.0, -0.5]) @ q.conj().T, (4,))
    h = Operator(random_hermitian(4, rng), (4,))
    a, b = split_commuting(h, h_local)
    assert np.max(np.abs(a.data @ h_local.data - h_local.data @ a.data)) < 1e-12
    assert a.is_hermitian(1e-12) and b.is_hermitian(1e-12)
    np.testing.assert_allclose((a + b).data, h.data, atol=1e-15)
    # the degenerate pair keeps its internal coherence
    assert np.linalg.matrix_rank(a.data, tol=1e-9) >= 3


# -- incoherent generator ---------------------------------------------------------

def test_generator_vanishes_on_product(rng):
    _, _, h12, _, _ = random_problem(rng)
    rho = tensor(
        DensityMatrix(random_density_matrix(2, rng), (2,)), DensityMatrix(random_density_matrix(3, rng), (3,))
    )
    np.testing.assert_allclose(incoherent_generator(h12, rho, 0).data, 0, atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), which=st.sampled_from([0, 1]))
def test_local_equation_of_motion_is_exact(seed, which):
    rng = np.random.default_rng(seed)
    h1, h2, h12, H, rho = random_problem(rng)
    local = (h1, h2)[which].data
    r_own = partial_trace(rho, which).data
    r_other = partial_trace(rho, 1 - which)
    h_eff = effective_hamiltonian(h12, r_other, which).data
    L = incoherent_generator(h12, rho, which).data
    assert abs(np.trace(L)) < 1e-12
    hh = local + h_eff
    assembled = -1j * (hh @ r_own - r_own @ hh) + L
    exact = partial_trace(Operator(liouville(H, rho), H.dims), which).data
    np.testing.assert_allclose(assembled, exact, atol=1e-12)


# -- time derivative of the effective Hamiltonian ----------------------------------------

def test_derivative_vanishes_for_stationary_state(rng):
    _, _, h12, H, _ = random_problem(rng)
    v = np.linalg.eigh(H.data)[1][:, 2]
    rho = DensityMatrix(np.outer(v, v.conj()), H.dims)
    np.testing.assert_allclose(h_eff_time_derivative(h12, rho, H, 0).data, 0, atol=1e-12)


def test_z_som_derivative_follows_ehrenfest():
    n, lam = 30, 0.2
    p = SystemParams(lam=lam, alpha=0.7 + 0.4j, c=0.3, mass=1.5)
    parts = som_hamiltonian(p, "z", n)
    traj = evolve(initial_state(p, n), parts.total, TimeGrid(0, 3, 1.0))
    pm = momentum_operator(n, p.mass, p.omega_o)
    for i in range(len(traj)):
        rho = traj.total_state(i)
        d = h_eff_time_derivative(parts.h_int, rho, parts.total, 0).data
        p_mean = np.trace(pm.data @ traj.reduced_osc(i).data).real
        np.testing.assert_allclose(d, lam * p_mean / p.mass * SIGMA_Z, atol=1e-10)


@pytest.mark.parametrize("which", [0, 1])
def test_derivative_matches_finite_difference(rng, which):
    _, _, h12, H, rho = random_problem(rng)
    h = 1e-4

    def h_eff_at(t):
        U = eigen_propagator(H, t).data
        r = DensityMatrix(U @ rho.data @ U.conj().T, rho.dims)
        return effective_hamiltonian(h12, partial_trace(r, 1 - which), which).data

    fd = (h_eff_at(h) - h_eff_at(-h)) / (2 * h)
    analytic = h_eff_time_derivative(h12, rho, H, which).data
    assert np.max(np.abs(analytic - fd)) < 1e-6


# -- fluxes ----------------------------------------------------------------------

def test_uncoupled_fluxes_vanish():
    p = SystemParams(alpha=1.0, c=0.7)
    parts = som_hamiltonian(p, "xz", 20)
    rho = initial_state(p, 20)
    split = lembas_split(parts.h_int, rho, parts.h_spin)
    s = fluxes(rho, parts.total, parts.h_int, split)
    assert s.w_dot == 0 and s.q_dot == 0


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), which=st.sampled_from([0, 1]))
def test_energy_balance_random(seed, which):
    rng = np.random.default_rng(seed)
    h1, h2, h12, H, rho = random_problem(rng)
    local = (h1, h2)[which]
    split = lembas_split(h12, rho, local, which)
    assert np.max(np.abs(split.h_eff_a.data @ local.data - local.data @ split.h_eff_a.data)) < 1e-12
    s = fluxes(rho, H, h12, split, which)
    assert abs(s.u_dot - (s.w_dot + s.q_dot)) < 1e-10


def test_energy_rate_matches_finite_difference(rng):
    h1, _, h12, H, rho = random_problem(rng)
    h = 1e-4

    def energy(t):
        U = eigen_propagator(H, t).data
        r = DensityMatrix(U @ rho.data @ U.conj().T, rho.dims)
        sp = lembas_split(h12, r, h1, 0)
        return np.trace(sp.h_prime.data @ partial_trace(r, 0).data).real

    split = lembas_split(h12, rho, h1, 0)
    s = fluxes(rho, H, h12, split, 0)
    assert s.u_dot == pytest.approx((energy(h) - energy(-h)) / (2 * h), abs=1e-6)


def test_non_hermitian_coupling_detected(rng):
    h1, _, h12, H, rho = random_problem(rng)
    bad = Operator(h12.data + 0.3j * random_hermitian(6, rng), h12.dims)
    split = lembas_split(bad, rho, h1, 0)
    with pytest.raises(ValueError):
        fluxes(rho, H, bad, split, 0)


def test_z_som_spin_work_and_heat():
    n, lam, c = 30, 0.1, 0.7
    p = SystemParams(lam=lam, alpha=1.0, c=c)
    parts = som_hamiltonian(p, "z", n)
    traj = evolve(initial_state(p, n), parts.total, TimeGrid(0, 2 * math.pi, 0.1))
    fs = flux_series(traj, parts.total, parts.h_int, parts.h_spin, 0)
    pm = momentum_operator(n, p.mass, p.omega_o).data
    p_mean = np.array([np.trace(pm @ traj.reduced_osc(i).data).real for i in range(len(traj))])
    np.testing.assert_allclose(fs.w_dot, lam * p_mean / p.mass * (1 - 2 * c), atol=1e-12)
    assert np.max(np.abs(fs.q_dot)) < 1e-14


def test_heat_flux_scales_with_xi():
    peaks = []
    for lam in (0.1, 0.05, 0.025):
        p = SystemParams(lam=lam, c=0.7)
        parts = som_hamiltonian(p, "z", 20)
        traj = evolve(initial_state(p, 20), parts.total, TimeGrid(0, 4 * math.pi, math.pi / 50))
        spin = flux_series(traj, parts.total, parts.h_int, parts.h_spin, 0)
        osc = flux_series(traj, parts.total, parts.h_int, parts.h_osc, 1)
        assert np.max(np.abs(spin.q_dot)) == 0
        peaks.append(np.max(np.abs(osc.q_dot)))
    ratios = np.array(peaks[:-1]) / np.array(peaks[1:])
    np.testing.assert_allclose(ratios, 4.0, rtol=0.05)


@pytest.mark.parametrize("which", [0, 1])
def test_flux_series_matches_snapshots(which):
    p = SystemParams(lam=0.1, kappa=0.3, alpha=1.5, c=0.7)
    n = 30
    parts = som_hamiltonian(p, "xz", n)
    traj = evolve(initial_state(p, n), parts.total, TimeGrid(0, 20, 0.5))
    local = (parts.h_spin, parts.h_osc)[which]
    fs = flux_series(traj, parts.total, parts.h_int, local, which)
    assert isinstance(fs, FluxSeries) and len(fs) == len(traj)
    assert fs.balance_residual.max() < 1e-12
    for i in (0, 9, 40):
        rho = traj.total_state(i)
        s = fluxes(rho, parts.total, parts.h_int, lembas_split(parts.h_int, rho, local, which), which)
        assert fs[i].w_dot == pytest.approx(s.w_dot, abs=1e-13)
        assert fs[i].q_dot == pytest.approx(s.q_dot, abs=1e-13)
        assert fs[i].u_dot == pytest.approx(s.u_dot, abs=1e-13)


def test_pinch_stack_matches_single(rng):
    h_local = np.diag([0.0, 1.0, 1.0])
    stack = np.stack([random_hermitian(3, rng) for _ in range(4)])
    out = pinch(stack, h_local)
    for k in range(4):
        np.testing.assert_allclose(out[k], pinch(Operator(stack[k], (3,)), h_local).data)
