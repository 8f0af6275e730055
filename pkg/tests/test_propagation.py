import math

import numpy as np
import pytest

from somwork.errors import DimensionError, IntegrationError
from somwork.models import ModelKind, SystemParams, build_hamiltonian, initial_state
from somwork.oracles import analytic_purity
from somwork.propagation import (
    MAX_SAMPLES,
    TimeGrid,
    eigen_propagator,
    evolve,
    fa_evolve,
    free_propagator,
    jcm_closed_form_propagator,
    z_som_analytic_state,
    z_som_branch_amplitudes,
)
from somwork.quantum_core import (
    SIGMA_Z,
    DensityMatrix,
    Operator,
    coherent_state,
    fidelity,
    ket,
    partial_trace,
    purity,
    random_hermitian,
    tensor,
    trace_distance,
)

PLUS = np.full((2, 2), 0.5)


def test_time_grid():
    g = TimeGrid(0.0, 1.0, 0.25)
    assert g.samples == 5
    np.testing.assert_allclose(g.times, [0, 0.25, 0.5, 0.75, 1.0])
    assert g.halved().samples == 9
    with pytest.raises(ValueError):
        TimeGrid(1.0, 1.0, 0.1)
    with pytest.raises(ValueError):
        TimeGrid(0.0, 1.0, -0.1)
    with pytest.raises(ValueError):
        TimeGrid(0.0, MAX_SAMPLES, 0.5)


# -- eigen propagator ---------------------------------------------------------

def test_eigen_propagator_basics(rng):
    H = Operator(random_hermitian(5, rng), (5,))
    np.testing.assert_allclose(eigen_propagator(H, 0.0).data, np.eye(5), atol=1e-12)
    D = Operator(np.diag([0.3, -1.1]), (2,))
    np.testing.assert_allclose(eigen_propagator(D, 2.0).data, np.diag(np.exp(-1j * np.array([0.3, -1.1]) * 2)))
    U = eigen_propagator(H, 1.7).data
    np.testing.assert_allclose(U @ U.conj().T, np.eye(5), atol=1e-10)


def test_eigen_propagator_group_property(rng):
    for _ in range(5):
        H = Operator(random_hermitian(8, rng), (8,))
        t1, t2 = rng.uniform(-3, 3, size=2)
        lhs = eigen_propagator(H, t1).data @ eigen_propagator(H, t2).data
        np.testing.assert_allclose(lhs, eigen_propagator(H, t1 + t2).data, atol=1e-10)


def test_eigen_propagator_rejects_non_hermitian():
    with pytest.raises(ValueError):
        eigen_propagator(Operator(np.array([[0, 1], [0, 0]]), (2,)), 1.0)


# -- evolve ----------------------------------------------------------------

def test_uncoupled_purities_constant():
    p = SystemParams(alpha=1.0, c=0.7)
    traj = evolve(initial_state(p, 20), build_hamiltonian(p, "xz", 20), TimeGrid(0, 10, 0.5))
    P = traj.purities()
    np.testing.assert_allclose(P[:, 0], 0.58, atol=1e-12)
    np.testing.assert_allclose(P[:, 1], 1.0, atol=1e-12)


def test_fig1_purity_periodic_with_minimum_at_pi(fig1_params):
    n = 20
    grid = TimeGrid(0, 4 * math.pi, math.pi / 50)
    traj = evolve(initial_state(fig1_params, n), build_hamiltonian(fig1_params, "z", n), grid)
    P = traj.purities()[:, 1]
    assert P[50] == pytest.approx(0.58 + 0.42 * math.exp(-0.08), abs=1e-10)
    assert P[50] == pytest.approx(0.96771, abs=5e-6)
    assert np.argmin(P[:101]) == 50
    np.testing.assert_allclose(P[:101], P[100:], atol=1e-10)


def test_conservation_laws(case_b):
    n = 30
    H = build_hamiltonian(case_b.replace(c=0.7), "xz", n)
    rho0 = initial_state(case_b.replace(c=0.7), n)
    traj = evolve(rho0, H, TimeGrid(0, 50, 0.5))
    energy = traj.expect(H)
    assert np.max(np.abs(energy - energy[0])) < 1e-9
    p0 = purity(rho0)
    for i in (0, 40, 100):
        assert abs(purity(traj.total_state(i)) - p0) < 1e-9


def test_pure_state_purities_agree(case_b):
    n = 30
    traj = evolve(initial_state(case_b, n), build_hamiltonian(case_b, "xz", n), TimeGrid(0, 50, 0.5))
    P = traj.purities()
    assert np.max(np.abs(P[:, 0] - P[:, 1])) < 1e-9
    assert P[:, 0].min() < 0.999


def test_z_spin_populations_and_period():
    p = SystemParams(lam=0.2, alpha=1.0 + 0.5j, c=0.6)
    n = 30
    H = build_hamiltonian(p, "z", n)
    traj = evolve(initial_state(p, n), H, TimeGrid(0, 4 * math.pi, math.pi / 20))
    rs = traj.reduced_spin
    np.testing.assert_allclose(rs[:, 0, 0].real, 0.6, atol=1e-10)
    for i in (3, 17, 31):
        np.testing.assert_allclose(traj.total_state(i).data, traj.total_state(i + 40).data, atol=1e-8)


def test_evolve_dimension_mismatch():
    p = SystemParams(lam=0.1)
    with pytest.raises(DimensionError):
        evolve(initial_state(p, 10), build_hamiltonian(p, "z", 12), TimeGrid(0, 1, 0.1))


def test_evolve_accepts_state_vector():
    p = SystemParams(lam=0.1, kappa=0.1, alpha=1.0)
    n = 20
    psi = tensor(ket([1, 0]), coherent_state(1.0, n))
    H = build_hamiltonian(p, "xz", n)
    a = evolve(psi, H, TimeGrid(0, 5, 0.5))
    b = evolve(psi.projector(), H, TimeGrid(0, 5, 0.5))
    np.testing.assert_allclose(a.purities(), b.purities(), atol=1e-12)


def test_taint_detection():
    p = SystemParams(lam=0.5, kappa=1.0, alpha=2.0)
    n = 26
    traj = evolve(initial_state(p, n), build_hamiltonian(p, "xz", n), TimeGrid(0, 40, 0.5))
    assert traj.tainted and traj.first_tainted_time() > 0
    assert traj.boundary_population()[0] < 1e-6


# -- JCM closed form ---------------------------------------------------------

def test_jcm_closed_form_identity_and_rabi():
    n = 6
    np.testing.assert_allclose(jcm_closed_form_propagator(0.3, n, 0.0).data, np.eye(2 * n))
    g, t = 0.3, 2.2
    U = jcm_closed_form_propagator(g, n, t).data
    start = np.zeros(2 * n)
    start[n] = 1  # |1>|0>
    out = U @ start
    assert out[n] == pytest.approx(math.cos(g * t))
    assert out[1] == pytest.approx(-1j * math.sin(g * t))


@pytest.mark.parametrize("g,t", [(0.1, 7.0), (-0.3, 3.1), (1.0, 25.0)])
def test_jcm_closed_form_matches_diagonalization(g, t):
    n = 30
    p = SystemParams(lam=g * math.sqrt(2), kappa=1.0)
    H = build_hamiltonian(p, ModelKind.JCM_RWA, n)
    U_exact = eigen_propagator(H, t).data
    U_closed = free_propagator(1.0, 1.0, n, t).data @ jcm_closed_form_propagator(g, n, t).data
    keep = np.r_[0 : n - 5, n : 2 * n - 5]
    np.testing.assert_allclose(U_closed[:, keep], U_exact[:, keep], atol=1e-8)


# -- analytic z-SOM state -------------------------------------------------------

def test_z_analytic_state_initial(fig1_params):
    n = 20
    np.testing.assert_allclose(
        z_som_analytic_state(fig1_params, 0.0, n).data, initial_state(fig1_params, n).data, atol=1e-14
    )


def test_z_analytic_pure_spin_keeps_oscillator_pure():
    p = SystemParams(lam=0.3, alpha=1.0, c=1.0)
    for t in (0.5, 1.7, 3.0):
        assert purity(partial_trace(z_som_analytic_state(p, t, 30), 1)) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("params", [
    SystemParams(lam=0.1, c=0.7, alpha=0.0),
    SystemParams(lam=-0.25, c=0.4, alpha=1.0 - 0.5j, mass=1.5, omega_o=0.8, omega_s=1.3),
])
def test_z_analytic_state_matches_evolve(params):
    n = 40
    grid = TimeGrid(0, 2 * math.pi, math.pi / 8)
    traj = evolve(initial_state(params, n), build_hamiltonian(params, "z", n), grid)
    for i, t in enumerate(grid.times):
        ana = z_som_analytic_state(params, t, n)
        assert fidelity(partial_trace(ana, 1), traj.reduced_osc(i)) > 1 - 1e-8
        assert purity(partial_trace(ana, 1)) == pytest.approx(analytic_purity(params, t), abs=1e-10)


def test_z_analytic_requires_kappa_zero():
    with pytest.raises(ValueError):
        z_som_analytic_state(SystemParams(lam=0.1, kappa=0.1), 1.0, 10)


def test_branch_amplitudes_at_zero():
    p = SystemParams(lam=0.1, alpha=0.5)
    for a in z_som_branch_amplitudes(p, 0.0):
        assert a == pytest.approx(0.5)


# -- factorization approximation -------------------------------------------------

def test_fa_z_spin_drive_constant():
    p = SystemParams(lam=0.1, c=0.7, alpha=1.0)
    fa = fa_evolve(p, TimeGrid(0, 20, 0.01), 30)
    drive = np.einsum("ij,tji->t", SIGMA_Z, fa.rho_spin).real
    np.testing.assert_allclose(drive, 1 - 2 * 0.7, atol=1e-12)
    assert len(fa) == 2001 and fa[5].rho_spin.dims == (2,)


def test_fa_uncoupled_is_free_evolution():
    p = SystemParams(omega_s=1.3, alpha=1.0)
    fa = fa_evolve(p, TimeGrid(0, 5, 0.01), 25, spin_state=PLUS)
    t = 5.0
    rho = fa.rho_spin[-1]
    assert rho[0, 1] == pytest.approx(0.5 * np.exp(1j * 1.3 * t), abs=1e-8)
    expected = coherent_state(np.exp(-1j * t), 25).data * np.exp(-0.5j * t)
    assert abs(np.vdot(expected, fa.psi_osc[-1])) == pytest.approx(1.0, abs=1e-8)


def test_fa_spin_phase_matches_closed_form_position():
    p = SystemParams(lam=0.1, c=0.7, alpha=1.0)
    grid = TimeGrid(0, 10, 0.01)
    fa = fa_evolve(p, grid, 30, spin_state=[[0.7, 0.2], [0.2, 0.3]])
    t = grid.times
    force = p.lam * (np.trace(SIGMA_Z @ np.array([[0.7, 0.2], [0.2, 0.3]]))).real
    x_eq = -force / (p.mass * p.omega_o ** 2)
    x0 = math.sqrt(2 / (p.mass * p.omega_o)) * 1.0
    x_t = x_eq + (x0 - x_eq) * np.cos(p.omega_o * t)
    # 1000 RK4 steps at local tolerance 1e-8
    np.testing.assert_allclose(fa.x_expect, x_t, atol=1e-7)
    integral = p.omega_s / 2 * t + p.lam * (x_eq * t + (x0 - x_eq) * np.sin(p.omega_o * t) / p.omega_o)
    np.testing.assert_allclose(fa.rho_spin[:, 0, 1], 0.2 * np.exp(2j * integral), atol=1e-7)


def test_fa_step_rejection():
    with pytest.raises(IntegrationError):
        fa_evolve(SystemParams(lam=0.5, alpha=2.0), TimeGrid(0, 10, 1.0), 40, tol=1e-10)


def test_fa_approaches_exact_in_quantum_limit():
    base = SystemParams(lam=0.1, kappa=0.1, alpha=2.0)
    t = math.pi / 2
    n = 40
    dists = []
    for w in (1.0, math.sqrt(2), 2.0):
        p = base.replace(omega_o=w, omega_s=w, lam=base.lam * math.sqrt(w))
        grid = TimeGrid(0, t, t / 400)
        fa = fa_evolve(p, grid, n, spin_state=PLUS)
        ex = evolve(initial_state(p, n, spin_state=PLUS), build_hamiltonian(p, "xz", n), grid)
        dists.append(trace_distance(fa.rho_spin[-1], ex.reduced_spin[-1]))
    assert dists[0] > dists[1] > dists[2] > 0


def test_fa_state_components_valid():
    fa = fa_evolve(SystemParams(lam=0.1, kappa=0.1, alpha=1.0, c=0.7), TimeGrid(0, 5, 0.01), 25)
    assert fa.norm_drift.max() < 1e-8
    assert isinstance(fa[-1].rho_spin, DensityMatrix)
