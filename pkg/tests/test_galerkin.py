import numpy as np
import pytest

from thinfilm.galerkin import (GalerkinBasis, GalerkinSystem, evolve_galerkin, galerkin_rhs, mass_matrix,
                               project, regularized_energy)
from thinfilm.grid import Grid
from thinfilm.model import Params, State, rhs
from thinfilm.timestepper import SolverConfig, evolve

SCALED = Params(C=1 / 3, Cn=1.0, r=1.0, A=-1.0)


def _smooth_state(g):
    x = 2 * np.pi * g.x / g.length
    return State(g, 1 + 0.1 * np.cos(x) + 0.05 * np.sin(2 * x), 0.3 * np.sin(x) + 0.2 * np.cos(3 * x) - 0.1)


def test_basis_is_orthonormal():
    b = GalerkinBasis(3.0, 17)
    gram = b.phi[0].T @ b.phi[0] * b.weight
    assert np.max(np.abs(gram - np.eye(17))) <= 1e-13
    with pytest.raises(ValueError):
        GalerkinBasis(3.0, 8)


def test_basis_derivatives_match_eigenvalues():
    b = GalerkinBasis(5.0, 9)
    lap = b.phi[2]
    assert np.max(np.abs(lap + b.phi[0] * b.wavenumbers**2)) <= 1e-12


def test_project_examples():
    L = 4.0
    g = Grid(L, 64)
    c = project(g.full(2.5), g, 9)
    assert c[0] == pytest.approx(2.5 * np.sqrt(L), rel=1e-14)
    assert np.max(np.abs(c[1:])) <= 1e-14
    c = project(np.sin(2 * np.pi * g.x / L), g, 9)
    assert c[2] == pytest.approx(np.sqrt(L / 2), rel=1e-14)
    assert np.max(np.abs(np.delete(c, 2))) <= 1e-14


def test_projection_converges_spectrally():
    L = 3.0
    g = Grid(L, 256)
    f = np.exp(np.sin(2 * np.pi * g.x / L))
    errs = []
    for n in (5, 9, 17, 33):
        b = GalerkinBasis(L, n)
        rec = b.reconstruct(b.project(f, g), g.x)
        errs.append(np.sqrt(np.sum((rec - f) ** 2) * g.dx))
    assert np.all(np.diff(errs) < 0)
    assert errs[2] / errs[3] >= 1e3


@pytest.mark.parametrize("H", [0.0, 0.7, 3.0])
def test_mass_matrix_for_constant_height(H):
    L = 2.0
    eps = 1e-3
    b = GalerkinBasis(L, 11)
    eta = np.zeros(11)
    eta[0] = H * np.sqrt(L)
    sys = GalerkinSystem(b, eps, eta, np.zeros(11))
    assert np.max(np.abs(mass_matrix(eta, sys) - (H + eps) * np.eye(11))) <= 1e-12 * (H + 1)


def test_mass_matrix_symmetric_positive_definite():
    b = GalerkinBasis(2 * np.pi, 17)
    rng = np.random.default_rng(11)
    worst_asym, worst_eig = 0.0, np.inf
    for _ in range(1000):
        eps = 10.0 ** rng.uniform(-6, 0)
        eta = rng.standard_normal(17) * 10.0 ** rng.uniform(-2, 1)
        sys = GalerkinSystem(b, eps, eta, np.zeros(17))
        M = mass_matrix(eta, sys)
        worst_asym = max(worst_asym, np.max(np.abs(M - M.T)))
        worst_eig = min(worst_eig, np.linalg.eigvalsh(M).min() / (eps / 2))
    assert worst_asym <= 1e-12
    # g_eps >= eps/2 bounds the spectrum below by eps/2
    assert worst_eig >= 1 - 1e-8


def test_rhs_uniform_state_is_steady():
    g = Grid(6.0, 64)
    sys = GalerkinSystem.from_state(State.uniform(g), 9, 1e-6)
    d_eta, d_gamma = galerkin_rhs(sys, SCALED)
    assert np.max(np.abs(d_eta)) <= 1e-12 and np.max(np.abs(d_gamma)) <= 1e-12


def test_zeroth_mode_is_conserved_for_any_state():
    b = GalerkinBasis(5.0, 13)
    rng = np.random.default_rng(3)
    for _ in range(50):
        eta = rng.standard_normal(13)
        sys = GalerkinSystem(b, 1e-2, eta, rng.standard_normal(13))
        assert abs(galerkin_rhs(sys, SCALED)[0][0]) <= 1e-12


@pytest.mark.parametrize("p", [SCALED, Params(C=0.7, Cn=0.6, r=2.5, A=-0.3)])
def test_rhs_matches_projected_grid_rhs(p):
    L = 2 * np.pi
    g = Grid(L, 64)
    s = _smooth_state(g)
    sys = GalerkinSystem.from_state(s, 9, 1e-6)
    d_eta, d_gamma = galerkin_rhs(sys, p)
    t = rhs(s, p)
    b = sys.basis
    ref_eta = b.project(t.dh_dt, g)
    assert np.max(np.abs(d_eta - ref_eta)) <= 1e-4 * np.max(np.abs(ref_eta))
    # Galerkin c-equation: M d_gamma = <(ch)_t - c P(h_t), phi>, where P(h_t) is the
    # projected (truncated) height tendency and g_eps(h) = h + eps for h > 0
    M = mass_matrix(sys.eta, sys)
    h_t = b.reconstruct(ref_eta, g.x)
    ref_gamma = np.linalg.solve(M, b.project(t.dch_dt - s.c * h_t, g))
    assert np.max(np.abs(d_gamma - ref_gamma)) <= 1e-4 * np.max(np.abs(ref_gamma))


def test_regularized_energy_matches_grid_energy_for_positive_film():
    g = Grid(2 * np.pi, 64)
    s = _smooth_state(g)
    sys = GalerkinSystem.from_state(s, 9, 1e-8)
    from thinfilm.model import energy
    e_g = energy(s, SCALED)
    e_r = regularized_energy(sys, SCALED)
    assert e_r.F == pytest.approx(e_g.F, rel=1e-6)
    assert e_r.dissipation == pytest.approx(e_g.dissipation, rel=1e-5)


@pytest.fixture(scope="module")
def galerkin_run():
    g = Grid(2 * np.pi, 64)
    s0 = _smooth_state(g)
    sys = GalerkinSystem.from_state(s0, 33, 1e-6)
    cfg = SolverConfig(t_end=0.1, record_every=0.01, dt_init=1e-5, dt_min=1e-12)
    return s0, evolve_galerkin(sys, SCALED, cfg)


def test_galerkin_matches_grid_solver(galerkin_run):
    s0, rec = galerkin_run
    assert rec.status == "completed"
    cfg = SolverConfig(t_end=0.1, record_every=0.01, dt_init=1e-4, dt_max=1e-4, dt_min=1e-7,
                       scheme="fully_implicit")
    grid_rec = evolve(s0, SCALED, cfg)
    x = s0.grid.x
    final = rec.extras["systems"][-1]
    assert np.max(np.abs(final.h(x) - grid_rec.final.h)) <= 1e-3
    assert np.max(np.abs(final.c(x) - grid_rec.final.c)) <= 1e-3


def test_galerkin_conserves_zeroth_mode(galerkin_run):
    eta0 = galerkin_run[1].extras["eta0"]
    assert np.ptp(eta0) <= 1e-10


def test_galerkin_energy_decays(galerkin_run):
    F = galerkin_run[1].free_energy
    assert np.all(np.diff(F) <= 1e-8)


def test_evolve_rejects_nonpositive_start():
    b = GalerkinBasis(2 * np.pi, 5)
    eta = np.array([0.1, 2.0, 0, 0, 0])
    with pytest.raises(ValueError):
        evolve_galerkin(GalerkinSystem(b, 1e-3, eta, np.zeros(5)), SCALED, SolverConfig(t_end=0.1))


@pytest.mark.slow
def test_galerkin_converges_under_refinement():
    g = Grid(2 * np.pi, 64)
    s0 = _smooth_state(g)
    cfg = SolverConfig(t_end=0.05, record_every=0.05, dt_init=1e-5, dt_min=1e-12)
    ref = evolve(s0, SCALED, SolverConfig(t_end=0.05, record_every=0.05, dt_init=5e-5, dt_max=5e-5,
                                         dt_min=1e-8, scheme="fully_implicit")).final
    errs = []
    for n, eps in ((9, 1e-2), (17, 1e-4), (33, 1e-6)):
        rec = evolve_galerkin(GalerkinSystem.from_state(s0, n, eps), SCALED, cfg)
        errs.append(np.max(np.abs(rec.extras["systems"][-1].h(g.x) - ref.h)))
    assert errs[0] > errs[1] > errs[2]
