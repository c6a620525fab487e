import numpy as np
import pytest

from cubicavoid.cubics import CubicState, cubic_rhs, integrate_cubic, shoot_bvp
from cubicavoid.errors import CutLocusDuringIntegration, NoConvergence, NonFiniteState
from cubicavoid.finitediff import sampled_derivative
from cubicavoid.groups import abelian, orthogonality_defect, rotation_exp, so3
from cubicavoid.potentials import ObstaclePotential, zero_potential
from helpers import rng, so3_gaussian_setup

E = np.eye(3)


def test_geodesic_jet_is_equilibrium():
    model = so3()
    pot = zero_potential(model)
    state = CubicState(model.identity(), np.array([0.3, -0.7, 0.2]),
                       np.zeros(3), np.zeros(3))
    _, rates = cubic_rhs(model, pot, state)
    assert np.allclose(rates, 0.0, atol=1e-15)


def test_abelian_rhs_is_classical_chain():
    model = abelian(2)
    pot = zero_potential(model)
    g = rng(20)
    xis = g.normal(size=(3, 2))
    state = CubicState(np.zeros(2), *xis)
    gdot, rates = cubic_rhs(model, pot, state)
    assert np.allclose(gdot, xis[0])
    assert np.allclose(rates[0], xis[1])
    assert np.allclose(rates[1], xis[2])
    assert np.allclose(rates[2], 0.0)


def test_abelian_quadratic_well_restoring_rate():
    # V(x) = |x|^2 at the origin gives the linear fourth-order law x'''' = -2x
    model = abelian(1)
    pot = ObstaclePotential(model=model, obstacle=np.zeros(1), shape="quadratic", tau=1.0)
    x = np.array([0.37])
    state = CubicState(x, np.zeros(1), np.zeros(1), np.zeros(1))
    _, rates = cubic_rhs(model, pot, state)
    assert np.allclose(rates[2], -2.0 * x, atol=1e-12)


def test_geodesic_closed_form_endpoint():
    model = so3()
    pot = zero_potential(model)
    xi0 = np.array([0.4, -0.2, 0.6])
    init = CubicState(rotation_exp([0.1, 0.2, -0.1]), xi0, np.zeros(3), np.zeros(3))
    traj = integrate_cubic(model, pot, init, (0.0, 2.0), 64)
    expected = init.g @ rotation_exp(2.0 * xi0)
    assert np.linalg.norm(traj.gs[-1] - expected) <= 1e-8


def test_abelian_quadrature_of_flat_jet():
    model = abelian(1)
    pot = zero_potential(model)
    init = CubicState(np.zeros(1), np.zeros(1), np.ones(1), np.zeros(1))
    traj = integrate_cubic(model, pot, init, (0.0, 1.0), 100)
    assert np.max(np.abs(traj.gs[:, 0] - 0.5 * traj.times**2)) <= 1e-10


def test_rk4_convergence_order():
    model, pot, init, _ = so3_gaussian_setup(steps=50)
    ref = integrate_cubic(model, pot, init, (0.0, 1.0), 1600)
    errs = []
    for steps in (50, 100):
        traj = integrate_cubic(model, pot, init, (0.0, 1.0), steps)
        errs.append(np.linalg.norm(traj.gs[-1] - ref.gs[-1])
                    + np.linalg.norm(traj.xis[-1] - ref.xis[-1]))
    ratio = errs[0] / errs[1]
    assert 11.0 <= ratio <= 22.0


def test_group_invariant_preserved_along_trajectory():
    model, pot, init, base = so3_gaussian_setup(steps=200)
    defects = [orthogonality_defect(g) for g in base.gs]
    assert max(defects) <= 1e-9


def test_jet_recursion_consistency():
    model, pot, init, base = so3_gaussian_setup(steps=200)
    dt = base.dt
    for i in range(2):
        lhs = sampled_derivative(base.xis[:, i, :], dt)
        rhs = base.xis[:, i + 1, :] - model.nabla(base.xis[:, 0, :], base.xis[:, i, :])
        assert np.max(np.abs(lhs - rhs)) <= 1e-6


def test_reduced_equation_residual_at_nodes():
    # FD rate of every stored jet matches the stored right-hand side
    model, pot, init, base = so3_gaussian_setup(steps=200)
    for i in range(3):
        fd = sampled_derivative(base.xis[:, i, :], base.dt)
        assert np.max(np.abs(fd - base.xi_rates[:, i, :])) <= 1e-6


def test_biinvariant_first_integral():
    model = so3()
    pot = zero_potential(model)
    init = CubicState(model.identity(), np.array([0.5, 0.1, -0.3]),
                      np.array([0.2, -0.1, 0.4]), np.array([-0.3, 0.2, 0.1]))
    traj = integrate_cubic(model, pot, init, (0.0, 1.5), 300)
    q = (traj.xis[:, 2, :] * traj.xis[:, 0, :]).sum(axis=1) \
        - 0.5 * (traj.xis[:, 1, :] ** 2).sum(axis=1)
    assert np.max(np.abs(q - q[0])) <= 1e-9


def test_time_reversal_returns_initial_state():
    model, pot, init, base = so3_gaussian_setup(steps=200)
    back = integrate_cubic(model, pot, base.end_state(), (0.0, -1.0), 200)
    assert np.linalg.norm(back.gs[-1] - init.g) <= 1e-8
    assert np.max(np.abs(back.xis[-1] - init.xis())) <= 1e-8


def test_interpolation_accuracy_off_grid():
    model, pot, init, coarse = so3_gaussian_setup(steps=100)
    fine = integrate_cubic(model, pot, init, (0.0, 1.0), 1600)
    for t in (0.1037, 0.5551, 0.9213):
        k = round(t / fine.dt)
        tt = fine.times[k]
        assert np.linalg.norm(coarse.g_at(tt) - fine.gs[k]) <= 1e-7
        assert np.max(np.abs(coarse.xi_at(tt) - fine.xis[k])) <= 1e-6


def test_minimum_step_count_enforced():
    model = abelian(1)
    pot = zero_potential(model)
    init = CubicState(np.zeros(1), np.zeros(1), np.zeros(1), np.zeros(1))
    with pytest.raises(ValueError):
        integrate_cubic(model, pot, init, (0.0, 1.0), 8)


def test_nonfinite_state_detected():
    model = abelian(1)
    pot = zero_potential(model)
    init = CubicState(np.zeros(1), np.full(1, 1e200), np.zeros(1), np.zeros(1))
    with pytest.raises(NonFiniteState):
        integrate_cubic(model, pot, init, (0.0, 1.0), 16)


def test_cut_locus_reported_with_time():
    model = so3()
    pot = ObstaclePotential(model=model,
                            obstacle=rotation_exp([0.0, 0.0, np.pi - 0.05]),
                            shape="quadratic", tau=1.0)
    init = CubicState(model.identity(), np.array([0.0, 0.0, -1.0]),
                      np.zeros(3), np.zeros(3))
    with pytest.raises(CutLocusDuringIntegration) as info:
        integrate_cubic(model, pot, init, (0.0, 1.0), 64)
    assert 0.0 <= info.value.t <= 0.2


def test_shoot_geodesic_boundary_converges_at_guess():
    model = so3()
    pot = zero_potential(model)
    xi0 = np.array([0.3, -0.5, 0.4])
    g_a = rotation_exp([0.2, 0.0, -0.1])
    g_b = g_a @ rotation_exp(xi0)
    state = shoot_bvp(model, pot, (g_a, xi0, g_b, xi0),
                      (np.zeros(3), np.zeros(3)), (0.0, 1.0), 64)
    # residual already below tolerance at the zero guess: returned unchanged
    assert np.all(state.xi1 == 0.0) and np.all(state.xi2 == 0.0)


def test_shoot_recovers_hermite_cubic():
    model = abelian(1)
    pot = zero_potential(model)
    bnd = (np.zeros(1), np.zeros(1), np.ones(1), np.zeros(1))
    state = shoot_bvp(model, pot, bnd, (np.zeros(1), np.zeros(1)),
                      (0.0, 1.0), 64, tol=1e-10)
    assert abs(state.xi1[0] - 6.0) <= 1e-8
    assert abs(state.xi2[0] + 12.0) <= 1e-8
    traj = integrate_cubic(model, pot, state, (0.0, 1.0), 64)
    residual = np.hypot(traj.gs[-1, 0] - 1.0, traj.xis[-1, 0, 0])
    assert residual <= 1e-7


def test_shoot_nontrivial_so3_boundary():
    model, pot, init, base = so3_gaussian_setup(steps=100)
    bnd = (base.gs[0], base.xis[0, 0], base.gs[-1], base.xis[-1, 0])
    state = shoot_bvp(model, pot, bnd, (np.zeros(3), np.zeros(3)), (0.0, 1.0), 100)
    assert np.linalg.norm(state.xi1 - init.xi1) <= 1e-6
    assert np.linalg.norm(state.xi2 - init.xi2) <= 1e-6


def test_shoot_no_convergence_budget():
    model = abelian(1)
    pot = zero_potential(model)
    bnd = (np.zeros(1), np.zeros(1), np.full(1, 1e6), np.zeros(1))
    with pytest.raises(NoConvergence) as info:
        shoot_bvp(model, pot, bnd, (np.zeros(1), np.zeros(1)), (0.0, 1.0), 16,
                  max_iters=2, random_restarts=0)
    assert info.value.residual > 0.0
