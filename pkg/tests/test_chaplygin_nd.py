from __future__ import annotations

from types import SimpleNamespace

import numpy as np
import pytest

from nonholo.core.integrator import integrate
from nonholo.core.liegroup import hat, son_dim, son_from_coords, wedge
from nonholo.models.chaplygin_nd import (
    ChapNDParams,
    K_from_omega_nd,
    chapnd_full_vector_field,
    chapnd_moving_energy,
    chapnd_reaction_torques,
    chapnd_reduced_residuals,
    chapnd_reduced_vector_field,
    eta_from_planes,
    omega_from_K_nd,
    reduce_full_state,
    split_reduced,
    xi_orbit_residual,
)
from nonholo.models.inertia import InertiaOperator
from nonholo.models.registry import ChaplyginNDModel, ChaplyginNDReducedModel
from nonholo.models.rolling import RollingBodyParams, chap3d_vector_field
from nonholo.models.shapes import Sphere

from tests.conftest import random_rotation, unit


def params_nd(n: int, eta_mags=(0.3,), planes=((1, 2),), mass: float = 1.0, radius: float = 0.8) -> ChapNDParams:
    inertia = InertiaOperator.from_J(np.linspace(1.0, 1.0 + 0.2 * (n - 1), n))
    return ChapNDParams(mass, radius, inertia, eta_from_planes(n, list(eta_mags), list(planes)))


def full_state(params: ChapNDParams, rng: np.random.Generator):
    n = params.n
    x = np.append(rng.normal(size=n - 1), params.radius)
    g = random_rotation(rng, n)
    Omega = son_from_coords(rng.normal(size=son_dim(n)), n)
    return x, g, K_from_omega_nd(params, g[n - 1, :], Omega)


def test_eta_from_planes() -> None:
    eye = np.eye(4)
    np.testing.assert_allclose(eta_from_planes(4, [0.3], [(1, 2)]), 0.3 * wedge(eye[0], eye[1]))
    both = eta_from_planes(4, [0.3, -0.5], [(1, 2), (2, 3)])
    np.testing.assert_allclose(both, 0.3 * wedge(eye[0], eye[1]) - 0.5 * wedge(eye[1], eye[2]))
    np.testing.assert_allclose(both[:, 3], 0.0)


@pytest.mark.parametrize("plane", [(1, 4), (2, 2), (0, 1)])
def test_eta_planes_must_lie_in_the_hyperplane(plane) -> None:
    with pytest.raises(ValueError):
        eta_from_planes(4, [1.0], [plane])


def test_params_validation() -> None:
    inertia = InertiaOperator.from_J([1.0, 2.0, 3.0])
    eye = np.eye(3)
    with pytest.raises(ValueError, match="normal direction"):
        ChapNDParams(1.0, 1.0, inertia, wedge(eye[0], eye[2]))
    with pytest.raises(ValueError):
        ChapNDParams(0.0, 1.0, inertia, np.zeros((3, 3)))
    with pytest.raises(ValueError):
        ChapNDParams(1.0, 1.0, InertiaOperator.from_J([1.0, 2.0]), np.zeros((2, 2)))


def test_momentum_operator_round_trip(rng: np.random.Generator) -> None:
    params = params_nd(5)
    gamma = unit(rng.normal(size=5))
    Omega = son_from_coords(rng.normal(size=10), 5)
    np.testing.assert_allclose(omega_from_K_nd(params, gamma, K_from_omega_nd(params, gamma, Omega)), Omega, atol=1e-12)


def test_three_dimensional_case_is_the_chaplygin_ball(rng: np.random.Generator) -> None:
    kappa, m, r = 1.3, 1.0, 0.8
    tensor = np.diag([0.3, 0.4, 0.5])
    nd = ChapNDParams(m, r, InertiaOperator.from_tensor_3d(tensor), eta_from_planes(3, [kappa], [(2, 1)]))
    ball = RollingBodyParams(mass=m, gravity=9.81, inertia=tensor, kappa=kappa, shape=Sphere(r))
    for _ in range(100):
        K = rng.normal(size=3)
        X = rng.normal(size=3)
        gamma = unit(rng.normal(size=3))
        K3, X3, g3 = chap3d_vector_field(ball, K, X, gamma)
        Kn, Xn, gn, Xin = chapnd_reduced_vector_field(nd, hat(K), X, gamma, kappa * hat(gamma))
        np.testing.assert_allclose(Kn, hat(K3), atol=1e-12)
        np.testing.assert_allclose(Xn, X3, atol=1e-12)
        np.testing.assert_allclose(gn, g3, atol=1e-12)
        np.testing.assert_allclose(Xin, kappa * hat(g3), atol=1e-12)


@pytest.mark.parametrize("n", [4, 5])
def test_full_and_reduced_fields_agree(n: int, rng: np.random.Generator) -> None:
    params = params_nd(n, eta_mags=(0.3, 0.7), planes=((1, 2), (2, 3)))
    for _ in range(5):
        x, g, K = full_state(params, rng)
        x_dot, g_dot, K_dot = chapnd_full_vector_field(params, x, g, K)
        K_r, X_r, gamma_r, Xi_r = chapnd_reduced_vector_field(params, *reduce_full_state(params, x, g, K))
        np.testing.assert_allclose(K_r, K_dot, atol=1e-10)
        np.testing.assert_allclose(X_r, g_dot.T @ x + g.T @ x_dot, atol=1e-10)
        np.testing.assert_allclose(gamma_r, g_dot[n - 1, :], atol=1e-10)
        eta = params.eta
        np.testing.assert_allclose(Xi_r, g_dot.T @ eta @ g + g.T @ eta @ g_dot, atol=1e-10)


def test_full_and_reduced_trajectories_agree() -> None:
    section = SimpleNamespace(
        n=4, mass=1.0, radius=1.0, inertia_j=[1.0, 1.2, 1.4, 1.6], eta=[0.3], eta_planes=[[1, 2]],
    )
    initial = SimpleNamespace(x=[0.2, -0.1, 0.0], g=None, omega=[0.3, -0.2, 0.4, 0.1, -0.3, 0.2])
    full = ChaplyginNDModel.from_section(section)
    reduced = ChaplyginNDReducedModel.from_section(section)
    y_full = full.initial_state(initial)
    y_red = reduced.initial_state(initial)
    np.testing.assert_allclose(full.reduce(y_full), y_red, atol=1e-14)

    traj_full = integrate(full.flow(), y_full, 0.0, 10.0, h=5e-3)
    traj_red = integrate(reduced.flow(), y_red, 0.0, 10.0, h=5e-3)
    np.testing.assert_allclose(full.reduce(traj_full.final_state), traj_red.final_state, atol=1e-6)


def test_reaction_torque_matches_contact_prediction(rng: np.random.Generator) -> None:
    params = params_nd(4, eta_mags=(), planes=())
    x, g, K = full_state(params, rng)
    _, R2, R2_predicted = chapnd_reaction_torques(params, x, g, K)
    np.testing.assert_allclose(R2, R2_predicted, atol=1e-6)


def test_moving_energy_and_xi_orbit_are_conserved() -> None:
    params = params_nd(4, eta_mags=(0.5,), planes=((1, 3),), radius=1.0)
    model = ChaplyginNDReducedModel(params)
    initial = SimpleNamespace(x=[0.3, 0.1, -0.2], g=None, omega=[0.4, -0.1, 0.2, 0.3, -0.2, 0.1])
    y0 = model.initial_state(initial)
    traj = integrate(model.flow(observables=["moving_energy", "xi_orbit_residual"]), y0, 0.0, 5.0, h=5e-3)
    me = traj.observable("moving_energy")
    assert np.max(np.abs(me - me[0])) / max(abs(me[0]), 1.0) < 1e-8
    assert np.max(traj.observable("xi_orbit_residual")) < 1e-8
    res = chapnd_reduced_residuals(params, *split_reduced(params, traj.final_state))
    assert abs(res["gamma_norm"]) < 1e-12 and abs(res["height"]) < 1e-12
    assert res["xi_gamma"] < 1e-8
    assert xi_orbit_residual(params, params.eta) == 0.0


def test_moving_energy_dispatch(rng: np.random.Generator) -> None:
    params = params_nd(4)
    state = full_state(params, rng)
    assert chapnd_moving_energy(params, state) == pytest.approx(
        chapnd_moving_energy(params, reduce_full_state(params, *state)), abs=1e-12
    )
