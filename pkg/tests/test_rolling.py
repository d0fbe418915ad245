from __future__ import annotations

from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from nonholo.core.dynamics import central_difference, reaction_force
from nonholo.core.errors import InversionDegeneracy
from nonholo.core.integrator import integrate
from nonholo.diagnostics.sampling import sample_fiber_states
from nonholo.models.charts import rolling_chart
from nonholo.models.registry import Chaplygin3DModel, RollingBodyModel
from nonholo.models.rolling import (
    K_from_omega_3d,
    RollingBodyParams,
    chap3d_vector_field,
    omega_from_K_3d,
    rolling_body_vector_field,
    rolling_project,
    rolling_residuals,
    split_state,
)
from nonholo.models.shapes import Ellipsoid, Sphere

from tests.conftest import unit

vec3 = arrays(np.float64, 3, elements=st.floats(-2.0, 2.0, allow_nan=False))
ELLIPSOID = Ellipsoid((1.2, 1.0, 0.8))


def ellipsoid_body(kappa: float = 1.0) -> RollingBodyParams:
    return RollingBodyParams(mass=1.0, gravity=1.0, inertia=np.diag([0.5, 0.6, 0.7]), kappa=kappa, shape=ELLIPSOID)


def ball(kappa: float, inertia=(0.3, 0.4, 0.5), radius: float = 1.0) -> RollingBodyParams:
    return RollingBodyParams(mass=1.0, gravity=9.81, inertia=np.diag(inertia), kappa=kappa, shape=Sphere(radius))


# -- shapes ----------------------------------------------------------------------

@given(vec3)
def test_ellipsoid_support_point(gamma) -> None:
    if np.linalg.norm(gamma) < 1e-3:
        gamma = np.array([0.3, -0.2, 0.9])
    gamma = unit(gamma)
    rho = ELLIPSOID.F(gamma)
    assert ELLIPSOID.surface_residual(rho) == pytest.approx(0.0, abs=1e-12)
    normal = unit(rho / np.square(ELLIPSOID.semi_axes))
    np.testing.assert_allclose(normal, gamma, atol=1e-12)


def test_ellipsoid_jacobian_matches_finite_differences() -> None:
    gamma = unit([0.3, -0.5, 0.8])
    np.testing.assert_allclose(ELLIPSOID.DF(gamma), central_difference(ELLIPSOID.F, gamma), atol=1e-8)
    # degree-0 homogeneity: DF annihilates gamma
    np.testing.assert_allclose(ELLIPSOID.DF(gamma) @ gamma, 0.0, atol=1e-14)


def test_shape_validation() -> None:
    with pytest.raises(ValueError):
        Sphere(0.0)
    with pytest.raises(ValueError):
        Ellipsoid((1.0, -1.0, 1.0))
    with pytest.raises(ValueError):
        RollingBodyParams(mass=-1.0, gravity=1.0, inertia=np.eye(3), kappa=0.0, shape=Sphere(1.0))
    with pytest.raises(ValueError):
        RollingBodyParams(mass=1.0, gravity=1.0, inertia=np.diag([1.0, -1.0, 1.0]), kappa=0.0, shape=Sphere(1.0))


# -- momentum map ------------------------------------------------------------------

@given(vec3, vec3)
def test_omega_from_K_inverts_K(gamma, omega) -> None:
    if np.linalg.norm(gamma) < 1e-3:
        gamma = np.array([0.0, 0.0, 1.0])
    params = ellipsoid_body()
    gamma = unit(gamma)
    K = K_from_omega_3d(params, gamma, omega)
    np.testing.assert_allclose(omega_from_K_3d(params, gamma, K), omega, atol=1e-10)


def test_degenerate_inversion_is_reported() -> None:
    params = ball(0.0)
    # a huge support point makes the rank-one update numerically singular
    shape = SimpleNamespace(F=lambda g: np.array([1e9, 0.0, 0.0]))
    broken = SimpleNamespace(mass=1.0, inertia=params.inertia, shape=shape)
    with pytest.raises(InversionDegeneracy):
        omega_from_K_3d(broken, np.array([1.0, 0.0, 0.0]), np.ones(3))


# -- sphere: general field equals the Chaplygin ball field -----------------------------

@settings(deadline=None, max_examples=50)
@given(vec3, vec3, vec3, st.floats(-2.0, 2.0))
def test_sphere_reduces_to_chaplygin_ball(gamma, K, X, kappa) -> None:
    if np.linalg.norm(gamma) < 1e-3:
        gamma = np.array([0.0, 0.0, 1.0])
    params = ball(kappa, radius=0.7)
    gamma = unit(gamma)
    general = rolling_body_vector_field(params, K, X, gamma)
    special = chap3d_vector_field(params, K, X, gamma)
    for a, b in zip(general, special):
        np.testing.assert_allclose(a, b, atol=1e-10)
    # K.gamma is stationary for the ball
    K_dot, _, gamma_dot = special
    assert float(K_dot @ gamma + K @ gamma_dot) == pytest.approx(0.0, abs=1e-10)


def test_homogeneous_ball_spins_steadily() -> None:
    params = ball(0.0, inertia=(0.4, 0.4, 0.4))
    model = RollingBodyModel(params)
    y0 = model.initial_state(SimpleNamespace(gamma=(0.2, -0.3, 0.9), omega=(0.7, -0.4, 1.1)))
    traj = integrate(model.flow(observables=["moving_energy", "omega_norm"]), y0, 0.0, 5.0, h=1e-3)
    omegas = []
    for y in traj.states[:: max(1, len(traj) // 20)]:
        K, _, gamma = split_state(y)
        omegas.append(omega_from_K_3d(params, gamma, K))
    omegas = np.array(omegas)
    assert np.max(np.abs(omegas - omegas[0])) < 1e-9


def test_homogeneous_ball_has_no_reaction_in_chart(rng: np.random.Generator) -> None:
    params = ball(0.0, inertia=(0.4, 0.4, 0.4))
    sys = rolling_chart(params)
    for _ in range(10):
        q = np.array([rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0, 6), rng.uniform(0.6, 2.5), rng.uniform(0, 6)])
        for state in sample_fiber_states(sys, q, rng, 100, 1.0):
            assert np.linalg.norm(reaction_force(sys, state)) < 1e-10


# -- ellipsoid on a rotating plane ----------------------------------------------------

def test_ellipsoid_conserves_moving_energy_not_energy() -> None:
    model = RollingBodyModel(ellipsoid_body(kappa=1.0))
    y0 = model.initial_state(SimpleNamespace(gamma=(0.2, 0.1, 1.0), omega=(0.3, -0.2, 0.5)))
    traj = integrate(model.flow(observables=["moving_energy", "energy"]), y0, 0.0, 3.0, h=1e-3)
    me = traj.observable("moving_energy")
    e = traj.observable("energy")
    assert np.max(np.abs(me - me[0])) / max(abs(me[0]), 1.0) < 1e-7
    assert np.max(np.abs(e - e[0])) > 1e-4


def test_invariant_manifold_is_preserved_without_projection() -> None:
    model = RollingBodyModel(ellipsoid_body(kappa=0.5))
    y0 = model.initial_state(SimpleNamespace(gamma=(0.3, -0.4, 0.8), omega=(0.2, 0.5, -0.3)))
    traj = integrate(model.flow(project=False), y0, 0.0, 2.0, h=1e-3)
    res = rolling_residuals(model.params, *split_state(traj.final_state))
    assert abs(res["gamma_norm"]) < 1e-9
    assert abs(res["contact"]) < 1e-9


def test_rolling_projection() -> None:
    params = ellipsoid_body()
    K, X, gamma = rolling_project(params, np.ones(3), np.array([0.5, 0.5, 0.5]), np.array([0.0, 0.1, 1.2]))
    res = rolling_residuals(params, K, X, gamma)
    assert abs(res["gamma_norm"]) < 1e-14
    assert abs(res["contact"]) < 1e-14
    np.testing.assert_array_equal(K, np.ones(3))


def test_chaplygin_ball_model_tilde_energy() -> None:
    model = Chaplygin3DModel(ball(kappa=2.0))
    y0 = model.initial_state(SimpleNamespace(gamma=(0.1, 0.2, 1.0), x_body=None, omega=(0.5, -0.5, 0.2)))
    traj = integrate(model.flow(observables=["moving_energy", "tilde_energy", "k_dot_gamma"]), y0, 0.0, 2.0, h=1e-3)
    for name in ("moving_energy", "tilde_energy", "k_dot_gamma"):
        series = traj.observable(name)
        assert np.max(np.abs(series - series[0])) / max(abs(series[0]), 1.0) < 1e-8
    with pytest.raises(ValueError):
        Chaplygin3DModel.from_section(SimpleNamespace(shape="ellipsoid", semi_axes=(1, 1, 1), radius=1.0))
