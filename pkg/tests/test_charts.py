from __future__ import annotations

import numpy as np
import pytest

from nonholo.core.dynamics import State, accelerations, chart_flow, moving_energy, project_velocity
from nonholo.core.errors import ChartSingularity
from nonholo.core.integrator import integrate
from nonholo.diagnostics.sampling import sample_fiber_states
from nonholo.models import charts
from nonholo.models.lr import veselova_params, veselova_vector_field
from nonholo.models.registry import Chaplygin3DModel, RollingBodyModel, Veselova3DModel, chart_embedding
from nonholo.models.rolling import (
    RollingBodyParams,
    chap3d_vector_field,
    join_state,
    rolling_body_moving_energy,
    rolling_body_vector_field,
)
from nonholo.models.shapes import Ellipsoid, Sphere

from tests.conftest import unit

ELLIPSOID_BODY = RollingBodyParams(
    mass=1.0, gravity=9.81, inertia=np.diag([0.5, 0.6, 0.7]), kappa=1.0, shape=Ellipsoid((1.2, 1.0, 0.8))
)
BALL = RollingBodyParams(mass=1.0, gravity=9.81, inertia=np.diag([0.3, 0.4, 0.5]), kappa=0.7, shape=Sphere(1.0))


def euler_point(rng: np.random.Generator) -> np.ndarray:
    return np.array([rng.uniform(0.0, 2 * np.pi), rng.uniform(0.6, np.pi - 0.6), rng.uniform(0.0, 2 * np.pi)])


def rolling_point(rng: np.random.Generator) -> np.ndarray:
    return np.concatenate([rng.uniform(-0.5, 0.5, size=2), euler_point(rng)])


def chart_states(sys, points, rng: np.random.Generator, per_point: int, radius: float = 1.0):
    for q in points:
        yield from sample_fiber_states(sys, q, rng, per_point, radius)


def test_euler_chart_refuses_poles() -> None:
    with pytest.raises(ChartSingularity):
        charts.euler_kinematics([0.0, 0.05, 0.0])
    with pytest.raises(ChartSingularity):
        charts.euler_kinematics([0.0, np.pi - 0.05, 0.0])
    sys = charts.rolling_chart(ELLIPSOID_BODY)
    with pytest.raises(ChartSingularity) as info:
        sys.metric(np.array([0.0, 0.0, 0.3, 0.05, 0.2]))
    assert info.value.q.shape == (5,)


def test_euler_kinematics_derivatives(rng: np.random.Generator) -> None:
    angles = euler_point(rng)
    kin = charts.euler_kinematics(angles)
    eps = 1e-6
    for l in range(3):
        step = np.zeros(3)
        step[l] = eps
        plus = charts.euler_kinematics(angles + step)
        minus = charts.euler_kinematics(angles - step)
        np.testing.assert_allclose(kin.dg[:, :, l], (plus.g - minus.g) / (2 * eps), atol=1e-8)
        np.testing.assert_allclose(kin.dB[:, :, l], (plus.B - minus.B) / (2 * eps), atol=1e-8)
    # B maps angle rates to the body angular velocity: g^T g' = hat(B a')
    rates = rng.normal(size=3)
    skew = kin.g.T @ (kin.dg @ rates)
    np.testing.assert_allclose(np.array([skew[2, 1], skew[0, 2], skew[1, 0]]), kin.B @ rates, atol=1e-12)


def test_veselova_chart_matches_trivialized_field(rng: np.random.Generator) -> None:
    params = veselova_params([1.0, 2.0, 3.0], unit([0.3, 0.2, 1.0]), 0.4)
    sys = charts.veselova_chart(params)
    points = [euler_point(rng) for _ in range(10)]
    for state in chart_states(sys, points, rng, 10):
        gamma, Omega = charts.veselova_from_chart(params, state.q, state.qdot)
        gamma_dot, omega_dot = charts.veselova_rates_from_chart(params, state.q, state.qdot, accelerations(sys, state))
        expected = veselova_vector_field(params, gamma, Omega)
        np.testing.assert_allclose(gamma_dot, expected[0], atol=1e-8)
        np.testing.assert_allclose(omega_dot, expected[1], atol=1e-8)


@pytest.mark.parametrize(
    "params, field",
    [(ELLIPSOID_BODY, rolling_body_vector_field), (BALL, chap3d_vector_field)],
    ids=["ellipsoid", "ball"],
)
def test_rolling_chart_matches_trivialized_field(params, field, rng: np.random.Generator) -> None:
    sys = charts.rolling_chart(params)
    Y = charts.kappa_generator(params)
    points = [rolling_point(rng) for _ in range(10)]
    for state in chart_states(sys, points, rng, 10):
        K, X, gamma = charts.rolling_from_chart(params, state.q, state.qdot)
        rates = charts.rolling_rates_from_chart(params, state.q, state.qdot, accelerations(sys, state))
        for got, want in zip(rates, field(params, K, X, gamma)):
            np.testing.assert_allclose(got, want, atol=1e-8)
        closed_form = rolling_body_moving_energy(params, K, X, gamma)
        assert moving_energy(sys, state, Y) == pytest.approx(closed_form, abs=1e-9)


def test_finite_differences_agree_with_analytic_derivatives(rng: np.random.Generator) -> None:
    sys = charts.rolling_chart(ELLIPSOID_BODY)
    fd = sys.with_finite_differences()
    for state in chart_states(sys, [rolling_point(rng) for _ in range(3)], rng, 3):
        np.testing.assert_allclose(accelerations(fd, state), accelerations(sys, state), atol=1e-6)
        np.testing.assert_allclose(fd.constraint_jacobian(state.q), sys.constraint_jacobian(state.q), atol=1e-8)
        np.testing.assert_allclose(fd.metric_jacobian(state.q), sys.metric_jacobian(state.q), atol=1e-8)


def test_chart_and_trivialized_trajectories_agree() -> None:
    sys = charts.rolling_chart(ELLIPSOID_BODY)
    q0 = np.array([0.1, -0.2, 0.4, 1.1, 0.3])
    start = project_velocity(sys, State(q0, [0.05, 0.1, 0.3, -0.2, 0.4]))
    chart_traj = integrate(chart_flow(sys), start.flat(), 0.0, 1.0, h=1e-3)
    end = State.from_flat(chart_traj.final_state)

    model = RollingBodyModel(ELLIPSOID_BODY)
    y0 = join_state(*charts.rolling_from_chart(ELLIPSOID_BODY, start.q, start.qdot))
    traj = integrate(model.flow(), y0, 0.0, 1.0, h=1e-3)
    np.testing.assert_allclose(join_state(*charts.rolling_from_chart(ELLIPSOID_BODY, end.q, end.qdot)), traj.final_state, atol=1e-6)


def test_generators_are_horizontal(rng: np.random.Generator) -> None:
    params = veselova_params([1.0, 2.0, 3.0], [0.0, 0.0, 1.0], 0.4)
    sys = charts.veselova_chart(params)
    Y = charts.veselova_affine_generator(params)
    for _ in range(5):
        q = euler_point(rng)
        assert np.linalg.norm(sys.constraint_matrix(q) @ Y(q) + sys.affine_term(q)) < 1e-12
    rolling = charts.rolling_chart(ELLIPSOID_BODY)
    Y_k = charts.kappa_generator(ELLIPSOID_BODY)
    for _ in range(5):
        q = rolling_point(rng)
        assert np.linalg.norm(rolling.constraint_matrix(q) @ Y_k(q) + rolling.affine_term(q)) < 1e-12


def test_chart_embedding_dispatch() -> None:
    assert chart_embedding(Veselova3DModel(veselova_params([1.0, 2.0, 3.0], [0, 0, 1], 0.1))).n == 3
    assert chart_embedding(Chaplygin3DModel(BALL)).n == 5
    assert charts.chart_embedding(ELLIPSOID_BODY).k == 2
    with pytest.raises(ValueError):
        charts.chart_embedding(object())
