from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from nonholo.core.dynamics import State, accelerations, moving_energy, project_velocity
from nonholo.core.integrator import integrate
from nonholo.core.liegroup import hat, killing_pair, son_basis, son_from_coords, unhat
from nonholo.models.charts import veselova_affine_generator, veselova_chart, veselova_from_chart, veselova_rates_from_chart
from nonholo.models.inertia import InertiaOperator
from nonholo.models.lr import (
    LRParams,
    lr_constraint_residuals,
    lr_gram_residual,
    lr_moving_energy,
    lr_project,
    lr_state_from_attitude,
    lr_vector_field,
    pack_lr_state,
    unpack_lr_state,
    veselova_params,
    veselova_vector_field,
)
from nonholo.models.registry import LRSonModel, Veselova3DModel

from tests.conftest import random_rotation, unit

vec3 = arrays(np.float64, 3, elements=st.floats(-2.0, 2.0, allow_nan=False))


def rate(fn, rhs, y: np.ndarray, eps: float = 1e-6) -> float:
    """d/dt fn along the flow of rhs, by a central difference."""
    f = rhs(0.0, y)
    return (fn(y + eps * f) - fn(y - eps * f)) / (2.0 * eps)


def so4_params(c=(0.2, -0.1)) -> LRParams:
    basis = son_basis(4)
    return LRParams(InertiaOperator.from_J([1.0, 2.0, 3.0, 4.0]), (basis[0], basis[5]), np.array(c))


# -- inertia operators ----------------------------------------------------------

@given(vec3)
def test_tensor_form_acts_as_inertia_tensor(omega) -> None:
    tensor = np.array([[2.0, 0.1, 0.0], [0.1, 3.0, -0.2], [0.0, -0.2, 4.0]])
    op = InertiaOperator.from_tensor_3d(tensor)
    np.testing.assert_allclose(unhat(op.apply(hat(omega))), tensor @ omega, atol=1e-12)
    np.testing.assert_allclose(unhat(op.solve(hat(tensor @ omega))), omega, atol=1e-10)


def test_rigid_body_eigenvalues_are_pair_sums() -> None:
    op = InertiaOperator.from_J([1.0, 2.0, 3.0, 4.0])
    np.testing.assert_allclose(np.sort(op.eigenvalues()), [3.0, 4.0, 5.0, 5.0, 6.0, 7.0])


def test_inertia_is_killing_self_adjoint(rng: np.random.Generator) -> None:
    op = InertiaOperator.from_J(np.diag([0.5, 1.5, 2.0, 2.5, 3.0]))
    x = son_from_coords(rng.normal(size=10), 5)
    y = son_from_coords(rng.normal(size=10), 5)
    assert killing_pair(op.apply(x), y) == pytest.approx(killing_pair(x, op.apply(y)), abs=1e-12)


@pytest.mark.parametrize(
    "matrix",
    [
        -np.eye(3),
        np.array([[1.0, 0.5, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]),
        np.eye(2),
    ],
)
def test_invalid_inertia_is_rejected(matrix) -> None:
    with pytest.raises(ValueError):
        InertiaOperator(3, matrix)


# -- LR systems ----------------------------------------------------------------

def test_lr_params_validation() -> None:
    inertia = InertiaOperator.from_J([1.0, 2.0, 3.0])
    with pytest.raises(ValueError, match="orthonormal"):
        LRParams(inertia, (2.0 * hat([1.0, 0.0, 0.0]),))
    with pytest.raises(ValueError, match="too many"):
        LRParams(inertia, tuple(son_basis(3)))
    with pytest.raises(ValueError):
        LRParams(inertia, (hat([1.0, 0.0, 0.0]),), np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        veselova_params([1.0, 2.0, 3.0], [0.0, 0.0, 0.0])


@settings(deadline=None, max_examples=40)
@given(vec3, vec3)
def test_veselova_constraint_is_preserved_pointwise(gamma, omega) -> None:
    if np.linalg.norm(gamma) < 1e-3:
        gamma = np.array([0.0, 0.0, 1.0])
    params = veselova_params([1.0, 2.0, 3.0], [0.0, 0.0, 1.0], 0.5)
    gamma_dot, omega_dot = veselova_vector_field(params, unit(gamma), omega)
    np.testing.assert_allclose(gamma_dot, np.cross(unit(gamma), omega), atol=1e-12)
    assert float(gamma_dot @ omega + unit(gamma) @ omega_dot) == pytest.approx(0.0, abs=1e-10)


@settings(deadline=None, max_examples=25)
@given(arrays(np.float64, 6, elements=st.floats(-2.0, 2.0, allow_nan=False)), st.integers(0, 2**31 - 1))
def test_so4_invariants_are_stationary(omega_coords, seed) -> None:
    params = so4_params()
    g = random_rotation(np.random.default_rng(seed), 4)
    gammas, Omega = lr_project(params, *lr_state_from_attitude(params, g, son_from_coords(omega_coords, 4)))
    assert np.max(np.abs(lr_constraint_residuals(params, gammas, Omega))) < 1e-12
    assert lr_gram_residual(params, gammas) < 1e-12

    y = pack_lr_state(gammas, Omega)

    def rhs(t, z):
        return pack_lr_state(*lr_vector_field(params, *unpack_lr_state(params, z)))

    scale = 1.0 + float(omega_coords @ omega_coords)
    assert abs(rate(lambda z: lr_moving_energy(params, *unpack_lr_state(params, z)), rhs, y)) < 1e-7 * scale
    for j in range(params.k):
        constraint = rate(lambda z: lr_constraint_residuals(params, *unpack_lr_state(params, z))[j], rhs, y)
        assert abs(constraint) < 1e-7 * scale


def test_veselova_model_conserves_moving_energy_not_energy() -> None:
    model = Veselova3DModel(veselova_params([1.0, 2.0, 3.0], [0.0, 0.0, 1.0], 0.5))
    y0 = np.array([0.3, 0.4, 0.866, 0.4, -0.3, 0.6])
    traj = integrate(
        model.flow(project=True, observables=["moving_energy", "energy", "constraint_residual"]),
        y0, 0.0, 5.0, h=2e-3,
    )
    me = traj.observable("moving_energy")
    e = traj.observable("energy")
    assert np.max(np.abs(me - me[0])) < 1e-8
    assert np.max(np.abs(e - e[0])) > 1e-4
    assert np.max(np.abs(traj.observable("constraint_residual"))) < 1e-12


def test_lr_son_model_run() -> None:
    section_params = so4_params()
    model = LRSonModel(section_params)
    omega = son_from_coords([0.3, -0.2, 0.5, 0.1, 0.4, -0.6], 4)
    y0 = pack_lr_state(*lr_state_from_attitude(section_params, np.eye(4), omega))
    traj = integrate(model.flow(project=True), y0, 0.0, 2.0, h=5e-3)
    me = traj.observable("moving_energy")
    assert np.max(np.abs(me - me[0])) < 1e-8
    assert model.residuals(traj.final_state)["gram"] < 1e-12
    assert len(model.state_names()) == model.dimension == 18


def test_zero_affine_term_gives_classical_energy_integral() -> None:
    params = veselova_params([1.0, 2.0, 3.0], [0.0, 1.0, 0.0], 0.0)
    model = Veselova3DModel(params)
    y0 = model.project(np.array([0.0, 1.0, 0.0, 0.5, 0.0, -0.4]))
    traj = integrate(model.flow(observables=["energy"]), y0, 0.0, 3.0, h=5e-3)
    e = traj.observable("energy")
    assert np.max(np.abs(e - e[0])) < 1e-9


# -- chart agreement -------------------------------------------------------------

def _chart_state(params, q, rate_guess) -> State:
    return project_velocity(veselova_chart(params), State(q, rate_guess))


def test_chart_moving_energy_matches_trivialized(rng: np.random.Generator) -> None:
    params = veselova_params([1.0, 2.0, 3.0], unit([0.2, -0.1, 1.0]), 0.5)
    sys = veselova_chart(params)
    Y = veselova_affine_generator(params)
    for _ in range(20):
        q = np.array([rng.uniform(0, 6), rng.uniform(0.6, 2.5), rng.uniform(0, 6)])
        state = _chart_state(params, q, rng.normal(size=3))
        gamma, Omega = veselova_from_chart(params, state.q, state.qdot)
        assert float(gamma @ Omega) == pytest.approx(0.5, abs=1e-10)
        expected = lr_moving_energy(params, [hat(gamma)], hat(Omega))
        assert moving_energy(sys, state, Y) == pytest.approx(expected, abs=1e-10)

        rates = veselova_rates_from_chart(params, state.q, state.qdot, accelerations(sys, state))
        gamma_dot, omega_dot = veselova_vector_field(params, gamma, Omega)
        np.testing.assert_allclose(rates[0], gamma_dot, atol=1e-8)
        np.testing.assert_allclose(rates[1], omega_dot, atol=1e-8)
