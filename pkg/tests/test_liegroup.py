from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy import linalg

from nonholo.core.errors import OrientationError
from nonholo.core.liegroup import (
    adjoint,
    bracket,
    exp_map,
    hat,
    is_special_orthogonal,
    killing_pair,
    reorthonormalize,
    son_basis,
    son_coords,
    son_from_coords,
    unhat,
    wedge,
)

from tests.conftest import random_rotation

vec3 = arrays(np.float64, 3, elements=st.floats(-5.0, 5.0, allow_nan=False))


@given(vec3, vec3)
def test_hat_is_cross_product(a, b) -> None:
    np.testing.assert_allclose(hat(a) @ b, np.cross(a, b), atol=1e-12)
    np.testing.assert_allclose(unhat(hat(a)), a, atol=0)


@given(vec3, vec3)
def test_wedge_matches_hat_of_reversed_cross(a, b) -> None:
    np.testing.assert_allclose(wedge(a, b), hat(np.cross(b, a)), atol=1e-12)


@given(vec3, vec3)
def test_bracket_of_hats_is_hat_of_cross(a, b) -> None:
    np.testing.assert_allclose(bracket(hat(a), hat(b)), hat(np.cross(a, b)), atol=1e-10)


def test_killing_pair_on_hats_is_dot_product() -> None:
    a = np.array([0.3, -1.2, 2.0])
    b = np.array([1.5, 0.4, -0.7])
    assert killing_pair(hat(a), hat(b)) == pytest.approx(float(a @ b), abs=1e-14)


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_son_basis_is_killing_orthonormal(n: int) -> None:
    basis = son_basis(n)
    gram = np.array([[killing_pair(x, y) for y in basis] for x in basis])
    np.testing.assert_allclose(gram, np.eye(len(basis)), atol=1e-15)
    # coordinates of a basis element pick out one entry
    for c, x in enumerate(basis):
        coords = son_coords(x)
        assert coords[c] == 1.0 and np.count_nonzero(coords) == 1


def test_son_coords_of_hat() -> None:
    a = np.array([1.0, 2.0, 3.0])
    np.testing.assert_array_equal(son_coords(hat(a)), [-3.0, 2.0, -1.0])


@pytest.mark.parametrize("n", [3, 4, 5])
def test_killing_pair_is_ad_invariant(n: int, rng: np.random.Generator) -> None:
    g = random_rotation(rng, n)
    x = son_from_coords(rng.normal(size=n * (n - 1) // 2), n)
    y = son_from_coords(rng.normal(size=n * (n - 1) // 2), n)
    assert killing_pair(adjoint(g, x), adjoint(g, y)) == pytest.approx(killing_pair(x, y), abs=1e-12)
    assert killing_pair(x, x) > 0.0


def test_exp_map_matches_matrix_exponential(rng: np.random.Generator) -> None:
    for _ in range(20):
        a = rng.normal(size=3) * 2.0
        g = exp_map(hat(a))
        np.testing.assert_allclose(g, linalg.expm(hat(a)), atol=1e-12)
        assert is_special_orthogonal(g)
    # tiny angles use the series branch
    a = np.array([1e-10, -2e-10, 3e-10])
    np.testing.assert_allclose(exp_map(hat(a)), np.eye(3) + hat(a), atol=1e-18)


@pytest.mark.parametrize("n", [4, 5])
def test_exp_map_in_higher_dimensions(n: int, rng: np.random.Generator) -> None:
    xi = son_from_coords(rng.normal(size=n * (n - 1) // 2), n)
    g = exp_map(xi)
    assert is_special_orthogonal(g)
    np.testing.assert_allclose(exp_map(-xi) @ g, np.eye(n), atol=1e-12)


def test_reorthonormalize_repairs_drifted_rotation(rng: np.random.Generator) -> None:
    g = random_rotation(rng, 4)
    drifted = g + 1e-6 * rng.normal(size=(4, 4))
    fixed = reorthonormalize(drifted)
    assert is_special_orthogonal(fixed, tol=1e-12)
    assert np.max(np.abs(fixed - g)) < 1e-5


def test_reorthonormalize_rejects_reflections() -> None:
    with pytest.raises(OrientationError):
        reorthonormalize(np.diag([1.0, 1.0, -1.0]))


def test_shape_checks() -> None:
    with pytest.raises(ValueError):
        hat([1.0, 2.0])
    with pytest.raises(ValueError):
        wedge([1.0, 0.0, 0.0], [1.0, 0.0])
    with pytest.raises(ValueError):
        son_from_coords([1.0, 2.0], 3)


@settings(deadline=None, max_examples=30)
@given(arrays(np.float64, 6, elements=st.floats(-3.0, 3.0, allow_nan=False)))
def test_adjoint_is_conjugation(coords) -> None:
    g = exp_map(son_from_coords(np.array([0.4, -0.2, 0.9, 0.1, 0.3, -0.5]), 4))
    xi = son_from_coords(coords, 4)
    np.testing.assert_allclose(adjoint(g, xi), g @ xi @ g.T, atol=1e-12)
    np.testing.assert_allclose(adjoint(g.T, adjoint(g, xi)), xi, atol=1e-12)
