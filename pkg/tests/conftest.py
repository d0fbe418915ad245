from __future__ import annotations

import numpy as np
import pytest

from nonholo.core.dynamics import MechanicalSystem
from nonholo.core.liegroup import exp_map, son_dim, son_from_coords
from nonholo.core.settings import Settings


def heavy_particle() -> MechanicalSystem:
    """Unit-mass particle in the plane, V = q2, constraint q1' + q2' = 0."""
    return MechanicalSystem(
        n=2,
        k=1,
        A=lambda q: np.eye(2),
        S=lambda q: np.array([[1.0, 1.0]]),
        V=lambda q: q[1],
        dA=lambda q: np.zeros((2, 2, 2)),
        dV=lambda q: np.array([0.0, 1.0]),
        dS=lambda q: np.zeros((1, 2, 2)),
        name="heavy-particle",
    )


def random_rotation(rng: np.random.Generator, n: int) -> np.ndarray:
    return exp_map(son_from_coords(rng.normal(size=son_dim(n)), n))


def unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


@pytest.fixture
def heavy_toy() -> MechanicalSystem:
    return heavy_particle()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240519)


@pytest.fixture
def settings(tmp_path) -> Settings:
    return Settings(output_dir=str(tmp_path / "out"))
