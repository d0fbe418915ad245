from __future__ import annotations

from typing import List, Optional, Sequence

import numpy as np

from nonholo.core.dynamics import MechanicalSystem, State, constraint_geometry


def make_rng(seed: Optional[int]) -> np.random.Generator:
    """PCG64 generator; ``None`` draws fresh OS entropy."""
    return np.random.default_rng(seed)


def spawn(seed: Optional[int], count: int) -> List[np.random.Generator]:
    """Independent child streams, one per worker or test."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


def sample_ball(rng: np.random.Generator, dim: int, radius: float, count: int) -> np.ndarray:
    """``count`` points uniformly distributed in the closed ball of given radius."""
    directions = rng.standard_normal((count, dim))
    norms = np.linalg.norm(directions, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    radii = radius * rng.random((count, 1)) ** (1.0 / dim)
    return directions / norms * radii


def sample_fiber_states(
    sys: MechanicalSystem,
    q,
    rng: np.random.Generator,
    count: int,
    radius: float,
) -> List[State]:
    """On-manifold states v = Z0(q) + D(q) u with u uniform in a ball."""
    q = np.asarray(q, dtype=float)
    geom = constraint_geometry(sys, q)
    coeffs = sample_ball(rng, geom.D_basis.shape[1], radius, count)
    return [State(q.copy(), geom.Z0 + geom.D_basis @ u) for u in coeffs]


def sample_points(rng: np.random.Generator, lows: Sequence[float], highs: Sequence[float], count: int) -> List[np.ndarray]:
    lows = np.asarray(lows, dtype=float)
    highs = np.asarray(highs, dtype=float)
    return [rng.uniform(lows, highs) for _ in range(count)]
