"""Matrix utilities for SO(n) and its algebra so(n).

Conventions used throughout the package:

- ``hat(a) @ b == np.cross(a, b)`` for 3-vectors.
- ``wedge(a, b) = a b^T - b a^T``; for n = 3 this equals ``hat(np.cross(b, a))``.
- The Killing pairing is ``<x, y> = -1/2 trace(x y)``.
- so(n) coordinates follow the lexicographic order of index pairs (i, j), i < j,
  and the coordinate of x on ``wedge(e_i, e_j)`` is simply ``x[i, j]``.
"""
from __future__ import annotations

import math
from functools import lru_cache
from typing import List, Tuple

import numpy as np
from scipy import linalg

from nonholo.core.errors import OrientationError


def hat(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.shape != (3,):
        raise ValueError(f"hat expects a 3-vector, got shape {a.shape}")
    return np.array(
        [
            [0.0, -a[2], a[1]],
            [a[2], 0.0, -a[0]],
            [-a[1], a[0], 0.0],
        ]
    )


def unhat(xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (3, 3):
        raise ValueError(f"unhat expects a 3x3 matrix, got shape {xi.shape}")
    return np.array([xi[2, 1], xi[0, 2], xi[1, 0]])


def skew_part(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    return 0.5 * (m - m.T)


def wedge(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"wedge expects two vectors of equal length, got {a.shape} and {b.shape}")
    return np.outer(a, b) - np.outer(b, a)


def killing_pair(x1, x2) -> float:
    return float(-0.5 * np.einsum("ij,ji->", np.asarray(x1, dtype=float), np.asarray(x2, dtype=float)))


def bracket(x1, x2) -> np.ndarray:
    return x1 @ x2 - x2 @ x1


def adjoint(g, xi) -> np.ndarray:
    """Ad_g xi = g xi g^{-1} for orthogonal g, stored exactly skew."""
    g = np.asarray(g, dtype=float)
    return skew_part(g @ np.asarray(xi, dtype=float) @ g.T)


def reorthonormalize(g) -> np.ndarray:
    """Nearest rotation matrix to ``g`` (orthogonal factor of the polar decomposition)."""
    u, _ = linalg.polar(np.asarray(g, dtype=float))
    if np.linalg.det(u) < 0.0:
        raise OrientationError("matrix is closest to an improper rotation (det < 0)")
    return u


def _rodrigues(a: np.ndarray) -> np.ndarray:
    theta = float(np.linalg.norm(a))
    k = hat(a)
    if theta < 1e-8:
        # series to second order; the truncation error is below rounding here
        return np.eye(3) + k + 0.5 * (k @ k)
    return np.eye(3) + (math.sin(theta) / theta) * k + ((1.0 - math.cos(theta)) / theta**2) * (k @ k)


def exp_map(xi) -> np.ndarray:
    xi = skew_part(xi)
    if xi.shape == (3, 3):
        return reorthonormalize(_rodrigues(unhat(xi)))
    return reorthonormalize(linalg.expm(xi))


def son_dim(n: int) -> int:
    return n * (n - 1) // 2


@lru_cache(maxsize=None)
def son_index_pairs(n: int) -> Tuple[Tuple[int, int], ...]:
    return tuple((i, j) for i in range(n) for j in range(i + 1, n))


def son_basis(n: int) -> List[np.ndarray]:
    """Killing-orthonormal basis {wedge(e_i, e_j)}, i < j, in lexicographic order."""
    eye = np.eye(n)
    return [wedge(eye[i], eye[j]) for i, j in son_index_pairs(n)]


def son_coords(xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    n = xi.shape[0]
    rows, cols = np.triu_indices(n, k=1)
    return xi[rows, cols].copy()


def son_from_coords(c, n: int) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if c.shape != (son_dim(n),):
        raise ValueError(f"expected {son_dim(n)} so({n}) coordinates, got shape {c.shape}")
    xi = np.zeros((n, n))
    rows, cols = np.triu_indices(n, k=1)
    xi[rows, cols] = c
    return xi - xi.T


def is_special_orthogonal(g, tol: float = 1e-9) -> bool:
    g = np.asarray(g, dtype=float)
    n = g.shape[0]
    return bool(np.max(np.abs(g.T @ g - np.eye(n))) <= tol and abs(np.linalg.det(g) - 1.0) <= tol)


def rot_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rot_y(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
