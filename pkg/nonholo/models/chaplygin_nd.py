"""n-dimensional Chaplygin sphere rolling on a rotating hyperplane.

The ball has radius r, mass m and centre x with x_n = r; the plane {x_n = 0}
rotates with angular velocity eta in so(n-1) (eta e_n = 0). Two descriptions:

- full:    (x, g, K) with g in SO(n)
- reduced: (K, X, gamma, Xi) with X = g^T x, gamma = g^T e_n, Xi = Ad_{g^-1} eta

where K = I(Omega) + m r^2 (Gamma Omega + Omega Gamma), Gamma = gamma gamma^T.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Tuple

import numpy as np
from scipy import linalg

from nonholo.core.liegroup import (
    adjoint,
    bracket,
    killing_pair,
    reorthonormalize,
    son_basis,
    son_coords,
    son_dim,
    son_from_coords,
    wedge,
)
from nonholo.models.inertia import InertiaOperator, solve_son

logger = logging.getLogger(__name__)

FullState = Tuple[np.ndarray, np.ndarray, np.ndarray]
ReducedState = Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]


@dataclass(frozen=True, eq=False)
class ChapNDParams:
    """Attributes:
    mass: ball mass m
    radius: ball radius r
    inertia: inertia operator on so(n)
    eta: angular velocity of the plane, an so(n) element with eta e_n = 0
    """

    mass: float
    radius: float
    inertia: InertiaOperator
    eta: np.ndarray

    def __post_init__(self) -> None:
        n = self.inertia.n
        if n < 3:
            raise ValueError("the n-dimensional Chaplygin sphere needs n >= 3")
        if not self.mass > 0.0:
            raise ValueError("mass must be positive")
        if not self.radius > 0.0:
            raise ValueError("radius must be positive")
        eta = np.asarray(self.eta, dtype=float)
        if eta.shape != (n, n) or not np.allclose(eta, -eta.T, atol=1e-12):
            raise ValueError(f"eta must be a skew {n}x{n} matrix")
        if np.max(np.abs(eta[:, n - 1])) > 1e-12:
            raise ValueError("eta must fix the normal direction e_n")
        object.__setattr__(self, "eta", 0.5 * (eta - eta.T))

    @property
    def n(self) -> int:
        return self.inertia.n


def eta_from_planes(n: int, magnitudes, planes) -> np.ndarray:
    """Sum of magnitude * wedge(e_i, e_j) over 1-based index pairs (i, j)."""
    eye = np.eye(n)
    eta = np.zeros((n, n))
    for value, (i, j) in zip(magnitudes, planes):
        if not (1 <= i <= n - 1 and 1 <= j <= n - 1) or i == j:
            raise ValueError(f"plane ({i}, {j}) must use two distinct indices below {n}")
        eta += float(value) * wedge(eye[i - 1], eye[j - 1])
    return eta


@lru_cache(maxsize=None)
def _basis_stack(n: int) -> np.ndarray:
    stack = np.stack(son_basis(n))
    stack.setflags(write=False)
    return stack


def k_operator_matrix(params: ChapNDParams, gamma) -> np.ndarray:
    """Matrix of Omega -> I(Omega) + m r^2 (Gamma Omega + Omega Gamma) in son coordinates."""
    n = params.n
    gamma = np.asarray(gamma, dtype=float)
    gam = np.outer(gamma, gamma)
    ws = _basis_stack(n)
    images = gam @ ws + ws @ gam
    rows, cols = np.triu_indices(n, k=1)
    coupling = images[:, rows, cols].T
    return params.inertia.matrix + params.mass * params.radius ** 2 * coupling


def K_from_omega_nd(params: ChapNDParams, gamma, Omega) -> np.ndarray:
    return son_from_coords(k_operator_matrix(params, gamma) @ son_coords(Omega), params.n)


def omega_from_K_nd(params: ChapNDParams, gamma, K) -> np.ndarray:
    return solve_son(params.n, k_operator_matrix(params, gamma), K, "K(Omega) operator")


# -- full description ---------------------------------------------------------

def split_full(params: ChapNDParams, y) -> FullState:
    n = params.n
    y = np.asarray(y, dtype=float)
    x = y[:n]
    g = y[n:n + n * n].reshape(n, n)
    return x, g, son_from_coords(y[n + n * n:], n)


def join_full(x, g, K) -> np.ndarray:
    return np.concatenate([np.asarray(x, dtype=float), np.asarray(g, dtype=float).ravel(), son_coords(K)])


def _full_velocity(params: ChapNDParams, x, g, Omega) -> np.ndarray:
    n = params.n
    omega = g @ Omega @ g.T
    return params.radius * omega[:, n - 1] + params.eta @ x


def chapnd_full_vector_field(params: ChapNDParams, x, g, K) -> FullState:
    """Returns (x', g', K')."""
    n, m, r = params.n, params.mass, params.radius
    gamma = g[n - 1, :]
    Omega = omega_from_K_nd(params, gamma, K)
    x_dot = _full_velocity(params, x, g, Omega)
    K_dot = bracket(K, Omega) - m * r * wedge(g.T @ (params.eta @ x_dot), gamma)
    return x_dot, g @ Omega, K_dot


def chapnd_full_rhs(params: ChapNDParams):
    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        return join_full(*chapnd_full_vector_field(params, *split_full(params, y)))

    return rhs


def chapnd_full_energy(params: ChapNDParams, x, g, K) -> float:
    Omega = omega_from_K_nd(params, g[params.n - 1, :], K)
    v = _full_velocity(params, x, g, Omega)
    return 0.5 * killing_pair(params.inertia.apply(Omega), Omega) + 0.5 * params.mass * float(v @ v)


def chapnd_full_moving_energy(params: ChapNDParams, x, g, K) -> float:
    Omega = omega_from_K_nd(params, g[params.n - 1, :], K)
    ex = params.eta @ x
    return 0.5 * killing_pair(K, Omega) - 0.5 * params.mass * float(ex @ ex)


def chapnd_full_residuals(params: ChapNDParams, x, g, K) -> Dict[str, float]:
    n = params.n
    return {
        "height": float(x[n - 1] - params.radius),
        "orthogonality": float(np.max(np.abs(g.T @ g - np.eye(n)))),
    }


def chapnd_full_project(params: ChapNDParams, x, g, K) -> FullState:
    x = np.array(x, dtype=float)
    x[params.n - 1] = params.radius
    return x, reorthonormalize(g), np.asarray(K, dtype=float)


def chapnd_reaction_torques(params: ChapNDParams, x, g, K, eps: float = 1e-6):
    """Reaction force and torque recovered from the motion.

    Returns (R1, R2, R2_predicted): R1 = m x'' (x'' by central differences along
    the flow), R2 = I(Omega') - [I(Omega), Omega] and the contact prediction
    R2_predicted = -r Ad_{g^-1}(R1 ^ e_n).
    """
    n, m, r = params.n, params.mass, params.radius
    y = join_full(x, g, K)
    rhs = chapnd_full_rhs(params)
    f = rhs(0.0, y)

    def velocity(z: np.ndarray) -> np.ndarray:
        xz, gz, Kz = split_full(params, z)
        return _full_velocity(params, xz, gz, omega_from_K_nd(params, gz[n - 1, :], Kz))

    x_ddot = (velocity(y + eps * f) - velocity(y - eps * f)) / (2.0 * eps)
    R1 = m * x_ddot

    gamma = g[n - 1, :]
    Omega = omega_from_K_nd(params, gamma, K)
    K_dot = split_full(params, f)[2]
    gamma_dot = -Omega @ gamma
    gam_dot = np.outer(gamma_dot, gamma) + np.outer(gamma, gamma_dot)
    rhs_omega = K_dot - m * r * r * (gam_dot @ Omega + Omega @ gam_dot)
    Omega_dot = omega_from_K_nd(params, gamma, rhs_omega)
    inertia = params.inertia
    R2 = inertia.apply(Omega_dot) - bracket(inertia.apply(Omega), Omega)
    R2_predicted = -r * adjoint(g.T, wedge(R1, np.eye(n)[n - 1]))
    return R1, R2, R2_predicted


# -- reduced description ------------------------------------------------------

def split_reduced(params: ChapNDParams, y) -> ReducedState:
    n, dim = params.n, son_dim(params.n)
    y = np.asarray(y, dtype=float)
    K = son_from_coords(y[:dim], n)
    X = y[dim:dim + n]
    gamma = y[dim + n:dim + 2 * n]
    Xi = son_from_coords(y[dim + 2 * n:], n)
    return K, X, gamma, Xi


def join_reduced(K, X, gamma, Xi) -> np.ndarray:
    return np.concatenate([son_coords(K), np.asarray(X, dtype=float), np.asarray(gamma, dtype=float), son_coords(Xi)])


def reduce_full_state(params: ChapNDParams, x, g, K) -> ReducedState:
    n = params.n
    g = np.asarray(g, dtype=float)
    return np.asarray(K, dtype=float), g.T @ x, g[n - 1, :].copy(), adjoint(g.T, params.eta)


def chapnd_reduced_vector_field(params: ChapNDParams, K, X, gamma, Xi) -> ReducedState:
    """Returns (K', X', gamma', Xi')."""
    m, r = params.mass, params.radius
    Omega = omega_from_K_nd(params, gamma, K)
    omega_gamma = Omega @ gamma
    K_dot = (
        bracket(K, Omega)
        - m * r * r * bracket(Xi, wedge(omega_gamma, gamma))
        - m * r * bracket(Xi, bracket(Xi, wedge(X, gamma)))
    )
    X_dot = (Xi - Omega) @ X + r * omega_gamma
    return K_dot, X_dot, -omega_gamma, bracket(Xi, Omega)


def chapnd_reduced_rhs(params: ChapNDParams):
    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        return join_reduced(*chapnd_reduced_vector_field(params, *split_reduced(params, y)))

    return rhs


def chapnd_reduced_energy(params: ChapNDParams, K, X, gamma, Xi) -> float:
    Omega = omega_from_K_nd(params, gamma, K)
    v = params.radius * (Omega @ gamma) + Xi @ X
    return 0.5 * killing_pair(params.inertia.apply(Omega), Omega) + 0.5 * params.mass * float(v @ v)


def chapnd_reduced_moving_energy(params: ChapNDParams, K, X, gamma, Xi) -> float:
    Omega = omega_from_K_nd(params, gamma, K)
    xx = Xi @ X
    return 0.5 * killing_pair(K, Omega) - 0.5 * params.mass * float(xx @ xx)


def chapnd_moving_energy(params: ChapNDParams, state) -> float:
    """Moving energy of a full (x, g, K) or reduced (K, X, gamma, Xi) state."""
    if len(state) == 3:
        return chapnd_full_moving_energy(params, *state)
    return chapnd_reduced_moving_energy(params, *state)


def xi_orbit_residual(params: ChapNDParams, Xi) -> float:
    ref = linalg.eigvalsh(params.eta @ params.eta)
    cur = linalg.eigvalsh(Xi @ Xi)
    return float(np.max(np.abs(np.sort(cur) - np.sort(ref))))


def chapnd_reduced_residuals(params: ChapNDParams, K, X, gamma, Xi) -> Dict[str, float]:
    return {
        "gamma_norm": float(gamma @ gamma) - 1.0,
        "height": float(gamma @ X) - params.radius,
        "xi_gamma": float(np.linalg.norm(Xi @ gamma)),
        "xi_orbit": xi_orbit_residual(params, Xi),
    }


def chapnd_reduced_project(params: ChapNDParams, K, X, gamma, Xi) -> ReducedState:
    gamma = np.asarray(gamma, dtype=float)
    gamma = gamma / np.linalg.norm(gamma)
    X = X + (params.radius - float(gamma @ X)) * gamma
    return np.asarray(K, dtype=float), X, gamma, np.asarray(Xi, dtype=float)
