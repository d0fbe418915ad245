"""Convex body rolling without slipping on a plane rotating about the vertical.

Reduced state (K, X, gamma): K = I Omega + m rho x (Omega x rho), X the contact-plane
origin seen from the body (``x`` in body coordinates) and gamma the Poisson vector.
The plane spins with angular speed kappa and gravity acts along -e3.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import linalg

from nonholo.core.errors import InversionDegeneracy
from nonholo.models.shapes import Shape, Sphere

logger = logging.getLogger(__name__)

DENOMINATOR_TOL = 1e-10

RollingState = Tuple[np.ndarray, np.ndarray, np.ndarray]


@dataclass(frozen=True, eq=False)
class RollingBodyParams:
    """Attributes:
    mass: body mass m
    gravity: gravitational acceleration
    inertia: 3x3 inertia tensor about the centre of mass
    kappa: angular speed of the plane
    shape: Sphere or Ellipsoid
    """

    mass: float
    gravity: float
    inertia: np.ndarray
    kappa: float
    shape: Shape

    def __post_init__(self) -> None:
        if not self.mass > 0.0:
            raise ValueError("mass must be positive")
        if not self.gravity >= 0.0:
            raise ValueError("gravity must be non-negative")
        inertia = np.asarray(self.inertia, dtype=float)
        if inertia.ndim == 1:
            inertia = np.diag(inertia)
        if inertia.shape != (3, 3) or not np.allclose(inertia, inertia.T):
            raise ValueError("inertia must be a symmetric 3x3 tensor")
        if np.min(linalg.eigvalsh(inertia)) <= 0.0:
            raise ValueError("inertia must be positive definite")
        object.__setattr__(self, "inertia", 0.5 * (inertia + inertia.T))


def split_state(y) -> RollingState:
    y = np.asarray(y, dtype=float)
    return y[0:3], y[3:6], y[6:9]


def join_state(K, X, gamma) -> np.ndarray:
    return np.concatenate([K, X, gamma])


def K_from_omega_3d(params: RollingBodyParams, gamma, Omega) -> np.ndarray:
    rho = params.shape.F(gamma)
    return params.inertia @ Omega + params.mass * np.cross(rho, np.cross(Omega, rho))


def omega_from_K_3d(params: RollingBodyParams, gamma, K) -> np.ndarray:
    """Invert K = I Omega + m rho x (Omega x rho) (Sherman-Morrison)."""
    m = params.mass
    rho = params.shape.F(gamma)
    w_cho = linalg.cho_factor(params.inertia + m * float(rho @ rho) * np.eye(3), lower=True)
    w_k = linalg.cho_solve(w_cho, K)
    w_rho = linalg.cho_solve(w_cho, rho)
    denom = 1.0 - m * float(w_rho @ rho)
    if abs(denom) < DENOMINATOR_TOL:
        raise InversionDegeneracy(f"Omega(K) denominator {denom:.3e} is degenerate")
    return w_k + (m * float(w_rho @ K) / denom) * w_rho


def _rho_dot(params: RollingBodyParams, gamma, gamma_dot) -> np.ndarray:
    return params.shape.DF(gamma) @ gamma_dot


def rolling_body_vector_field(params: RollingBodyParams, K, X, gamma) -> RollingState:
    m, G, kappa = params.mass, params.gravity, params.kappa
    Omega = omega_from_K_3d(params, gamma, K)
    rho = params.shape.F(gamma)
    gamma_dot = np.cross(gamma, Omega)
    rho_dot = _rho_dot(params, gamma, gamma_dot)
    K_dot = (
        np.cross(K, Omega)
        + m * np.cross(rho_dot, np.cross(Omega, rho))
        + m * G * np.cross(gamma, rho)
        + m * kappa * np.cross(rho, kappa * X - np.cross(rho_dot, gamma))
    )
    X_dot = np.cross(X - rho, Omega - kappa * gamma)
    return K_dot, X_dot, gamma_dot


def chap3d_vector_field(params: RollingBodyParams, K, X, gamma) -> RollingState:
    """Chaplygin ball (spherical shape) on the rotating plane."""
    r = sphere_radius(params)
    m, kappa = params.mass, params.kappa
    Omega = omega_from_K_3d(params, gamma, K)
    K_dot = (
        np.cross(K, Omega)
        - m * r * r * kappa * np.cross(gamma, Omega)
        + m * r * kappa * kappa * np.cross(gamma, X)
    )
    X_dot = np.cross(kappa * gamma - Omega, X) + r * np.cross(Omega, gamma)
    return K_dot, X_dot, np.cross(gamma, Omega)


def sphere_radius(params: RollingBodyParams) -> float:
    if not isinstance(params.shape, Sphere):
        raise ValueError("the Chaplygin ball requires a spherical shape")
    return params.shape.radius


def rolling_rhs(params: RollingBodyParams, field=rolling_body_vector_field):
    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        return join_state(*field(params, *split_state(y)))

    return rhs


def body_velocity(params: RollingBodyParams, K, X, gamma) -> np.ndarray:
    """Velocity of the centre of mass in body coordinates."""
    Omega = omega_from_K_3d(params, gamma, K)
    rho = params.shape.F(gamma)
    return np.cross(Omega, rho) + params.kappa * np.cross(gamma, X - rho)


def rolling_body_energy(params: RollingBodyParams, K, X, gamma) -> float:
    Omega = omega_from_K_3d(params, gamma, K)
    rho = params.shape.F(gamma)
    u = body_velocity(params, K, X, gamma)
    kinetic = 0.5 * float(Omega @ params.inertia @ Omega) + 0.5 * params.mass * float(u @ u)
    return kinetic + params.mass * params.gravity * float(gamma @ rho)


def rolling_body_moving_energy(params: RollingBodyParams, K, X, gamma) -> float:
    m, kappa = params.mass, params.kappa
    Omega = omega_from_K_3d(params, gamma, K)
    rho = params.shape.F(gamma)
    return (
        0.5 * float(K @ Omega)
        + m * params.gravity * float(rho @ gamma)
        - kappa * float(K @ gamma)
        + 0.5 * m * kappa * kappa * (float(rho @ rho) - float(X @ X))
    )


def chap3d_tilde_energy(params: RollingBodyParams, K, X, gamma) -> float:
    Omega = omega_from_K_3d(params, gamma, K)
    return 0.5 * float(K @ Omega) - 0.5 * params.mass * params.kappa ** 2 * float(X @ X)


def rolling_residuals(params: RollingBodyParams, K, X, gamma) -> dict:
    rho = params.shape.F(gamma)
    return {
        "gamma_norm": float(gamma @ gamma) - 1.0,
        "contact": float(gamma @ (X - rho)),
    }


def rolling_project(params: RollingBodyParams, K, X, gamma) -> RollingState:
    gamma = np.asarray(gamma, dtype=float)
    gamma = gamma / np.linalg.norm(gamma)
    rho = params.shape.F(gamma)
    X = X - float(gamma @ (X - rho)) * gamma
    return np.array(K, dtype=float), X, gamma
