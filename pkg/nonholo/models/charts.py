"""Coordinate charts that embed the trivialized models into the generic engine.

Attitudes use ZYZ Euler angles g = Rz(phi) Ry(theta) Rz(psi); the body angular
velocity is Omega = B(theta, psi) (phi', theta', psi'). The chart is refused within
0.1 rad of theta in {0, pi}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from nonholo.core.dynamics import MechanicalSystem, VectorFieldOnQ
from nonholo.core.errors import ChartSingularity
from nonholo.core.liegroup import hat, rot_y, rot_z, unhat
from nonholo.models.lr import LRParams
from nonholo.models.rolling import RollingBodyParams

POLE_MARGIN = 0.1

_E2_HAT = hat((0.0, 1.0, 0.0))
_E3_HAT = hat((0.0, 0.0, 1.0))


@dataclass(frozen=True)
class EulerKinematics:
    g: np.ndarray
    dg: np.ndarray  # dg[:, :, l] = dg/d(angle_l)
    B: np.ndarray
    dB: np.ndarray  # dB[:, :, l] = dB/d(angle_l)

    @property
    def gamma(self) -> np.ndarray:
        """g^T e3."""
        return self.g[2, :].copy()

    @property
    def dgamma(self) -> np.ndarray:
        """dgamma[:, l] = d(g^T e3)/d(angle_l)."""
        return self.dg[2, :, :].copy()


def euler_kinematics(angles, q=None) -> EulerKinematics:
    phi, theta, psi = (float(a) for a in angles)
    if abs(math.sin(theta)) < math.sin(POLE_MARGIN):
        raise ChartSingularity("Euler chart too close to theta in {0, pi}", q=angles if q is None else q)
    rz_phi, ry, rz_psi = rot_z(phi), rot_y(theta), rot_z(psi)
    g = rz_phi @ ry @ rz_psi
    dg = np.stack([_E3_HAT @ g, rz_phi @ ry @ _E2_HAT @ rz_psi, g @ _E3_HAT], axis=-1)

    st, ct = math.sin(theta), math.cos(theta)
    sp, cp = math.sin(psi), math.cos(psi)
    B = np.array([[-st * cp, sp, 0.0], [st * sp, cp, 0.0], [ct, 0.0, 1.0]])
    dB = np.zeros((3, 3, 3))
    dB[:, 0, 1] = (-ct * cp, ct * sp, -st)
    dB[:, 0, 2] = (st * sp, st * cp, 0.0)
    dB[:, 1, 2] = (cp, -sp, 0.0)
    return EulerKinematics(g, dg, B, dB)


def inertia_tensor_3d(params: LRParams) -> np.ndarray:
    eye = np.eye(3)
    return np.column_stack([unhat(params.inertia.apply(hat(e))) for e in eye])


def _check_veselova(params: LRParams) -> np.ndarray:
    if params.n != 3 or params.k != 1:
        raise ValueError("the Euler chart embeds only the 3D Veselova system (n=3, one constraint)")
    return unhat(params.axes[0])


# -- Veselova -----------------------------------------------------------------

def veselova_chart(params: LRParams, tol_constraint: float = 1e-8) -> MechanicalSystem:
    axis = _check_veselova(params)
    inertia = inertia_tensor_3d(params)
    c = float(params.c[0])

    def A(q):
        kin = euler_kinematics(q)
        return kin.B.T @ inertia @ kin.B

    def dA(q):
        kin = euler_kinematics(q)
        out = np.empty((3, 3, 3))
        for l in range(3):
            half = kin.dB[:, :, l].T @ inertia @ kin.B
            out[:, :, l] = half + half.T
        return out

    def S(q):
        kin = euler_kinematics(q)
        return (axis @ kin.g @ kin.B)[None, :]

    def dS(q):
        kin = euler_kinematics(q)
        out = np.empty((1, 3, 3))
        for l in range(3):
            out[0, :, l] = axis @ (kin.dg[:, :, l] @ kin.B + kin.g @ kin.dB[:, :, l])
        return out

    return MechanicalSystem(
        n=3, k=1, A=A, S=S,
        s=lambda q: np.array([-c]),
        dA=dA, dS=dS,
        ds=lambda q: np.zeros((1, 3)),
        tol_constraint=tol_constraint,
        name="veselova-3d[chart]",
    )


def spatial_generator(xi) -> VectorFieldOnQ:
    """Euler-angle rates of the right-invariant field g -> hat(xi) g."""
    xi = np.asarray(xi, dtype=float)

    def Y(q):
        kin = euler_kinematics(q)
        return np.linalg.solve(kin.g @ kin.B, xi)

    return VectorFieldOnQ(Y, name=f"Y[{', '.join(f'{v:g}' for v in xi)}]")


def veselova_affine_generator(params: LRParams) -> VectorFieldOnQ:
    """Right-invariant field of zeta; horizontal for the affine constraint."""
    return spatial_generator(unhat(params.zeta))


def veselova_from_chart(params: LRParams, q, qdot) -> Tuple[np.ndarray, np.ndarray]:
    """(gamma, Omega) as 3-vectors."""
    axis = _check_veselova(params)
    kin = euler_kinematics(q)
    return kin.g.T @ axis, kin.B @ np.asarray(qdot, dtype=float)


def veselova_rates_from_chart(params: LRParams, q, qdot, qddot) -> Tuple[np.ndarray, np.ndarray]:
    """(gamma', Omega') implied by chart accelerations."""
    axis = _check_veselova(params)
    kin = euler_kinematics(q)
    qdot = np.asarray(qdot, dtype=float)
    g_dot = kin.dg @ qdot
    B_dot = kin.dB @ qdot
    return g_dot.T @ axis, kin.B @ np.asarray(qddot, dtype=float) + B_dot @ qdot


# -- rolling body -------------------------------------------------------------

def rolling_chart(params: RollingBodyParams, tol_constraint: float = 1e-8) -> MechanicalSystem:
    """Chart (q1, q2, phi, theta, psi): planar centre position plus Euler angles."""
    m, G, kappa = params.mass, params.gravity, params.kappa
    inertia = params.inertia
    shape = params.shape

    def geometry(q):
        kin = euler_kinematics(q[2:], q)
        gamma, dgamma = kin.gamma, kin.dgamma
        rho = shape.F(gamma)
        drho = shape.DF(gamma) @ dgamma
        return kin, gamma, dgamma, rho, drho

    def A(q):
        kin, gamma, _, rho, _ = geometry(q)
        w = np.cross(rho, gamma)
        out = np.zeros((5, 5))
        out[0, 0] = out[1, 1] = m
        out[2:, 2:] = kin.B.T @ (inertia + m * np.outer(w, w)) @ kin.B
        return out

    def dA(q):
        kin, gamma, dgamma, rho, drho = geometry(q)
        w = np.cross(rho, gamma)
        i_eff = inertia + m * np.outer(w, w)
        out = np.zeros((5, 5, 5))
        for l in range(3):
            dw = np.cross(drho[:, l], gamma) + np.cross(rho, dgamma[:, l])
            half = kin.dB[:, :, l].T @ i_eff @ kin.B
            d_eff = m * (np.outer(dw, w) + np.outer(w, dw))
            out[2:, 2:, 2 + l] = half + half.T + kin.B.T @ d_eff @ kin.B
        return out

    def V(q):
        _, gamma, _, rho, _ = geometry(q)
        return m * G * float(gamma @ rho)

    def dV(q):
        _, gamma, dgamma, rho, drho = geometry(q)
        out = np.zeros(5)
        out[2:] = m * G * (rho @ dgamma + gamma @ drho)
        return out

    def S(q):
        kin, _, _, rho, _ = geometry(q)
        out = np.zeros((2, 5))
        out[:, :2] = np.eye(2)
        out[:, 2:] = (kin.g @ hat(rho) @ kin.B)[:2]
        return out

    def dS(q):
        kin, _, _, rho, drho = geometry(q)
        out = np.zeros((2, 5, 5))
        rho_hat = hat(rho)
        for l in range(3):
            block = (
                kin.dg[:, :, l] @ rho_hat @ kin.B
                + kin.g @ hat(drho[:, l]) @ kin.B
                + kin.g @ rho_hat @ kin.dB[:, :, l]
            )
            out[:, 2:, 2 + l] = block[:2]
        return out

    def s(q):
        kin, _, _, rho, _ = geometry(q)
        v = q[:2] - (kin.g @ rho)[:2]
        return kappa * np.array([v[1], -v[0]])

    def ds(q):
        kin, _, _, rho, drho = geometry(q)
        dv = np.zeros((2, 5))
        dv[:, :2] = np.eye(2)
        for l in range(3):
            dv[:, 2 + l] = -(kin.dg[:, :, l] @ rho + kin.g @ drho[:, l])[:2]
        return kappa * np.vstack([dv[1], -dv[0]])

    return MechanicalSystem(
        n=5, k=2, A=A, S=S, V=V, s=s,
        dA=dA, dV=dV, dS=dS, ds=ds,
        tol_constraint=tol_constraint,
        name="rolling-body[chart]",
    )


def kappa_generator(params: RollingBodyParams) -> VectorFieldOnQ:
    """Generator of the joint rotation of plane and body about the vertical axis."""
    kappa = params.kappa
    jac = np.zeros((5, 5))
    jac[0, 1] = -kappa
    jac[1, 0] = kappa
    return VectorFieldOnQ(
        lambda q: kappa * np.array([-q[1], q[0], 1.0, 0.0, 0.0]),
        lambda q: jac.copy(),
        name="Y_kappa",
    )


def plane_generator(params: RollingBodyParams) -> VectorFieldOnQ:
    """Rotation of the centre about the vertical with the attitude held fixed."""
    kappa = params.kappa
    jac = np.zeros((5, 5))
    jac[0, 1] = -kappa
    jac[1, 0] = kappa
    return VectorFieldOnQ(
        lambda q: kappa * np.array([-q[1], q[0], 0.0, 0.0, 0.0]),
        lambda q: jac.copy(),
        name="Y_eta",
    )


def rolling_from_chart(params: RollingBodyParams, q, qdot) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(K, X, gamma) of a chart state."""
    q = np.asarray(q, dtype=float)
    kin = euler_kinematics(q[2:], q)
    gamma = kin.gamma
    rho = params.shape.F(gamma)
    Omega = kin.B @ np.asarray(qdot, dtype=float)[2:]
    x = np.array([q[0], q[1], float(gamma @ rho)])
    K = params.inertia @ Omega + params.mass * np.cross(rho, np.cross(Omega, rho))
    return K, kin.g.T @ x, gamma


def rolling_rates_from_chart(params: RollingBodyParams, q, qdot, qddot):
    """(K', X', gamma') implied by chart accelerations."""
    q = np.asarray(q, dtype=float)
    qdot = np.asarray(qdot, dtype=float)
    qddot = np.asarray(qddot, dtype=float)
    m = params.mass
    kin = euler_kinematics(q[2:], q)
    a_dot, a_ddot = qdot[2:], qddot[2:]
    g_dot = kin.dg @ a_dot
    Omega = kin.B @ a_dot
    Omega_dot = kin.B @ a_ddot + (kin.dB @ a_dot) @ a_dot
    gamma = kin.gamma
    gamma_dot = kin.dgamma @ a_dot
    rho = params.shape.F(gamma)
    rho_dot = params.shape.DF(gamma) @ gamma_dot
    K_dot = (
        params.inertia @ Omega_dot
        + m * np.cross(rho_dot, np.cross(Omega, rho))
        + m * np.cross(rho, np.cross(Omega_dot, rho) + np.cross(Omega, rho_dot))
    )
    x = np.array([q[0], q[1], float(gamma @ rho)])
    x_dot = np.array([qdot[0], qdot[1], float(gamma_dot @ rho + gamma @ rho_dot)])
    X_dot = g_dot.T @ x + kin.g.T @ x_dot
    return K_dot, X_dot, gamma_dot


def chart_embedding(params, tol_constraint: float = 1e-8) -> MechanicalSystem:
    """Generic-engine system for a Veselova or rolling-body parameter set."""
    if isinstance(params, RollingBodyParams):
        return rolling_chart(params, tol_constraint)
    if isinstance(params, LRParams):
        return veselova_chart(params, tol_constraint)
    raise ValueError(f"no chart embedding for {type(params).__name__}")
