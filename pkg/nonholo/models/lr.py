"""LR systems: left-invariant kinetic energy with right-invariant affine constraints.

The left trivialized state is (gamma^1..gamma^k, Omega) with gamma^j = Ad_{g^-1} a^j.
The constraints read <gamma^j, Omega> = c_j and the motion obeys

    I(Omega') = [I(Omega), Omega] + sum_j lambda_j gamma^j,   gamma^j' = [gamma^j, Omega].

For n = 3 this is the affine Veselova system with a single Poisson vector.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np
from scipy import linalg

from nonholo.core.errors import ConstraintDegeneracy
from nonholo.core.liegroup import (
    adjoint,
    bracket,
    hat,
    killing_pair,
    son_coords,
    son_dim,
    son_from_coords,
    unhat,
)
from nonholo.models.inertia import InertiaOperator

logger = logging.getLogger(__name__)

ORTHONORMAL_TOL = 1e-9

LRState = Tuple[List[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class LRParams:
    """Parameters of an LR system on SO(n).

    Attributes:
        inertia: inertia operator on so(n).
        axes: constraint covectors a^j (Killing-orthonormal elements of so(n)).
        c: constants c_j = <a^j, zeta>.
    """

    inertia: InertiaOperator
    axes: Tuple[np.ndarray, ...]
    c: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self) -> None:
        n = self.inertia.n
        axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        if not axes:
            raise ValueError("an LR system needs at least one constraint covector")
        for a in axes:
            if a.shape != (n, n) or not np.allclose(a, -a.T, atol=1e-12):
                raise ValueError(f"constraint covectors must be skew {n}x{n} matrices")
        if len(axes) >= son_dim(n):
            raise ValueError(f"too many constraints ({len(axes)}) for so({n})")
        gram = np.array([[killing_pair(ai, aj) for aj in axes] for ai in axes])
        if np.max(np.abs(gram - np.eye(len(axes)))) > ORTHONORMAL_TOL:
            raise ValueError("constraint covectors must be Killing-orthonormal")
        c = np.zeros(len(axes)) if np.size(self.c) == 0 else np.asarray(self.c, dtype=float).reshape(-1)
        if c.shape != (len(axes),):
            raise ValueError(f"expected {len(axes)} affine constants, got {c.size}")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "c", c)

    @property
    def n(self) -> int:
        return self.inertia.n

    @property
    def k(self) -> int:
        return len(self.axes)

    @property
    def zeta(self) -> np.ndarray:
        return sum((cj * a for cj, a in zip(self.c, self.axes)), np.zeros((self.n, self.n)))

    @property
    def state_dim(self) -> int:
        return (self.k + 1) * son_dim(self.n)


def lr_state_from_attitude(params: LRParams, g, Omega) -> LRState:
    g = np.asarray(g, dtype=float)
    return [adjoint(g.T, a) for a in params.axes], np.asarray(Omega, dtype=float)


def pack_lr_state(gammas: Sequence[np.ndarray], Omega) -> np.ndarray:
    return np.concatenate([son_coords(x) for x in gammas] + [son_coords(Omega)])


def unpack_lr_state(params: LRParams, y) -> LRState:
    y = np.asarray(y, dtype=float)
    n, dim = params.n, son_dim(params.n)
    parts = [son_from_coords(y[i * dim:(i + 1) * dim], n) for i in range(params.k + 1)]
    return parts[:-1], parts[-1]


def _multiplier_matrix(params: LRParams, gammas: Sequence[np.ndarray]) -> np.ndarray:
    inv = [params.inertia.solve(gi) for gi in gammas]
    return np.array([[killing_pair(gj, inv_i) for inv_i in inv] for gj in gammas])


def _solve_multipliers(mat: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        cho = linalg.cho_factor(0.5 * (mat + mat.T), lower=True)
    except (linalg.LinAlgError, ValueError) as e:
        raise ConstraintDegeneracy("multiplier matrix <gamma^i, I^-1 gamma^j> is singular") from e
    return linalg.cho_solve(cho, rhs)


def lr_multipliers(params: LRParams, gammas: Sequence[np.ndarray], Omega) -> np.ndarray:
    drift = params.inertia.solve(bracket(params.inertia.apply(Omega), Omega))
    rhs = -np.array([killing_pair(gj, drift) for gj in gammas])
    return _solve_multipliers(_multiplier_matrix(params, gammas), rhs)


def lr_vector_field(params: LRParams, gammas: Sequence[np.ndarray], Omega):
    """Returns (gamma^j' list, Omega')."""
    Omega = np.asarray(Omega, dtype=float)
    lam = lr_multipliers(params, gammas, Omega)
    torque = bracket(params.inertia.apply(Omega), Omega)
    for lj, gj in zip(lam, gammas):
        torque = torque + lj * gj
    gamma_dots = [bracket(gj, Omega) for gj in gammas]
    return gamma_dots, params.inertia.solve(torque)


def lr_rhs(params: LRParams):
    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        gammas, Omega = unpack_lr_state(params, y)
        gamma_dots, omega_dot = lr_vector_field(params, gammas, Omega)
        return pack_lr_state(gamma_dots, omega_dot)

    return rhs


def lr_constraint_residuals(params: LRParams, gammas: Sequence[np.ndarray], Omega) -> np.ndarray:
    return np.array([killing_pair(gj, Omega) for gj in gammas]) - params.c


def lr_energy(params: LRParams, gammas: Sequence[np.ndarray], Omega) -> float:
    return 0.5 * killing_pair(params.inertia.apply(Omega), Omega)


def lr_moving_energy(params: LRParams, gammas: Sequence[np.ndarray], Omega) -> float:
    """1/2 <I Omega, Omega> - sum_j c_j <I Omega, gamma^j>."""
    m = params.inertia.apply(Omega)
    return 0.5 * killing_pair(m, Omega) - sum(cj * killing_pair(m, gj) for cj, gj in zip(params.c, gammas))


def lr_momentum(params: LRParams, g, Omega, xi) -> float:
    """Pairing of the momentum with the right-invariant generator of xi."""
    g = np.asarray(g, dtype=float)
    return killing_pair(params.inertia.apply(Omega), adjoint(g.T, xi))


def lr_gram_residual(params: LRParams, gammas: Sequence[np.ndarray]) -> float:
    gram = np.array([[killing_pair(gi, gj) for gj in gammas] for gi in gammas])
    return float(np.max(np.abs(gram - np.eye(len(gammas)))))


def lr_project(params: LRParams, gammas: Sequence[np.ndarray], Omega) -> LRState:
    """Symmetric re-orthonormalization of the gamma^j, then the I-orthogonal
    correction of Omega onto the affine constraints."""
    gram = np.array([[killing_pair(gi, gj) for gj in gammas] for gi in gammas])
    w, v = linalg.eigh(gram)
    if np.min(w) <= 0.0:
        raise ConstraintDegeneracy("constraint covectors became linearly dependent")
    t = (v / np.sqrt(w)) @ v.T
    fixed = [sum(t[i, j] * gammas[j] for j in range(len(gammas))) for i in range(len(gammas))]
    residual = lr_constraint_residuals(params, fixed, Omega)
    mu = _solve_multipliers(_multiplier_matrix(params, fixed), residual)
    correction = sum((mu_i * gi for mu_i, gi in zip(mu, fixed)), np.zeros_like(Omega))
    return fixed, np.asarray(Omega, dtype=float) - params.inertia.solve(correction)


# -- n = 3 (Veselova) ---------------------------------------------------------

def veselova_params(inertia, axis, c: float = 0.0) -> LRParams:
    """Affine Veselova system: <a, omega> = c for a unit spatial axis a."""
    axis = np.asarray(axis, dtype=float)
    norm = float(np.linalg.norm(axis))
    if axis.shape != (3,) or norm == 0.0:
        raise ValueError("veselova axis must be a nonzero 3-vector")
    return LRParams(InertiaOperator.from_tensor_3d(inertia), (hat(axis / norm),), np.array([float(c)]))


def veselova_vector_field(params: LRParams, gamma, omega):
    """(gamma', Omega') for 3-vectors gamma and Omega."""
    gamma_dots, omega_dot = lr_vector_field(params, [hat(gamma)], hat(omega))
    return unhat(gamma_dots[0]), unhat(omega_dot)
