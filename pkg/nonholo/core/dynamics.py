"""Generic coordinate engine for mechanical systems with affine velocity constraints.

A system is given in a chart by the Lagrangian L = 1/2 q'.A(q)q' + b(q).q' - V(q)
and k constraint rows S(q)q' + s(q) = 0. Derivative arrays use the trailing
axis for the differentiation variable:

    dA[i, j, l] = dA_ij/dq_l      db[i, j] = db_i/dq_j      dV[j] = dV/dq_j
    dS[a, i, j] = dS_ai/dq_j      ds[a, j] = ds_a/dq_j

Missing derivative callbacks are replaced by central differences.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Mapping, Optional, Tuple, Union

import numpy as np
from scipy import linalg

from nonholo.core.errors import ConstraintDegeneracy, MetricError, NonholoError, NumericalFailure
from nonholo.core.integrator import FlowProblem

logger = logging.getLogger(__name__)

FD_STEP = float(np.finfo(float).eps ** (1.0 / 3.0))

ArrayFn = Callable[[np.ndarray], np.ndarray]


def central_difference(f: Callable[[np.ndarray], object], q, fd_step: float = FD_STEP) -> np.ndarray:
    """Jacobian of ``f`` at ``q`` with the derivative index last.

    The step for coordinate j is ``fd_step * max(1, |q_j|)``.
    """
    q = np.asarray(q, dtype=float)
    out = None
    for j in range(q.size):
        h = fd_step * max(1.0, abs(q[j]))
        qp = q.copy()
        qm = q.copy()
        qp[j] += h
        qm[j] -= h
        col = (np.asarray(f(qp), dtype=float) - np.asarray(f(qm), dtype=float)) / (qp[j] - qm[j])
        if out is None:
            out = np.empty(col.shape + (q.size,))
        out[..., j] = col
    return out


@dataclass
class State:
    q: np.ndarray
    qdot: np.ndarray
    t: float = 0.0

    def __post_init__(self) -> None:
        self.q = np.asarray(self.q, dtype=float)
        self.qdot = np.asarray(self.qdot, dtype=float)

    @classmethod
    def from_flat(cls, y, t: float = 0.0) -> "State":
        y = np.asarray(y, dtype=float)
        n = y.size // 2
        return cls(y[:n].copy(), y[n:].copy(), t)

    def flat(self) -> np.ndarray:
        return np.concatenate([self.q, self.qdot])


@dataclass(frozen=True)
class VectorFieldOnQ:
    Y: ArrayFn
    dY: Optional[ArrayFn] = None
    name: str = ""

    def __call__(self, q) -> np.ndarray:
        return np.asarray(self.Y(np.asarray(q, dtype=float)), dtype=float)

    def jacobian(self, q, fd_step: float = FD_STEP) -> np.ndarray:
        """dY[i, j] = dY_i/dq_j."""
        if self.dY is not None:
            return np.asarray(self.dY(np.asarray(q, dtype=float)), dtype=float)
        return central_difference(self, q, fd_step)

    def __add__(self, other: "VectorFieldOnQ") -> "VectorFieldOnQ":
        other = as_field(other)
        return VectorFieldOnQ(lambda q: self(q) + other(q), name=f"{self.name}+{other.name}")

    def __sub__(self, other: "VectorFieldOnQ") -> "VectorFieldOnQ":
        other = as_field(other)
        return VectorFieldOnQ(lambda q: self(q) - other(q), name=f"{self.name}-{other.name}")

    def scaled(self, c: float) -> "VectorFieldOnQ":
        return VectorFieldOnQ(
            lambda q: c * self(q),
            None if self.dY is None else (lambda q: c * np.asarray(self.dY(q), dtype=float)),
            name=f"{c:g}*{self.name}",
        )


FieldLike = Union[VectorFieldOnQ, ArrayFn, None]


def zero_field(n: int) -> VectorFieldOnQ:
    return VectorFieldOnQ(lambda q: np.zeros(n), lambda q: np.zeros((n, n)), name="0")


def constant_field(v) -> VectorFieldOnQ:
    v = np.asarray(v, dtype=float)
    return VectorFieldOnQ(lambda q: v.copy(), lambda q: np.zeros((v.size, v.size)), name="const")


def as_field(Y: FieldLike, n: Optional[int] = None) -> VectorFieldOnQ:
    if isinstance(Y, VectorFieldOnQ):
        return Y
    if Y is None:
        if n is None:
            raise ValueError("dimension required for the zero field")
        return zero_field(n)
    return VectorFieldOnQ(Y, name=getattr(Y, "__name__", "Y"))


@dataclass(frozen=True)
class ConstraintGeometry:
    D_basis: np.ndarray
    Z0: np.ndarray
    residual: np.ndarray


@dataclass(frozen=True)
class MechanicalSystem:
    """Callback bundle defining a constrained system in one chart.

    ``b``, ``V`` and ``s`` default to zero.
    """

    n: int
    k: int
    A: ArrayFn
    S: ArrayFn
    b: Optional[ArrayFn] = None
    V: Optional[Callable[[np.ndarray], float]] = None
    s: Optional[ArrayFn] = None
    dA: Optional[ArrayFn] = None
    db: Optional[ArrayFn] = None
    dV: Optional[ArrayFn] = None
    dS: Optional[ArrayFn] = None
    ds: Optional[ArrayFn] = None
    fd_step: float = FD_STEP
    tol_constraint: float = 1e-8
    name: str = "system"

    def __post_init__(self) -> None:
        if not (1 <= self.k < self.n):
            raise ValueError(f"need 1 <= k < n, got n={self.n}, k={self.k}")

    # -- raw evaluations -------------------------------------------------
    def _eval(self, fn: Callable, q: np.ndarray, what: str, shape: Tuple[int, ...]) -> np.ndarray:
        try:
            out = np.asarray(fn(q), dtype=float)
        except NonholoError:
            raise
        except (ArithmeticError, ValueError) as e:
            raise NumericalFailure(f"{self.name}: {what} failed: {e}") from e
        if out.shape != shape:
            out = out.reshape(shape)
        if not np.all(np.isfinite(out)):
            raise NumericalFailure(f"{self.name}: {what} is not finite at q={np.array2string(q, precision=6)}")
        return out

    def metric(self, q) -> np.ndarray:
        a = self._eval(self.A, q, "A(q)", (self.n, self.n))
        return 0.5 * (a + a.T)

    def gyro(self, q) -> np.ndarray:
        if self.b is None:
            return np.zeros(self.n)
        return self._eval(self.b, q, "b(q)", (self.n,))

    def potential(self, q) -> float:
        if self.V is None:
            return 0.0
        return float(self._eval(self.V, q, "V(q)", ()))

    def constraint_matrix(self, q) -> np.ndarray:
        return self._eval(self.S, q, "S(q)", (self.k, self.n))

    def affine_term(self, q) -> np.ndarray:
        if self.s is None:
            return np.zeros(self.k)
        return self._eval(self.s, q, "s(q)", (self.k,))

    # -- derivatives -----------------------------------------------------
    def metric_jacobian(self, q) -> np.ndarray:
        if self.dA is not None:
            return self._eval(self.dA, q, "dA(q)", (self.n, self.n, self.n))
        return central_difference(self.metric, q, self.fd_step)

    def gyro_jacobian(self, q) -> np.ndarray:
        if self.b is None:
            return np.zeros((self.n, self.n))
        if self.db is not None:
            return self._eval(self.db, q, "db(q)", (self.n, self.n))
        return central_difference(self.gyro, q, self.fd_step)

    def potential_gradient(self, q) -> np.ndarray:
        if self.V is None:
            return np.zeros(self.n)
        if self.dV is not None:
            return self._eval(self.dV, q, "dV(q)", (self.n,))
        return central_difference(self.potential, q, self.fd_step)

    def constraint_jacobian(self, q) -> np.ndarray:
        if self.dS is not None:
            return self._eval(self.dS, q, "dS(q)", (self.k, self.n, self.n))
        return central_difference(self.constraint_matrix, q, self.fd_step)

    def affine_jacobian(self, q) -> np.ndarray:
        if self.s is None:
            return np.zeros((self.k, self.n))
        if self.ds is not None:
            return self._eval(self.ds, q, "ds(q)", (self.k, self.n))
        return central_difference(self.affine_term, q, self.fd_step)

    def with_finite_differences(self) -> "MechanicalSystem":
        """Copy of this system with every analytic derivative dropped."""
        return MechanicalSystem(
            n=self.n, k=self.k, A=self.A, S=self.S, b=self.b, V=self.V, s=self.s,
            fd_step=self.fd_step, tol_constraint=self.tol_constraint, name=f"{self.name}[fd]",
        )


def _cholesky(mat: np.ndarray, q: np.ndarray, what: str, error_cls):
    try:
        return linalg.cho_factor(mat, lower=True)
    except (linalg.LinAlgError, ValueError) as e:
        raise error_cls(f"{what} is not positive definite", q=q) from e


def _check_state(state: State) -> None:
    if not (np.all(np.isfinite(state.q)) and np.all(np.isfinite(state.qdot))):
        raise NumericalFailure("non-finite state", t=state.t)


def momentum_covector(sys: MechanicalSystem, state: State) -> np.ndarray:
    _check_state(state)
    return sys.metric(state.q) @ state.qdot + sys.gyro(state.q)


def lagrangian(sys: MechanicalSystem, state: State) -> float:
    q, qd = state.q, state.qdot
    return float(0.5 * qd @ sys.metric(q) @ qd + sys.gyro(q) @ qd - sys.potential(q))


def lagrangian_gradient(sys: MechanicalSystem, state: State) -> np.ndarray:
    """dL/dq at fixed velocities."""
    q, qd = state.q, state.qdot
    dA = sys.metric_jacobian(q)
    db = sys.gyro_jacobian(q)
    return 0.5 * np.einsum("ijl,i,j->l", dA, qd, qd) + qd @ db - sys.potential_gradient(q)


def ell_sigma(sys: MechanicalSystem, state: State) -> Tuple[np.ndarray, np.ndarray]:
    _check_state(state)
    q, qd = state.q, state.qdot
    dA = sys.metric_jacobian(q)
    db = sys.gyro_jacobian(q)
    mixed = np.einsum("imj,m->ij", dA, qd) + db
    ell = mixed @ qd - lagrangian_gradient(sys, state)
    sigma = np.einsum("aij,i,j->a", sys.constraint_jacobian(q), qd, qd) + sys.affine_jacobian(q) @ qd
    if not (np.all(np.isfinite(ell)) and np.all(np.isfinite(sigma))):
        raise NumericalFailure(f"{sys.name}: non-finite ell/sigma", t=state.t)
    return ell, sigma


def constraint_residual(sys: MechanicalSystem, state: State) -> np.ndarray:
    return sys.constraint_matrix(state.q) @ state.qdot + sys.affine_term(state.q)


def _reaction(sys: MechanicalSystem, state: State):
    q = state.q
    a_cho = _cholesky(sys.metric(q), q, "kinetic metric A(q)", MetricError)
    S = sys.constraint_matrix(q)
    ell, sigma = ell_sigma(sys, state)
    residual = S @ state.qdot + sys.affine_term(q)
    res_norm = float(np.linalg.norm(residual))
    if res_norm > sys.tol_constraint:
        logger.warning("%s: evaluating off the constraint manifold (residual %.3e)", sys.name, res_norm)
    ainv_st = linalg.cho_solve(a_cho, S.T)
    schur = S @ ainv_st
    schur_cho = _cholesky(0.5 * (schur + schur.T), q, "S A^-1 S^T", ConstraintDegeneracy)
    rhs = S @ linalg.cho_solve(a_cho, ell) - sigma
    lam = linalg.cho_solve(schur_cho, rhs)
    return a_cho, ell, S.T @ lam


def reaction_force(sys: MechanicalSystem, state: State) -> np.ndarray:
    return _reaction(sys, state)[2]


def accelerations(sys: MechanicalSystem, state: State) -> np.ndarray:
    a_cho, ell, R = _reaction(sys, state)
    qdd = linalg.cho_solve(a_cho, R - ell)
    if not np.all(np.isfinite(qdd)):
        raise NumericalFailure(f"{sys.name}: non-finite accelerations", t=state.t)
    return qdd


def constraint_geometry(sys: MechanicalSystem, q, qdot=None) -> ConstraintGeometry:
    q = np.asarray(q, dtype=float)
    S = sys.constraint_matrix(q)
    s = sys.affine_term(q)
    u, sv, vt = linalg.svd(S)
    tol = max(S.shape) * np.finfo(float).eps * (sv[0] if sv.size else 0.0)
    if sv.size < sys.k or sv[-1] <= tol:
        raise ConstraintDegeneracy("constraint matrix S lost rank", q=q)
    basis = vt[sys.k:].T.copy()
    # deterministic orientation: largest entry of each column positive
    for c in range(basis.shape[1]):
        if basis[np.argmax(np.abs(basis[:, c])), c] < 0.0:
            basis[:, c] *= -1.0
    z0 = -(vt[: sys.k].T @ ((u.T @ s) / sv))
    residual = np.zeros(sys.k) if qdot is None else S @ np.asarray(qdot, dtype=float) + s
    return ConstraintGeometry(D_basis=basis, Z0=z0, residual=residual)


def project_velocity(sys: MechanicalSystem, state: State) -> State:
    """A-orthogonal projection of the velocity onto the fiber M_q."""
    q = state.q
    a_cho = _cholesky(sys.metric(q), q, "kinetic metric A(q)", MetricError)
    S = sys.constraint_matrix(q)
    residual = S @ state.qdot + sys.affine_term(q)
    ainv_st = linalg.cho_solve(a_cho, S.T)
    schur = S @ ainv_st
    schur_cho = _cholesky(0.5 * (schur + schur.T), q, "S A^-1 S^T", ConstraintDegeneracy)
    qdot = state.qdot - ainv_st @ linalg.cho_solve(schur_cho, residual)
    return State(q.copy(), qdot, state.t)


def energy(sys: MechanicalSystem, state: State) -> float:
    q, qd = state.q, state.qdot
    return float(0.5 * qd @ sys.metric(q) @ qd + sys.potential(q))


def momentum_of_field(sys: MechanicalSystem, state: State, Y: FieldLike) -> float:
    Y = as_field(Y, sys.n)
    return float(momentum_covector(sys, state) @ Y(state.q))


def moving_energy(sys: MechanicalSystem, state: State, Y: FieldLike) -> float:
    return energy(sys, state) - momentum_of_field(sys, state, Y)


def lifted_derivative(sys: MechanicalSystem, state: State, Y: FieldLike) -> float:
    """Derivative of L along the tangent lift of Y."""
    Y = as_field(Y, sys.n)
    q, qd = state.q, state.qdot
    dY = Y.jacobian(q, sys.fd_step)
    p = momentum_covector(sys, state)
    return float(Y(q) @ lagrangian_gradient(sys, state) + p @ (dY @ qd))


def chart_flow(
    sys: MechanicalSystem,
    project: bool = True,
    observables: Optional[Mapping[str, Callable[[State], float]]] = None,
) -> FlowProblem:
    """First-order flow on y = (q, q') with optional velocity projection."""
    n = sys.n

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        state = State(y[:n], y[n:], t)
        return np.concatenate([state.qdot, accelerations(sys, state)])

    def projector(y: np.ndarray) -> np.ndarray:
        return project_velocity(sys, State(y[:n], y[n:])).flat()

    named: Dict[str, Callable[[np.ndarray], float]] = {
        "energy": lambda y: energy(sys, State(y[:n], y[n:])),
        "constraint_residual": lambda y: float(np.linalg.norm(constraint_residual(sys, State(y[:n], y[n:])))),
    }
    for key, fn in (observables or {}).items():
        named[key] = (lambda f: (lambda y: float(f(State(y[:n], y[n:])))))(fn)
    return FlowProblem(
        dimension=2 * n,
        rhs=rhs,
        projector=projector if project else None,
        observables=named,
        name=sys.name,
    )
