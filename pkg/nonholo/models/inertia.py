"""Inertia operators on so(n), stored as symmetric matrices in son coordinates."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from nonholo.core.errors import InversionDegeneracy
from nonholo.core.liegroup import son_basis, son_coords, son_dim, son_from_coords


@dataclass(frozen=True, eq=False)
class InertiaOperator:
    """Killing-self-adjoint positive operator I: so(n) -> so(n).

    ``matrix[:, c]`` holds the coordinates of I applied to the c-th basis element.
    """

    n: int
    matrix: np.ndarray
    _cho: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        mat = np.array(self.matrix, dtype=float)
        dim = son_dim(self.n)
        if mat.shape != (dim, dim):
            raise ValueError(f"inertia on so({self.n}) needs a {dim}x{dim} matrix, got {mat.shape}")
        if not np.allclose(mat, mat.T, atol=1e-12 * max(1.0, float(np.max(np.abs(mat))))):
            raise ValueError("inertia operator must be symmetric")
        mat = 0.5 * (mat + mat.T)
        try:
            cho = linalg.cho_factor(mat, lower=True)
        except linalg.LinAlgError as e:
            raise ValueError("inertia operator must be positive definite") from e
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "_cho", cho)

    @classmethod
    def from_J(cls, J) -> "InertiaOperator":
        """Rigid-body form I(W) = J W + W J for a symmetric J (vector = diagonal)."""
        J = np.asarray(J, dtype=float)
        if J.ndim == 1:
            J = np.diag(J)
        if J.ndim != 2 or J.shape[0] != J.shape[1]:
            raise ValueError(f"J must be a square matrix or a diagonal, got shape {J.shape}")
        n = J.shape[0]
        cols = [son_coords(J @ w + w @ J) for w in son_basis(n)]
        return cls(n, np.column_stack(cols))

    @classmethod
    def from_tensor_3d(cls, inertia) -> "InertiaOperator":
        """Operator on so(3) acting as the 3x3 inertia tensor under the hat map."""
        inertia = np.asarray(inertia, dtype=float)
        if inertia.ndim == 1:
            inertia = np.diag(inertia)
        if inertia.shape != (3, 3):
            raise ValueError(f"3D inertia tensor must be 3x3, got {inertia.shape}")
        J = 0.5 * np.trace(inertia) * np.eye(3) - inertia
        return cls.from_J(J)

    @property
    def dim(self) -> int:
        return son_dim(self.n)

    def apply(self, xi) -> np.ndarray:
        return son_from_coords(self.matrix @ son_coords(xi), self.n)

    def solve(self, xi) -> np.ndarray:
        return son_from_coords(linalg.cho_solve(self._cho, son_coords(xi)), self.n)

    def eigenvalues(self) -> np.ndarray:
        return linalg.eigvalsh(self.matrix)


def solve_son(n: int, operator_matrix: np.ndarray, rhs, what: str) -> np.ndarray:
    """Solve ``operator_matrix @ coords(x) = coords(rhs)`` for x in so(n)."""
    try:
        cho = linalg.cho_factor(operator_matrix, lower=True)
    except (linalg.LinAlgError, ValueError) as e:
        raise InversionDegeneracy(f"{what} is singular or indefinite") from e
    return son_from_coords(linalg.cho_solve(cho, son_coords(rhs)), n)
