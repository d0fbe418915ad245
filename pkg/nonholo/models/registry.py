"""Model registry: adapters exposing each trivialized system as a flow.

Every model turns a flat state vector into derivatives, invariant residuals,
named observables and a projector onto its invariant manifold. Models with a
coordinate chart also expose the generic-engine embedding and their
canonical symmetry generator.
"""
from __future__ import annotations

import logging
import math
from typing import Callable, ClassVar, Dict, List, Optional, Sequence, Tuple, Type

import numpy as np

from nonholo.core.dynamics import MechanicalSystem, VectorFieldOnQ
from nonholo.core.errors import UnknownModel
from nonholo.core.integrator import FlowProblem
from nonholo.core.liegroup import (
    hat,
    reorthonormalize,
    son_from_coords,
    son_index_pairs,
    unhat,
)
from nonholo.models import charts
from nonholo.models.chaplygin_nd import (
    ChapNDParams,
    chapnd_full_energy,
    chapnd_full_moving_energy,
    chapnd_full_project,
    chapnd_full_residuals,
    chapnd_full_rhs,
    chapnd_reduced_energy,
    chapnd_reduced_moving_energy,
    chapnd_reduced_project,
    chapnd_reduced_residuals,
    chapnd_reduced_rhs,
    eta_from_planes,
    join_full,
    join_reduced,
    omega_from_K_nd,
    reduce_full_state,
    split_full,
    split_reduced,
    K_from_omega_nd,
)
from nonholo.models.inertia import InertiaOperator
from nonholo.models.lr import (
    LRParams,
    lr_constraint_residuals,
    lr_energy,
    lr_gram_residual,
    lr_moving_energy,
    lr_project,
    lr_rhs,
    lr_state_from_attitude,
    pack_lr_state,
    unpack_lr_state,
    veselova_params,
    veselova_vector_field,
)
from nonholo.models.rolling import (
    RollingBodyParams,
    K_from_omega_3d,
    chap3d_tilde_energy,
    chap3d_vector_field,
    join_state,
    omega_from_K_3d,
    rolling_body_energy,
    rolling_body_moving_energy,
    rolling_body_vector_field,
    rolling_project,
    rolling_residuals,
    split_state,
)
from nonholo.models.shapes import Ellipsoid, Sphere

logger = logging.getLogger(__name__)

Observable = Callable[[np.ndarray], float]


def _vec(values, size: int, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float).reshape(-1)
    if arr.size != size:
        raise ValueError(f"{what} needs {size} values, got {arr.size}")
    return arr


def _matrix(values, n: int, what: str) -> np.ndarray:
    """Accepts n values (diagonal) or an n x n nested list."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 2 and arr.shape[0] == 1:
        arr = arr[0]
    if arr.ndim == 1 and arr.size == n:
        return np.diag(arr)
    if arr.shape != (n, n):
        raise ValueError(f"{what} must be {n} values or a {n}x{n} matrix")
    return arr


def _rotation(values, n: int) -> np.ndarray:
    if values is None:
        return np.eye(n)
    return reorthonormalize(_matrix(values, n, "g"))


class Model:
    """Base adapter. Subclasses set ``id`` and implement the abstract hooks."""

    id: ClassVar[str] = ""
    description: ClassVar[str] = ""
    default_observables: ClassVar[Tuple[str, ...]] = ("moving_energy", "energy")

    def __init__(self, params) -> None:
        self.params = params

    # -- hooks ---------------------------------------------------------------
    @property
    def dimension(self) -> int:
        raise NotImplementedError

    def state_names(self) -> List[str]:
        raise NotImplementedError

    def rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def project(self, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def residuals(self, y: np.ndarray) -> Dict[str, float]:
        raise NotImplementedError

    def observables(self) -> Dict[str, Observable]:
        raise NotImplementedError

    def initial_state(self, initial) -> np.ndarray:
        raise NotImplementedError

    # -- optional chart ------------------------------------------------------
    def chart(self, tol_constraint: float = 1e-8) -> Optional[MechanicalSystem]:
        return None

    def generator(self) -> Optional[VectorFieldOnQ]:
        return None

    def sample_chart_points(self, rng: np.random.Generator, count: int) -> List[np.ndarray]:
        return []

    # -- shared ----------------------------------------------------------------
    def monitored_residuals(self) -> Tuple[str, ...]:
        """Residuals watched but not enforced by the projector."""
        return ()

    def all_observables(self) -> Dict[str, Observable]:
        named = dict(self.observables())
        for key in self.residuals(self.project(self.sample_state())):
            named[f"{key}_residual"] = (lambda k: (lambda y: self.residuals(y)[k]))(key)
        return named

    def sample_state(self) -> np.ndarray:
        return self.initial_state(None)

    def flow(self, project: bool = True, observables: Optional[Sequence[str]] = None) -> FlowProblem:
        available = self.all_observables()
        names = list(observables) if observables else list(self.default_observables)
        missing = [n for n in names if n not in available]
        if missing:
            raise KeyError(f"{self.id}: unknown observable(s) {', '.join(missing)} (known: {', '.join(sorted(available))})")
        return FlowProblem(
            dimension=self.dimension,
            rhs=self.rhs,
            projector=self.project if project else None,
            observables={n: available[n] for n in names},
            name=self.id,
        )


def _euler_samples(rng: np.random.Generator, count: int, planar: bool) -> List[np.ndarray]:
    out = []
    for _ in range(count):
        angles = [rng.uniform(0.0, 2 * math.pi), rng.uniform(0.6, math.pi - 0.6), rng.uniform(0.0, 2 * math.pi)]
        if planar:
            out.append(np.array(list(rng.uniform(-0.5, 0.5, size=2)) + angles))
        else:
            out.append(np.array(angles))
    return out


# -- LR family ------------------------------------------------------------------

class Veselova3DModel(Model):
    id = "veselova-3d"
    description = "Veselova rigid body, affine constraint <a, omega> = c (state gamma, Omega)"
    default_observables = ("moving_energy", "energy", "constraint_residual")

    @classmethod
    def from_section(cls, section) -> "Veselova3DModel":
        inertia = _matrix(section.inertia, 3, "inertia")
        return cls(veselova_params(inertia, _vec(section.axis, 3, "axis"), section.c))

    @property
    def dimension(self) -> int:
        return 6

    def state_names(self) -> List[str]:
        return ["gamma1", "gamma2", "gamma3", "Omega1", "Omega2", "Omega3"]

    def _split(self, y):
        return [hat(y[:3])], hat(y[3:6])

    def rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        gamma_dot, omega_dot = veselova_vector_field(self.params, y[:3], y[3:6])
        return np.concatenate([gamma_dot, omega_dot])

    def project(self, y: np.ndarray) -> np.ndarray:
        gammas, Omega = lr_project(self.params, *self._split(y))
        return np.concatenate([unhat(gammas[0]), unhat(Omega)])

    def residuals(self, y: np.ndarray) -> Dict[str, float]:
        gammas, Omega = self._split(y)
        return {
            "gamma_norm": float(y[:3] @ y[:3]) - 1.0,
            "constraint": float(lr_constraint_residuals(self.params, gammas, Omega)[0]),
        }

    def observables(self) -> Dict[str, Observable]:
        p = self.params
        return {
            "moving_energy": lambda y: lr_moving_energy(p, *self._split(y)),
            "energy": lambda y: lr_energy(p, *self._split(y)),
            "omega_norm": lambda y: float(np.linalg.norm(y[3:6])),
        }

    def initial_state(self, initial) -> np.ndarray:
        gamma = _vec(getattr(initial, "gamma", None) or (0.0, 0.0, 1.0), 3, "gamma")
        omega = _vec(getattr(initial, "omega", None) or (0.0, 0.0, 0.0), 3, "omega")
        return np.concatenate([gamma, omega])

    def chart(self, tol_constraint: float = 1e-8) -> MechanicalSystem:
        return charts.veselova_chart(self.params, tol_constraint)

    def generator(self) -> VectorFieldOnQ:
        return charts.veselova_affine_generator(self.params)

    def sample_chart_points(self, rng, count):
        return _euler_samples(rng, count, planar=False)


class LRSonModel(Model):
    id = "lr-son"
    description = "LR system on SO(n) with k right-invariant affine constraints"
    default_observables = ("moving_energy", "energy", "constraint_residual")

    @classmethod
    def from_section(cls, section) -> "LRSonModel":
        n = int(section.n)
        inertia = InertiaOperator.from_J(_matrix(section.inertia_j, n, "inertia_j"))
        axes = tuple(son_from_coords(np.asarray(row, dtype=float), n) for row in section.constraints)
        return cls(LRParams(inertia, axes, np.asarray(section.zeta or [0.0] * len(axes), dtype=float)))

    @property
    def dimension(self) -> int:
        return self.params.state_dim

    def state_names(self) -> List[str]:
        pairs = [f"{i + 1}{j + 1}" for i, j in son_index_pairs(self.params.n)]
        names = [f"gamma{c + 1}_{p}" for c in range(self.params.k) for p in pairs]
        return names + [f"Omega_{p}" for p in pairs]

    def rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        return lr_rhs(self.params)(t, y)

    def project(self, y: np.ndarray) -> np.ndarray:
        return pack_lr_state(*lr_project(self.params, *unpack_lr_state(self.params, y)))

    def residuals(self, y: np.ndarray) -> Dict[str, float]:
        gammas, Omega = unpack_lr_state(self.params, y)
        return {
            "gram": lr_gram_residual(self.params, gammas),
            "constraint": float(np.max(np.abs(lr_constraint_residuals(self.params, gammas, Omega)))),
        }

    def observables(self) -> Dict[str, Observable]:
        p = self.params
        return {
            "moving_energy": lambda y: lr_moving_energy(p, *unpack_lr_state(p, y)),
            "energy": lambda y: lr_energy(p, *unpack_lr_state(p, y)),
            "omega_norm": lambda y: float(np.linalg.norm(unpack_lr_state(p, y)[1]) / math.sqrt(2.0)),
        }

    def initial_state(self, initial) -> np.ndarray:
        p = self.params
        g = _rotation(getattr(initial, "g", None), p.n)
        coords = getattr(initial, "omega", None)
        Omega = np.zeros((p.n, p.n)) if coords is None else son_from_coords(_vec(coords, len(son_index_pairs(p.n)), "omega"), p.n)
        return pack_lr_state(*lr_state_from_attitude(p, g, Omega))


# -- rolling bodies ---------------------------------------------------------------

def _rolling_params(section, sphere_only: bool) -> RollingBodyParams:
    shape_name = (section.shape or "sphere").lower()
    if shape_name == "sphere":
        shape = Sphere(float(section.radius))
    elif shape_name == "ellipsoid" and not sphere_only:
        if section.semi_axes is None:
            raise ValueError("ellipsoid shape needs semi_axes")
        shape = Ellipsoid(tuple(_vec(section.semi_axes, 3, "semi_axes")))
    else:
        raise ValueError(f"unsupported shape '{section.shape}'")
    return RollingBodyParams(
        mass=float(section.mass),
        gravity=float(section.gravity),
        inertia=_matrix(section.inertia, 3, "inertia"),
        kappa=float(section.kappa),
        shape=shape,
    )


class RollingBodyModel(Model):
    id = "rolling-body"
    description = "convex body (sphere or ellipsoid) rolling on a rotating plane (state K, X, gamma)"
    default_observables = ("moving_energy", "energy", "k_dot_gamma")

    @classmethod
    def from_section(cls, section) -> "RollingBodyModel":
        return cls(_rolling_params(section, sphere_only=False))

    @property
    def dimension(self) -> int:
        return 9

    def state_names(self) -> List[str]:
        return ["K1", "K2", "K3", "X1", "X2", "X3", "gamma1", "gamma2", "gamma3"]

    def vector_field(self, K, X, gamma):
        return rolling_body_vector_field(self.params, K, X, gamma)

    def rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        return join_state(*self.vector_field(*split_state(y)))

    def project(self, y: np.ndarray) -> np.ndarray:
        return join_state(*rolling_project(self.params, *split_state(y)))

    def residuals(self, y: np.ndarray) -> Dict[str, float]:
        return rolling_residuals(self.params, *split_state(y))

    def observables(self) -> Dict[str, Observable]:
        p = self.params

        def omega(y):
            K, _, gamma = split_state(y)
            return omega_from_K_3d(p, gamma, K)

        return {
            "moving_energy": lambda y: rolling_body_moving_energy(p, *split_state(y)),
            "energy": lambda y: rolling_body_energy(p, *split_state(y)),
            "k_dot_gamma": lambda y: float(y[0:3] @ y[6:9]),
            "omega_norm": lambda y: float(np.linalg.norm(omega(y))),
            "x_norm": lambda y: float(np.linalg.norm(y[3:6])),
        }

    def initial_state(self, initial) -> np.ndarray:
        gamma = _vec(getattr(initial, "gamma", None) or (0.0, 0.0, 1.0), 3, "gamma")
        gamma = gamma / np.linalg.norm(gamma)
        x_body = getattr(initial, "x_body", None)
        X = self.params.shape.F(gamma) if x_body is None else _vec(x_body, 3, "x_body")
        omega = _vec(getattr(initial, "omega", None) or (0.0, 0.0, 0.0), 3, "omega")
        return join_state(K_from_omega_3d(self.params, gamma, omega), X, gamma)

    def chart(self, tol_constraint: float = 1e-8) -> MechanicalSystem:
        return charts.rolling_chart(self.params, tol_constraint)

    def generator(self) -> VectorFieldOnQ:
        return charts.kappa_generator(self.params)

    def sample_chart_points(self, rng, count):
        return _euler_samples(rng, count, planar=True)


class Chaplygin3DModel(RollingBodyModel):
    id = "chaplygin-3d"
    description = "Chaplygin ball on a rotating plane (spherical rolling body)"
    default_observables = ("moving_energy", "tilde_energy", "energy", "k_dot_gamma")

    @classmethod
    def from_section(cls, section) -> "Chaplygin3DModel":
        return cls(_rolling_params(section, sphere_only=True))

    def vector_field(self, K, X, gamma):
        return chap3d_vector_field(self.params, K, X, gamma)

    def observables(self) -> Dict[str, Observable]:
        named = super().observables()
        named["tilde_energy"] = lambda y: chap3d_tilde_energy(self.params, *split_state(y))
        return named

    def generator(self) -> VectorFieldOnQ:
        return charts.plane_generator(self.params)


# -- n-dimensional Chaplygin sphere ---------------------------------------------------

def _chapnd_params(section) -> ChapNDParams:
    n = int(section.n)
    j = section.inertia_j if section.inertia_j is not None else [1.0] * n
    inertia = InertiaOperator.from_J(_matrix(j, n, "inertia_j"))
    magnitudes = list(section.eta or [])
    planes = [tuple(int(v) for v in pair) for pair in (section.eta_planes or [])]
    if len(magnitudes) != len(planes):
        raise ValueError(f"eta has {len(magnitudes)} values but eta_planes has {len(planes)} pairs")
    return ChapNDParams(float(section.mass), float(section.radius), inertia, eta_from_planes(n, magnitudes, planes))


def _chapnd_initial_full(params: ChapNDParams, initial) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    n = params.n
    raw_x = getattr(initial, "x", None)
    if raw_x is None:
        x = np.zeros(n)
    else:
        x = np.asarray(raw_x, dtype=float).reshape(-1)
        if x.size == n - 1:
            x = np.append(x, 0.0)
        x = _vec(x, n, "x")
    x[n - 1] = params.radius
    g = _rotation(getattr(initial, "g", None), n)
    coords = getattr(initial, "omega", None)
    Omega = np.zeros((n, n)) if coords is None else son_from_coords(_vec(coords, len(son_index_pairs(n)), "omega"), n)
    return x, g, K_from_omega_nd(params, g[n - 1, :], Omega)


class ChaplyginNDModel(Model):
    id = "chaplygin-nd"
    description = "n-dimensional Chaplygin sphere on a rotating hyperplane (state x, g, K)"
    default_observables = ("moving_energy", "energy")

    @classmethod
    def from_section(cls, section) -> "ChaplyginNDModel":
        return cls(_chapnd_params(section))

    @property
    def dimension(self) -> int:
        n = self.params.n
        return n + n * n + len(son_index_pairs(n))

    def state_names(self) -> List[str]:
        n = self.params.n
        names = [f"x{i + 1}" for i in range(n)]
        names += [f"g{i + 1}{j + 1}" for i in range(n) for j in range(n)]
        return names + [f"K_{i + 1}{j + 1}" for i, j in son_index_pairs(n)]

    def rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        return chapnd_full_rhs(self.params)(t, y)

    def project(self, y: np.ndarray) -> np.ndarray:
        return join_full(*chapnd_full_project(self.params, *split_full(self.params, y)))

    def residuals(self, y: np.ndarray) -> Dict[str, float]:
        return chapnd_full_residuals(self.params, *split_full(self.params, y))

    def observables(self) -> Dict[str, Observable]:
        p = self.params

        def omega_norm(y):
            _, g, K = split_full(p, y)
            return float(np.linalg.norm(omega_from_K_nd(p, g[p.n - 1, :], K)) / math.sqrt(2.0))

        return {
            "moving_energy": lambda y: chapnd_full_moving_energy(p, *split_full(p, y)),
            "energy": lambda y: chapnd_full_energy(p, *split_full(p, y)),
            "omega_norm": omega_norm,
            "x_norm": lambda y: float(np.linalg.norm(y[: p.n])),
        }

    def initial_state(self, initial) -> np.ndarray:
        return join_full(*_chapnd_initial_full(self.params, initial))

    def reduce(self, y: np.ndarray) -> np.ndarray:
        """Reduced state vector of a full state."""
        return join_reduced(*reduce_full_state(self.params, *split_full(self.params, y)))


class ChaplyginNDReducedModel(Model):
    id = "chaplygin-nd-reduced"
    description = "n-dimensional Chaplygin sphere, reduced state (K, X, gamma, Xi)"
    default_observables = ("moving_energy", "energy", "xi_orbit_residual")

    @classmethod
    def from_section(cls, section) -> "ChaplyginNDReducedModel":
        return cls(_chapnd_params(section))

    @property
    def dimension(self) -> int:
        n = self.params.n
        return 2 * len(son_index_pairs(n)) + 2 * n

    def state_names(self) -> List[str]:
        n = self.params.n
        pairs = [f"{i + 1}{j + 1}" for i, j in son_index_pairs(n)]
        names = [f"K_{p}" for p in pairs]
        names += [f"X{i + 1}" for i in range(n)] + [f"gamma{i + 1}" for i in range(n)]
        return names + [f"Xi_{p}" for p in pairs]

    def rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        return chapnd_reduced_rhs(self.params)(t, y)

    def project(self, y: np.ndarray) -> np.ndarray:
        return join_reduced(*chapnd_reduced_project(self.params, *split_reduced(self.params, y)))

    def residuals(self, y: np.ndarray) -> Dict[str, float]:
        return chapnd_reduced_residuals(self.params, *split_reduced(self.params, y))

    def monitored_residuals(self) -> Tuple[str, ...]:
        return ("xi_gamma", "xi_orbit")

    def observables(self) -> Dict[str, Observable]:
        p = self.params

        def omega_norm(y):
            K, _, gamma, _ = split_reduced(p, y)
            return float(np.linalg.norm(omega_from_K_nd(p, gamma, K)) / math.sqrt(2.0))

        return {
            "moving_energy": lambda y: chapnd_reduced_moving_energy(p, *split_reduced(p, y)),
            "energy": lambda y: chapnd_reduced_energy(p, *split_reduced(p, y)),
            "omega_norm": omega_norm,
            "x_norm": lambda y: float(np.linalg.norm(split_reduced(p, y)[1])),
        }

    def initial_state(self, initial) -> np.ndarray:
        return join_reduced(*reduce_full_state(self.params, *_chapnd_initial_full(self.params, initial)))


MODEL_REGISTRY: Dict[str, Type[Model]] = {
    cls.id: cls
    for cls in (
        Veselova3DModel,
        LRSonModel,
        RollingBodyModel,
        Chaplygin3DModel,
        ChaplyginNDModel,
        ChaplyginNDReducedModel,
    )
}


def get_model_class(model_id: str) -> Type[Model]:
    try:
        return MODEL_REGISTRY[model_id]
    except KeyError:
        raise UnknownModel(model_id, sorted(MODEL_REGISTRY)) from None


def list_models() -> List[Tuple[str, str]]:
    return [(key, cls.description) for key, cls in sorted(MODEL_REGISTRY.items())]


def invariant_residuals(model: Model, y) -> Dict[str, float]:
    return model.residuals(np.asarray(y, dtype=float))


def chart_embedding(model: Model, tol_constraint: float = 1e-8) -> MechanicalSystem:
    system = model.chart(tol_constraint)
    if system is None:
        raise ValueError(f"model '{model.id}' has no chart embedding")
    return system
