"""Convex body shapes described through rho = F(gamma).

-rho is the body-frame contact point whose inward unit normal is gamma.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np


@dataclass(frozen=True)
class Sphere:
    radius: float

    def __post_init__(self) -> None:
        if not self.radius > 0.0:
            raise ValueError("sphere radius must be positive")

    def F(self, gamma) -> np.ndarray:
        return self.radius * np.asarray(gamma, dtype=float)

    def DF(self, gamma) -> np.ndarray:
        return self.radius * np.eye(3)


@dataclass(frozen=True)
class Ellipsoid:
    """Ellipsoid x.Ex = 1 with E = diag(a_i^-2)."""

    semi_axes: Tuple[float, float, float]

    def __post_init__(self) -> None:
        axes = tuple(float(a) for a in self.semi_axes)
        if len(axes) != 3 or min(axes) <= 0.0:
            raise ValueError("ellipsoid needs three positive semi-axes")
        object.__setattr__(self, "semi_axes", axes)

    @property
    def e_inv(self) -> np.ndarray:
        return np.diag(np.square(self.semi_axes))

    def F(self, gamma) -> np.ndarray:
        w = self.e_inv @ np.asarray(gamma, dtype=float)
        return w / math.sqrt(float(np.dot(gamma, w)))

    def DF(self, gamma) -> np.ndarray:
        gamma = np.asarray(gamma, dtype=float)
        e_inv = self.e_inv
        s = float(gamma @ e_inv @ gamma)
        rho = (e_inv @ gamma) / math.sqrt(s)
        return (e_inv - np.outer(rho, rho)) / math.sqrt(s)

    def surface_residual(self, rho) -> float:
        rho = np.asarray(rho, dtype=float)
        return float(rho @ (rho / np.square(self.semi_axes)) - 1.0)


Shape = Union[Sphere, Ellipsoid]


def shape_F(params, gamma) -> np.ndarray:
    """rho for a shape or for anything carrying one (e.g. RollingBodyParams)."""
    return getattr(params, "shape", params).F(gamma)


def shape_DF(params, gamma) -> np.ndarray:
    return getattr(params, "shape", params).DF(gamma)
