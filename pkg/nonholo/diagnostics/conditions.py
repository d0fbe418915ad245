"""Sampled tests of the conditions under which moving energies are conserved.

For a field Y on configuration space the three conditions compared are

    (i)   Y - Z0 annihilates the reaction force on every sampled fiber state,
    (ii)  the tangent lift of Y leaves L invariant on sampled states,
    (iii) the moving energy E_L - <p, Y> is conserved along a probe trajectory,

and any two of them imply the third. Membership in the reaction annihilator is
never represented, only sampled over a ball of fiber coordinates.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from nonholo.core.dynamics import (
    ConstraintGeometry,
    FieldLike,
    MechanicalSystem,
    State,
    VectorFieldOnQ,
    as_field,
    chart_flow,
    constraint_geometry,
    lifted_derivative,
    momentum_covector,
    momentum_of_field,
    moving_energy,
    reaction_force,
)
from nonholo.core.integrator import integrate
from nonholo.diagnostics.drift import DriftReport, drift_report
from nonholo.diagnostics.sampling import make_rng, sample_fiber_states

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-9
DEFAULT_DRIFT_TOLERANCE = 1e-7


@dataclass(frozen=True)
class ProbeSettings:
    """Probe integration used by the dynamical tests."""

    state: Optional[State] = None
    horizon: float = 1.0
    h: float = 1e-3
    method: str = "rk4"
    project: bool = True


@dataclass(frozen=True)
class ConditionReport:
    annihilator: float
    lifted_derivative: float
    moving_energy_drift: float
    horizontality: float
    invariance: float
    tolerance: float = DEFAULT_TOLERANCE
    drift_tolerance: float = DEFAULT_DRIFT_TOLERANCE
    fiber_samples: int = 64
    fiber_radius: float = 10.0
    seed: Optional[int] = None
    field: str = ""

    @property
    def passes(self) -> Tuple[bool, bool, bool]:
        return (
            self.annihilator < self.tolerance,
            self.lifted_derivative < self.tolerance,
            self.moving_energy_drift < self.drift_tolerance,
        )

    @property
    def consistent(self) -> bool:
        """False only when exactly two of the three conditions pass."""
        return sum(self.passes) != 2

    def to_records(self) -> List[str]:
        seed = "none" if self.seed is None else str(self.seed)
        rows = [
            ("annihilator", self.annihilator, self.tolerance, self.passes[0]),
            ("lifted_derivative", self.lifted_derivative, self.tolerance, self.passes[1]),
            ("moving_energy_drift", self.moving_energy_drift, self.drift_tolerance, self.passes[2]),
        ]
        out = [
            f"condition field={self.field or 'Y'} name={name} value={value:.6e} tolerance={tol:.3g} "
            f"fiber_samples={self.fiber_samples} fiber_radius={self.fiber_radius:g} seed={seed} "
            f"verdict={'pass' if ok else 'fail'}"
            for name, value, tol, ok in rows
        ]
        out.append(f"condition field={self.field or 'Y'} name=horizontality value={self.horizontality:.6e} seed={seed}")
        out.append(f"condition field={self.field or 'Y'} name=invariance value={self.invariance:.6e} seed={seed}")
        out.append(f"condition field={self.field or 'Y'} name=consistency verdict={'pass' if self.consistent else 'fail'}")
        return out


def _field_value(Y, q: np.ndarray, n: int) -> np.ndarray:
    if isinstance(Y, VectorFieldOnQ) or callable(Y):
        return as_field(Y, n)(q)
    return np.asarray(Y, dtype=float)


def reaction_annihilator_test(
    sys: MechanicalSystem,
    q,
    Y,
    n_samples: int = 64,
    radius: float = 10.0,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """max |<R(v_q), Y(q)>| over fiber states sampled in a ball of kernel coordinates.

    ``Y`` may be a field or the vector Y(q) itself.
    """
    q = np.asarray(q, dtype=float)
    rng = make_rng(None) if rng is None else rng
    yq = _field_value(Y, q, sys.n)
    worst = 0.0
    for state in sample_fiber_states(sys, q, rng, n_samples, radius):
        worst = max(worst, abs(float(reaction_force(sys, state) @ yq)))
    return worst


def horizontality_test(sys: MechanicalSystem, Y: FieldLike, q_samples: Sequence) -> float:
    Y = as_field(Y, sys.n)
    worst = 0.0
    for q in q_samples:
        q = np.asarray(q, dtype=float)
        res = sys.constraint_matrix(q) @ Y(q) + sys.affine_term(q)
        worst = max(worst, float(np.linalg.norm(res)))
    return worst


def _kernel_projector(sys: MechanicalSystem, q: np.ndarray) -> np.ndarray:
    S = sys.constraint_matrix(q)
    return np.eye(sys.n) - S.T @ linalg.solve(S @ S.T, S, assume_a="pos")


def infinitesimal_invariance_test(sys: MechanicalSystem, Y: FieldLike, q_samples: Sequence) -> float:
    """max |S(q)[Y, X_u](q)| over sections X_u = P(.)u of the constraint distribution.

    P is the orthogonal projector onto ker S and u runs over a kernel basis at q,
    so each X_u is smooth near q. Small values are evidence for invariance of
    the distribution under the flow of Y, not a proof.
    """
    Y = as_field(Y, sys.n)
    worst = 0.0
    for q in q_samples:
        q = np.asarray(q, dtype=float)
        geom = constraint_geometry(sys, q)
        S = sys.constraint_matrix(q)
        yq = Y(q)
        dY = Y.jacobian(q, sys.fd_step)
        norm_y = float(np.linalg.norm(yq))
        if norm_y > 0.0:
            eps = sys.fd_step * max(1.0, float(np.linalg.norm(q))) / norm_y
            dP = (_kernel_projector(sys, q + eps * yq) - _kernel_projector(sys, q - eps * yq)) / (2.0 * eps)
        else:
            dP = np.zeros((sys.n, sys.n))
        P = _kernel_projector(sys, q)
        for u in geom.D_basis.T:
            bracket = dP @ u - dY @ (P @ u)
            worst = max(worst, float(np.linalg.norm(S @ bracket)))
    return worst


def thm1_classifier(
    sys: MechanicalSystem,
    Y: FieldLike,
    q_samples: Sequence,
    fiber_samples: int = 64,
    probe_horizon: float = 1.0,
    *,
    radius: float = 10.0,
    seed: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    probe: Optional[ProbeSettings] = None,
    probe_radius: float = 0.5,
    tolerance: float = DEFAULT_TOLERANCE,
    drift_tolerance: float = DEFAULT_DRIFT_TOLERANCE,
) -> ConditionReport:
    """Evaluate the three conditions for Y and report their consistency.

    The probe starts from ``probe.state`` when given, else from a fiber state of
    radius ``probe_radius`` over the first configuration sample.
    """
    Y = as_field(Y, sys.n)
    rng = make_rng(seed) if rng is None else rng
    q_samples = [np.asarray(q, dtype=float) for q in q_samples]
    if not q_samples:
        raise ValueError("thm1_classifier needs at least one configuration sample")

    annihilator = 0.0
    lifted = 0.0
    for q in q_samples:
        z0 = constraint_geometry(sys, q).Z0
        annihilator = max(
            annihilator,
            reaction_annihilator_test(sys, q, Y(q) - z0, fiber_samples, radius, rng),
        )
        for state in sample_fiber_states(sys, q, rng, fiber_samples, radius):
            lifted = max(lifted, abs(lifted_derivative(sys, state, Y)))

    probe = probe or ProbeSettings(horizon=probe_horizon)
    start = probe.state
    if start is None:
        start = sample_fiber_states(sys, q_samples[0], rng, 1, probe_radius)[0]
    flow = chart_flow(sys, project=probe.project, observables={"moving_energy": lambda st: moving_energy(sys, st, Y)})
    traj = integrate(flow, start.flat(), 0.0, probe.horizon, method=probe.method, h=probe.h)
    drift = drift_report(traj, "moving_energy").relative_drift

    report = ConditionReport(
        annihilator=annihilator,
        lifted_derivative=lifted,
        moving_energy_drift=drift,
        horizontality=horizontality_test(sys, Y, q_samples),
        invariance=infinitesimal_invariance_test(sys, Y, q_samples),
        tolerance=tolerance,
        drift_tolerance=drift_tolerance,
        fiber_samples=fiber_samples,
        fiber_radius=radius,
        seed=seed,
        field=Y.name,
    )
    if not report.consistent:
        logger.warning("%s: condition pattern %s breaks the two-implies-three rule", sys.name, report.passes)
    return report


def _fiber_span(geom: ConstraintGeometry) -> np.ndarray:
    if float(np.linalg.norm(geom.Z0)) > 0.0:
        return np.column_stack([geom.D_basis, geom.Z0])
    return geom.D_basis


def a_orthogonal_complement(sys: MechanicalSystem, q, w) -> np.ndarray:
    """Component of w that is A(q)-orthogonal to D_q + span{Z0(q)}."""
    q = np.asarray(q, dtype=float)
    N = _fiber_span(constraint_geometry(sys, q))
    A = sys.metric(q)
    w = np.asarray(w, dtype=float)
    coeffs = linalg.solve(N.T @ A @ N, N.T @ (A @ w), assume_a="pos")
    return w - N @ coeffs


def complement_field(sys: MechanicalSystem, W: FieldLike) -> VectorFieldOnQ:
    W = as_field(W, sys.n)
    return VectorFieldOnQ(lambda q: a_orthogonal_complement(sys, q, W(q)), name=f"perp({W.name})")


def generator_equivalence_test(
    sys: MechanicalSystem,
    Y1: FieldLike,
    Y2: FieldLike,
    q_samples: Sequence,
    fiber_samples: int = 64,
    *,
    radius: float = 10.0,
    seed: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[float, float]:
    """(max moving-energy gap on sampled fibers, max |N^T A (Y1 - Y2)|).

    N spans D_q + span{Z0(q)}. The equivalence is only expected when the
    Lagrangian has no velocity-linear term.
    """
    Y1 = as_field(Y1, sys.n)
    Y2 = as_field(Y2, sys.n)
    rng = make_rng(seed) if rng is None else rng
    gap = 0.0
    ortho = 0.0
    warned = False
    for q in q_samples:
        q = np.asarray(q, dtype=float)
        if not warned and float(np.linalg.norm(sys.gyro(q))) > 0.0:
            logger.warning("%s: velocity-linear term present; generator equivalence may not hold", sys.name)
            warned = True
        geom = constraint_geometry(sys, q)
        w = Y1(q) - Y2(q)
        ortho = max(ortho, float(np.linalg.norm(_fiber_span(geom).T @ (sys.metric(q) @ w))))
        for state in sample_fiber_states(sys, q, rng, fiber_samples, radius):
            gap = max(gap, abs(float(momentum_covector(sys, state) @ w)))
    return gap, ortho


def momentum_conservation_test(
    sys: MechanicalSystem,
    Y: FieldLike,
    probe: ProbeSettings,
    tolerance: Optional[float] = None,
    seed: Optional[int] = None,
) -> DriftReport:
    """Drift of the momentum <p, Y> along a probe trajectory."""
    if probe.state is None:
        raise ValueError("momentum_conservation_test needs a probe state")
    Y = as_field(Y, sys.n)
    flow = chart_flow(sys, project=probe.project, observables={"momentum": lambda st: momentum_of_field(sys, st, Y)})
    traj = integrate(flow, probe.state.flat(), 0.0, probe.horizon, method=probe.method, h=probe.h)
    return drift_report(traj, "momentum", tolerance=tolerance, seed=seed)
