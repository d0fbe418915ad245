from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from nonholo.core.errors import NumericalFailure, StiffnessError

logger = logging.getLogger(__name__)

RhsFn = Callable[[float, np.ndarray], np.ndarray]
RecordHook = Callable[[float, np.ndarray, Dict[str, float]], None]

METHODS = ("rk4", "adaptive")

# Dormand-Prince 5(4) tableau
_DP_C = (0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0)
_DP_A = (
    (),
    (1.0 / 5.0,),
    (3.0 / 40.0, 9.0 / 40.0),
    (44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0),
    (19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0),
    (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0),
    (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0),
)
_DP_B5 = np.array([35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0])
_DP_B4 = np.array(
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0]
)

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0


@dataclass
class FlowProblem:
    dimension: int
    rhs: RhsFn
    projector: Optional[Callable[[np.ndarray], np.ndarray]] = None
    observables: Dict[str, Callable[[np.ndarray], float]] = field(default_factory=dict)
    name: str = "flow"

    def with_projector(self, enabled: bool) -> "FlowProblem":
        return FlowProblem(
            dimension=self.dimension,
            rhs=self.rhs,
            projector=self.projector if enabled else None,
            observables=dict(self.observables),
            name=self.name,
        )


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    observables: Dict[str, np.ndarray]
    accepted_steps: int = 0
    rejected_steps: int = 0

    def __len__(self) -> int:
        return int(self.times.size)

    def observable(self, name: str) -> np.ndarray:
        try:
            return self.observables[name]
        except KeyError:
            known = ", ".join(sorted(self.observables)) or "none"
            raise KeyError(f"observable '{name}' was not recorded (recorded: {known})") from None

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


def _stage(problem: FlowProblem, t: float, y: np.ndarray, stage: int) -> np.ndarray:
    k = np.asarray(problem.rhs(t, y), dtype=float)
    if k.shape != (problem.dimension,):
        raise ValueError(f"{problem.name}: rhs returned shape {k.shape}, expected ({problem.dimension},)")
    if not np.all(np.isfinite(k)):
        raise NumericalFailure(f"{problem.name}: non-finite derivative", t=t, stage=stage)
    return k


def _project(problem: FlowProblem, y: np.ndarray, t: float) -> np.ndarray:
    if problem.projector is None:
        return y
    out = np.asarray(problem.projector(y), dtype=float)
    if not np.all(np.isfinite(out)):
        raise NumericalFailure(f"{problem.name}: projection produced non-finite state", t=t)
    return out


def rk4_step(problem: FlowProblem, y, t: float, h: float) -> np.ndarray:
    """One classical Runge-Kutta step followed by the problem's projector."""
    if not h > 0.0:
        raise ValueError(f"step size must be positive, got {h!r}")
    y = np.asarray(y, dtype=float)
    k1 = _stage(problem, t, y, 1)
    k2 = _stage(problem, t + 0.5 * h, y + 0.5 * h * k1, 2)
    k3 = _stage(problem, t + 0.5 * h, y + 0.5 * h * k2, 3)
    k4 = _stage(problem, t + h, y + h * k3, 4)
    y_new = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return _project(problem, y_new, t + h)


def dopri_step(problem: FlowProblem, y: np.ndarray, t: float, h: float):
    """Dormand-Prince step. Returns (5th-order solution, embedded error estimate)."""
    ks: List[np.ndarray] = []
    for i, (c, row) in enumerate(zip(_DP_C, _DP_A)):
        yi = y
        for a, k in zip(row, ks):
            if a != 0.0:
                yi = yi + h * a * k
        ks.append(_stage(problem, t + c * h, yi, i + 1))
    k = np.stack(ks)
    y_new = y + h * (_DP_B5 @ k)
    err = h * ((_DP_B5 - _DP_B4) @ k)
    return y_new, err


class _Recorder:
    def __init__(self, problem: FlowProblem, on_record: Optional[RecordHook]) -> None:
        self.problem = problem
        self.on_record = on_record
        self.times: List[float] = []
        self.states: List[np.ndarray] = []
        self.series: Dict[str, List[float]] = {name: [] for name in problem.observables}

    def __call__(self, t: float, y: np.ndarray) -> None:
        values = {name: float(fn(y)) for name, fn in self.problem.observables.items()}
        self.times.append(t)
        self.states.append(y.copy())
        for name, v in values.items():
            self.series[name].append(v)
        if self.on_record is not None:
            self.on_record(t, y, values)

    def build(self, accepted: int, rejected: int) -> Trajectory:
        return Trajectory(
            times=np.asarray(self.times),
            states=np.vstack(self.states),
            observables={name: np.asarray(v) for name, v in self.series.items()},
            accepted_steps=accepted,
            rejected_steps=rejected,
        )


def integrate(
    problem: FlowProblem,
    y0,
    t0: float,
    t_end: float,
    method: str = "rk4",
    h: float = 1e-3,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    record_every: int = 1,
    h_min: Optional[float] = None,
    on_record: Optional[RecordHook] = None,
    max_steps: int = 50_000_000,
) -> Trajectory:
    """Integrate ``problem`` from t0 to t_end.

    rk4 uses the fixed step h (the last step is shortened to land on t_end);
    adaptive uses the Dormand-Prince pair with h as the initial step.
    """
    if not t_end > t0:
        raise ValueError(f"t_end must exceed t0 (got t0={t0}, t_end={t_end})")
    if method not in METHODS:
        raise ValueError(f"unknown method '{method}' (expected one of {', '.join(METHODS)})")
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    span = t_end - t0
    h_min = 1e-12 * span if h_min is None else h_min

    y = _project(problem, np.array(y0, dtype=float), t0)
    rec = _Recorder(problem, on_record)
    rec(t0, y)
    logger.debug("%s: integrating %s on [%g, %g], h=%g", problem.name, method, t0, t_end, h)

    if method == "rk4":
        if not h > 0.0:
            raise ValueError(f"step size must be positive, got {h!r}")
        n_steps = max(1, int(math.ceil(span / h * (1.0 - 1e-12))))
        t = t0
        for i in range(n_steps):
            t_next = t_end if i == n_steps - 1 else t0 + (i + 1) * h
            y = rk4_step(problem, y, t, t_next - t)
            t = t_next
            if (i + 1) % record_every == 0 or i == n_steps - 1:
                rec(t, y)
        return rec.build(n_steps, 0)

    t = t0
    step = min(h if h > 0.0 else 1e-3 * span, span)
    accepted = rejected = 0
    while t < t_end:
        if accepted + rejected >= max_steps:
            raise StiffnessError(f"{problem.name}: step budget exhausted", t=t)
        last = step >= t_end - t
        if last:
            step = t_end - t
        elif step < h_min:
            raise StiffnessError(f"{problem.name}: step size {step:.3e} fell below h_min={h_min:.3e}", t=t)
        y_new, err_vec = dopri_step(problem, y, t, step)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))
        if not math.isfinite(err):
            raise NumericalFailure(f"{problem.name}: non-finite error estimate", t=t)
        if err <= 1.0:
            t = t_end if last else t + step
            y = _project(problem, y_new, t)
            accepted += 1
            if accepted % record_every == 0 or t >= t_end:
                rec(t, y)
        else:
            rejected += 1
            logger.debug("%s: rejected step h=%.3e at t=%.6g (err=%.3g)", problem.name, step, t, err)
        factor = MAX_FACTOR if err == 0.0 else min(MAX_FACTOR, max(MIN_FACTOR, SAFETY * err ** (-0.2)))
        step *= factor
    logger.info("%s: adaptive run finished (%d accepted, %d rejected)", problem.name, accepted, rejected)
    return rec.build(accepted, rejected)
