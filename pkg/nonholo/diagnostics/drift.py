"""Drift statistics of recorded observables."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from nonholo.core.integrator import Trajectory


@dataclass(frozen=True)
class DriftReport:
    observable: str
    initial: float
    max_abs_drift: float
    relative_drift: float
    slope: float
    samples: int
    tolerance: Optional[float] = None
    seed: Optional[int] = None

    @property
    def passed(self) -> Optional[bool]:
        """Verdict against ``tolerance`` on the relative drift; None without a tolerance."""
        if self.tolerance is None:
            return None
        return self.relative_drift < self.tolerance

    @property
    def verdict(self) -> str:
        return {None: "none", True: "pass", False: "fail"}[self.passed]

    def to_record(self) -> str:
        tol = "none" if self.tolerance is None else f"{self.tolerance:.3g}"
        seed = "none" if self.seed is None else str(self.seed)
        return (
            f"drift observable={self.observable} initial={self.initial:.17g} "
            f"max_abs={self.max_abs_drift:.6e} relative={self.relative_drift:.6e} "
            f"slope={self.slope:.6e} samples={self.samples} tolerance={tol} seed={seed} "
            f"verdict={self.verdict}"
        )


def drift_from_series(
    name: str,
    times,
    values,
    tolerance: Optional[float] = None,
    seed: Optional[int] = None,
) -> DriftReport:
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError(f"observable '{name}' has no samples")
    delta = values - values[0]
    max_abs = float(np.max(np.abs(delta)))
    slope = 0.0
    if values.size >= 2 and np.ptp(times) > 0.0:
        slope = float(np.polyfit(times, delta, 1)[0])
    return DriftReport(
        observable=name,
        initial=float(values[0]),
        max_abs_drift=max_abs,
        relative_drift=max_abs / max(abs(float(values[0])), 1.0),
        slope=slope,
        samples=int(values.size),
        tolerance=tolerance,
        seed=seed,
    )


def drift_report(
    trajectory: Trajectory,
    observable: str,
    tolerance: Optional[float] = None,
    seed: Optional[int] = None,
) -> DriftReport:
    """Drift of a recorded observable. Raises KeyError when it was not recorded."""
    return drift_from_series(observable, trajectory.times, trajectory.observable(observable), tolerance, seed)
