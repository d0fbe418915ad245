"""Execute scenarios: integrate, stream the CSV, write the text report.

Report lines are space-separated ``key=value`` records, one per line, each
starting with its record type (``scenario``, ``drift``, ``residual``, ``demo``,
``condition``, ``status``).
"""
from __future__ import annotations

import csv
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from nonholo.core.errors import EXIT_OK, ConfigError, NonholoError, exit_code_for
from nonholo.core.integrator import Trajectory, integrate
from nonholo.core.settings import Settings
from nonholo.diagnostics.conditions import ConditionReport, thm1_classifier
from nonholo.diagnostics.drift import DriftReport, drift_report
from nonholo.diagnostics.sampling import make_rng
from nonholo.scenario.config import Scenario, load_scenario

logger = logging.getLogger(__name__)

SEED_ENV = "NONHOLO_SEED"
FLUSH_EVERY = 256
CONDITION_SAMPLES = 4


@dataclass
class RunSummary:
    scenario: str
    model_id: str
    method: str
    h: float
    t_end: float
    seed: int
    project: bool
    exit_code: int = EXIT_OK
    csv_path: Optional[str] = None
    report_path: Optional[str] = None
    pdf_path: Optional[str] = None
    records: int = 0
    accepted_steps: int = 0
    rejected_steps: int = 0
    drift: List[DriftReport] = field(default_factory=list)
    residual_max: Dict[str, float] = field(default_factory=dict)
    residual_tolerance: float = 1e-8
    demo: List[Tuple[float, float, float]] = field(default_factory=list)
    conditions: Optional[ConditionReport] = None
    error: Optional[str] = None
    final_time: Optional[float] = None


def resolve_seed(scenario_seed: Optional[int], settings: Settings) -> int:
    """--seed / [run] seed, then NONHOLO_SEED, then settings.default_seed."""
    if scenario_seed is not None:
        return int(scenario_seed)
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer, got '{env}'") from None
    return int(settings.default_seed)


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def _output_path(explicit: Optional[str], settings: Settings, name: str, suffix: str) -> Path:
    if explicit:
        return Path(explicit)
    return Path(settings.output_dir) / f"{name}{suffix}"


class _Monitor:
    """Record hook: streams CSV rows and tracks residual and demo maxima."""

    def __init__(self, scenario: Scenario, writer, handle, columns: Sequence[str]) -> None:
        self.scenario = scenario
        self.model = scenario.model
        self.writer = writer
        self.handle = handle
        self.columns = list(columns)
        self.rows = 0
        self.last_t: Optional[float] = None
        self.residual_max: Dict[str, float] = {}
        diag = scenario.diagnostics
        self.track_residuals = diag.residuals
        self.demo_fns = {}
        if diag.demo:
            named = self.model.all_observables()
            self.demo_fns = {k: named[k] for k in ("omega_norm", "x_norm") if k in named}
        self.demo_max = {k: 0.0 for k in self.demo_fns}
        t_end = scenario.integrator.t_end
        self.checkpoints = [t_end * (i + 1) / diag.checkpoints for i in range(diag.checkpoints)]
        self.demo: List[Tuple[float, float, float]] = []

    def __call__(self, t: float, y: np.ndarray, values: Dict[str, float]) -> None:
        self.writer.writerow([_fmt(t)] + [_fmt(v) for v in y] + [_fmt(values[c]) for c in self.columns])
        self.rows += 1
        self.last_t = t
        if self.rows % FLUSH_EVERY == 0:
            self.handle.flush()
        if self.track_residuals:
            for key, v in self.model.residuals(y).items():
                self.residual_max[key] = max(self.residual_max.get(key, 0.0), abs(v))
        if self.demo_fns:
            for key, fn in self.demo_fns.items():
                self.demo_max[key] = max(self.demo_max[key], float(fn(y)))
            while self.checkpoints and t >= self.checkpoints[0] * (1.0 - 1e-12):
                self.checkpoints.pop(0)
                self.demo.append((t, self.demo_max.get("omega_norm", float("nan")), self.demo_max.get("x_norm", float("nan"))))


def _condition_report(scenario: Scenario, settings: Settings, seed: int) -> Optional[ConditionReport]:
    model = scenario.model
    system = model.chart(settings.tol_constraint)
    if system is None:
        logger.warning("%s: no chart embedding, skipping condition diagnostics", model.id)
        return None
    rng = make_rng(seed)
    q_samples = model.sample_chart_points(rng, CONDITION_SAMPLES)
    return thm1_classifier(
        system,
        model.generator(),
        q_samples,
        fiber_samples=settings.fiber_samples,
        probe_horizon=min(1.0, scenario.integrator.t_end),
        radius=settings.fiber_radius,
        seed=seed,
        rng=rng,
        tolerance=settings.condition_tol,
        drift_tolerance=settings.drift_tol,
    )


def report_lines(summary: RunSummary) -> List[str]:
    out = [
        "# nonholo run report",
        f"scenario name={summary.scenario} model={summary.model_id} seed={summary.seed} "
        f"method={summary.method} h={summary.h:g} t_end={summary.t_end:g} project={str(summary.project).lower()} "
        f"records={summary.records} accepted={summary.accepted_steps} rejected={summary.rejected_steps}",
    ]
    out.extend(d.to_record() for d in summary.drift)
    for key, value in sorted(summary.residual_max.items()):
        out.append(
            f"residual name={key} max_abs={value:.6e} tolerance={summary.residual_tolerance:.3g} seed={summary.seed}"
        )
    for t, omega, x in summary.demo:
        out.append(
            f"demo t={t:.6g} max_omega_norm={omega:.17g} max_x_norm={x:.17g} tolerance=none seed={summary.seed}"
        )
    if summary.conditions is not None:
        out.extend(summary.conditions.to_records())
    status = f"status exit_code={summary.exit_code}"
    if summary.final_time is not None:
        status += f" t_final={summary.final_time:.17g}"
    status += f" seed={summary.seed}"
    if summary.error:
        status += f" error={summary.error!r}"
    out.append(status)
    return out


def write_report(summary: RunSummary, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with tmp.open("w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(report_lines(summary)) + "\n")
    tmp.replace(path)


def run_scenario(scenario: Scenario, settings: Optional[Settings] = None, ledger: Optional[str] = None) -> RunSummary:
    """Run one scenario. Numerical failures are captured in the summary.

    The CSV is flushed up to the last recorded state even when the run fails.
    """
    settings = settings or Settings()
    seed = resolve_seed(scenario.seed, settings)
    integ = scenario.integrator
    diag = scenario.diagnostics
    model = scenario.model
    columns = scenario.recorded_observables

    csv_path = _output_path(scenario.output.csv, settings, scenario.name, ".csv")
    report_path = _output_path(scenario.output.report, settings, scenario.name, ".report.txt")
    summary = RunSummary(
        scenario=scenario.name,
        model_id=model.id,
        method=integ.method,
        h=float(integ.h),
        t_end=float(integ.t_end),
        seed=seed,
        project=integ.project,
        csv_path=str(csv_path),
        report_path=str(report_path),
        residual_tolerance=settings.tol_constraint,
    )

    flow = model.flow(project=integ.project, observables=columns)
    trajectory: Optional[Trajectory] = None
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    with csv_path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["t"] + model.state_names() + columns)
        monitor = _Monitor(scenario, writer, handle, columns)
        try:
            trajectory = integrate(
                flow,
                scenario.y0,
                0.0,
                integ.t_end,
                method=integ.method,
                h=integ.h,
                rtol=integ.rtol,
                atol=integ.atol,
                record_every=integ.record_every,
                on_record=monitor,
            )
        except NonholoError as e:
            logger.error("%s: run failed: %s", scenario.name, e)
            summary.exit_code = exit_code_for(e)
            summary.error = str(e)
        finally:
            summary.records = monitor.rows
            summary.final_time = monitor.last_t
            summary.residual_max = monitor.residual_max
            summary.demo = monitor.demo

    if trajectory is not None:
        summary.accepted_steps = trajectory.accepted_steps
        summary.rejected_steps = trajectory.rejected_steps
        tol = diag.tolerance if diag.tolerance is not None else settings.drift_tol
        summary.drift = [drift_report(trajectory, name, tolerance=tol, seed=seed) for name in diag.drift]
        if diag.conditions:
            try:
                summary.conditions = _condition_report(scenario, settings, seed)
            except NonholoError as e:
                logger.error("%s: condition diagnostics failed: %s", scenario.name, e)
                summary.exit_code = exit_code_for(e)
                summary.error = str(e)

    write_report(summary, report_path)
    if scenario.output.pdf:
        from nonholo.pdf.report_pdf import build_report_pdf

        summary.pdf_path = str(build_report_pdf(summary, scenario.output.pdf))
    ledger = ledger or settings.ledger_path
    if ledger:
        from nonholo.data.repo import record_run

        record_run(ledger, summary)
    logger.info("%s: finished with exit code %d (%d records)", scenario.name, summary.exit_code, summary.records)
    return summary


def _run_file(path: str, overrides: Dict[str, object], settings_data: Dict[str, object], ledger: Optional[str]) -> Tuple[str, int, Optional[str]]:
    settings = Settings.from_dict(settings_data)
    try:
        scenario = load_scenario(path, settings).with_overrides(settings, **overrides)
        summary = run_scenario(scenario, settings, ledger)
        return path, summary.exit_code, summary.error
    except NonholoError as e:
        logger.exception("batch worker failed on %s", path)
        return path, exit_code_for(e), str(e)


def run_batch(
    paths: Sequence[str],
    settings: Optional[Settings] = None,
    overrides: Optional[Dict[str, object]] = None,
    workers: Optional[int] = None,
    ledger: Optional[str] = None,
) -> List[Tuple[str, int, Optional[str]]]:
    """Run scenario files in isolated worker processes, in input order."""
    settings = settings or Settings()
    overrides = dict(overrides or {})
    # distinct output files per scenario
    for key in ("csv", "report", "pdf"):
        overrides.pop(key, None)
    workers = workers or settings.workers or None
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_run_file, str(p), overrides, settings.to_dict(), ledger) for p in paths]
        return [f.result() for f in futures]
