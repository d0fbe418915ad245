from __future__ import annotations

from typing import Any, Dict, List, Optional

from sqlmodel import select

from nonholo.data.db import PathLike, create_db_and_tables, get_session, session_scope
from nonholo.data.models import DriftRecord, RunRecord


def record_run(db_path: PathLike, summary: Any) -> RunRecord:
	"""Persist a finished run (a RunSummary) together with its drift rows."""
	if not getattr(summary, "scenario", None):
		raise ValueError("Run summary needs a scenario name")
	if getattr(summary, "seed", None) is None:
		raise ValueError("Run summary needs a seed")

	create_db_and_tables(db_path)
	with session_scope(db_path) as s:
		run = RunRecord(
			scenario=summary.scenario,
			model_id=summary.model_id,
			method=summary.method,
			h=float(summary.h),
			t_end=float(summary.t_end),
			seed=int(summary.seed),
			project=bool(summary.project),
			exit_code=int(summary.exit_code),
			records=int(summary.records),
			final_time=summary.final_time,
			error=summary.error,
			csv_path=summary.csv_path,
			report_path=summary.report_path,
		)
		s.add(run)
		# Ensure PK is populated before adding child rows
		s.flush()
		for d in summary.drift:
			s.add(DriftRecord(
				run_id=run.id,
				observable=d.observable,
				initial=d.initial,
				max_abs_drift=d.max_abs_drift,
				relative_drift=d.relative_drift,
				slope=d.slope,
				samples=d.samples,
				tolerance=d.tolerance,
			))
		s.flush()
		s.refresh(run)
		return run


def list_runs(db_path: PathLike, limit: Optional[int] = None) -> List[RunRecord]:
	"""Return recorded runs, newest first."""
	create_db_and_tables(db_path)
	with get_session(db_path) as s:
		stmt = select(RunRecord).order_by(RunRecord.created_at.desc(), RunRecord.id.desc())
		if isinstance(limit, int) and limit > 0:
			stmt = stmt.limit(limit)
		return list(s.exec(stmt).all())


def get_run(db_path: PathLike, run_id: int) -> Optional[Dict[str, Any]]:
	"""Fetch one run with its drift rows as plain dicts. None if not found."""
	create_db_and_tables(db_path)
	with get_session(db_path) as s:
		run = s.get(RunRecord, run_id)
		if not run:
			return None
		drifts = s.exec(select(DriftRecord).where(DriftRecord.run_id == run.id).order_by(DriftRecord.id.asc())).all()
		return {
			"run": {
				"id": run.id,
				"scenario": run.scenario,
				"model_id": run.model_id,
				"method": run.method,
				"h": run.h,
				"t_end": run.t_end,
				"seed": run.seed,
				"exit_code": run.exit_code,
				"records": run.records,
				"created_at": run.created_at,
				"error": run.error,
			},
			"drifts": [
				{
					"observable": d.observable,
					"initial": d.initial,
					"max_abs_drift": d.max_abs_drift,
					"relative_drift": d.relative_drift,
					"slope": d.slope,
					"samples": d.samples,
					"tolerance": d.tolerance,
				}
				for d in (drifts or [])
			],
		}
