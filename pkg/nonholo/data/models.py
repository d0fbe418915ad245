from __future__ import annotations

from datetime import datetime
from typing import List, Optional

from sqlmodel import Field, SQLModel, Relationship
from sqlalchemy.orm import relationship


class RunRecord(SQLModel, table=True):
	id: Optional[int] = Field(default=None, primary_key=True)
	scenario: str = Field(index=True)
	model_id: str = Field(index=True)
	method: str
	h: float
	t_end: float
	seed: int
	project: bool = True
	exit_code: int = 0
	records: int = 0
	final_time: Optional[float] = None
	error: Optional[str] = None
	csv_path: Optional[str] = None
	report_path: Optional[str] = None
	created_at: datetime = Field(default_factory=datetime.utcnow, index=True)

	drifts: List["DriftRecord"] = Relationship(
		sa_relationship=relationship("DriftRecord", back_populates="run", cascade="all, delete-orphan")
	)


class DriftRecord(SQLModel, table=True):
	id: Optional[int] = Field(default=None, primary_key=True)
	run_id: int = Field(foreign_key="runrecord.id", index=True)
	observable: str
	initial: float
	max_abs_drift: float
	relative_drift: float
	slope: float
	samples: int
	# None when the scenario set no tolerance
	tolerance: Optional[float] = None

	run: Optional["RunRecord"] = Relationship(sa_relationship=relationship("RunRecord", back_populates="drifts"))
