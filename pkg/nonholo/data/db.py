from __future__ import annotations

from pathlib import Path
from typing import Dict, Generator, Union
from contextlib import contextmanager

from sqlmodel import SQLModel, Session, create_engine


# One engine per ledger file; a process may write several ledgers (tests, batch runs)
_ENGINES: Dict[str, object] = {}

PathLike = Union[str, Path]


def _key(db_path: PathLike) -> str:
	return Path(db_path).expanduser().resolve().as_posix()


def get_engine(db_path: PathLike, echo: bool = False):
	"""Return the cached SQLAlchemy engine for the SQLite ledger at db_path."""
	key = _key(db_path)
	engine = _ENGINES.get(key)
	if engine is None:
		# posix path for SQLAlchemy URL compatibility on Windows
		engine = create_engine(f"sqlite:///{key}", echo=echo, connect_args={"check_same_thread": False})
		_ENGINES[key] = engine
	return engine


def create_db_and_tables(db_path: PathLike, echo: bool = False) -> None:
	"""Create the SQLite ledger file and all SQLModel tables."""
	# Ensure models are imported so metadata has all tables
	import nonholo.data.models  # noqa: F401

	Path(db_path).expanduser().parent.mkdir(parents=True, exist_ok=True)
	SQLModel.metadata.create_all(get_engine(db_path, echo=echo))


def get_session(db_path: PathLike, echo: bool = False) -> Session:
	"""Create a new Session bound to the ledger engine.

	expire_on_commit=False so returned instances keep attribute values after commit.
	"""
	return Session(get_engine(db_path, echo=echo), expire_on_commit=False)


@contextmanager
def session_scope(db_path: PathLike, echo: bool = False) -> Generator[Session, None, None]:
	"""Transactional scope: commit on success, roll back on error.

	Usage:
		with session_scope(path) as s:
			... use s ...
	"""
	session = get_session(db_path, echo=echo)
	try:
		yield session
		session.commit()
	except Exception:
		session.rollback()
		raise
	finally:
		session.close()
