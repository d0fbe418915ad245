from __future__ import annotations

from typing import Any, Optional, Sequence

import numpy as np


EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _fmt_vec(q: Any) -> str:
	try:
		arr = np.asarray(q, dtype=float).ravel()
		return "[" + ", ".join(f"{v:.6g}" for v in arr) + "]"
	except Exception:
		return repr(q)


class NonholoError(Exception):
	"""Base class for every error raised by the engine."""

	exit_code: int = 1


class ConfigError(NonholoError, ValueError):
	"""Invalid scenario or settings input.

	`line` is the 1-based line in the scenario text when it is known.
	"""

	exit_code = EXIT_CONFIG

	def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None) -> None:
		self.key = key
		self.line = line
		prefix = ""
		if line is not None:
			prefix += f"line {line}: "
		if key:
			prefix += f"{key}: "
		super().__init__(prefix + message)


class UnknownModel(ConfigError):
	def __init__(self, model_id: str, known: Sequence[str]) -> None:
		super().__init__(f"unknown model '{model_id}' (known: {', '.join(known)})", key="model.id")
		self.model_id = model_id


class NumericalFailure(NonholoError, ArithmeticError):
	"""Non-finite values or a failed solve during evaluation or integration."""

	exit_code = EXIT_NUMERICAL

	def __init__(self, message: str, t: Optional[float] = None, stage: Optional[int] = None) -> None:
		self.t = t
		self.stage = stage
		where = []
		if t is not None:
			where.append(f"t={t:.17g}")
		if stage is not None:
			where.append(f"stage={stage}")
		suffix = f" ({', '.join(where)})" if where else ""
		super().__init__(message + suffix)


class ConstraintDegeneracy(NumericalFailure):
	def __init__(self, message: str, q: Any = None) -> None:
		self.q = None if q is None else np.array(q, dtype=float)
		if q is not None:
			message = f"{message} at q={_fmt_vec(q)}"
		super().__init__(message)


class MetricError(NumericalFailure):
	def __init__(self, message: str, q: Any = None) -> None:
		self.q = None if q is None else np.array(q, dtype=float)
		if q is not None:
			message = f"{message} at q={_fmt_vec(q)}"
		super().__init__(message)


class StiffnessError(NumericalFailure):
	pass


class ChartSingularity(NumericalFailure):
	def __init__(self, message: str, q: Any = None) -> None:
		self.q = None if q is None else np.array(q, dtype=float)
		if q is not None:
			message = f"{message} at q={_fmt_vec(q)}"
		super().__init__(message)


class OrientationError(NumericalFailure):
	pass


class InversionDegeneracy(NumericalFailure):
	pass


def exit_code_for(exc: BaseException) -> int:
	if isinstance(exc, NonholoError):
		return exc.exit_code
	return EXIT_NUMERICAL if isinstance(exc, (ArithmeticError, np.linalg.LinAlgError)) else 1
