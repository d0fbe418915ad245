"""Scenario files: INI text validated section by section.

Arrays are comma lists, matrices are row-major with ';' between rows:

    [model]
    id = rolling-body
    inertia = 0.4, 0.5, 0.6          # three values mean a diagonal tensor
    semi_axes = 1.2, 1.0, 0.8

Unknown sections and keys are rejected with the offending line number.
"""
from __future__ import annotations

import configparser
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Type, Union

import numpy as np
from pydantic import BaseModel, Extra, ValidationError, validator

from nonholo.core.errors import ConfigError, UnknownModel
from nonholo.core.integrator import METHODS
from nonholo.core.settings import Settings
from nonholo.models.registry import Model, get_model_class

logger = logging.getLogger(__name__)

Numbers = Union[List[float], List[List[float]]]

_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([^=:#;\s][^=:]*?)\s*[=:]")


def _numbers(value):
    """'1, 2; 3, 4' -> [[1, 2], [3, 4]]; a single row stays flat."""
    if not isinstance(value, str):
        return value
    rows = [r for r in value.split(";") if r.strip()]
    parsed = [[float(x) for x in row.split(",") if x.strip()] for row in rows]
    if not parsed:
        return []
    return parsed[0] if len(parsed) == 1 else parsed


def _rows(value):
    parsed = _numbers(value)
    if parsed and not isinstance(parsed[0], list):
        return [parsed]
    return parsed


def _names(value):
    if isinstance(value, str):
        return [v.strip() for v in value.split(",") if v.strip()]
    return value


class _Section(BaseModel):
    class Config:
        extra = Extra.forbid
        anystr_strip_whitespace = True


# -- general sections -------------------------------------------------------------

class RunSection(_Section):
    name: Optional[str] = None
    seed: Optional[int] = None


class IntegratorSection(_Section):
    method: str = "rk4"
    h: Optional[float] = None
    t_end: Optional[float] = None
    rtol: float = 1e-9
    atol: float = 1e-12
    record_every: int = 1
    project: bool = True

    @validator("method")
    def _known_method(cls, v):
        if v not in METHODS:
            raise ValueError(f"must be one of {', '.join(METHODS)}")
        return v

    @validator("h", "t_end", "rtol", "atol")
    def _positive(cls, v):
        if v is not None and not v > 0.0:
            raise ValueError("must be positive")
        return v

    @validator("record_every")
    def _at_least_one(cls, v):
        if v < 1:
            raise ValueError("must be >= 1")
        return v


class ObservablesSection(_Section):
    names: List[str] = []

    _split = validator("names", pre=True, allow_reuse=True)(_names)


class DiagnosticsSection(_Section):
    drift: List[str] = []
    residuals: bool = True
    demo: bool = False
    conditions: bool = False
    checkpoints: int = 10
    tolerance: Optional[float] = None

    _split = validator("drift", pre=True, allow_reuse=True)(_names)

    @validator("checkpoints")
    def _at_least_one(cls, v):
        if v < 1:
            raise ValueError("must be >= 1")
        return v


class OutputSection(_Section):
    csv: Optional[str] = None
    report: Optional[str] = None
    pdf: Optional[str] = None


# -- model sections ---------------------------------------------------------------

def _positive(v):
    if not v > 0.0:
        raise ValueError("must be positive")
    return v


class Veselova3DSection(_Section):
    id: str
    inertia: Numbers = [1.0, 2.0, 3.0]
    axis: List[float] = [0.0, 0.0, 1.0]
    c: float = 0.0

    _parse = validator("inertia", "axis", pre=True, allow_reuse=True)(_numbers)


class LRSonSection(_Section):
    id: str
    n: int = 3
    inertia_j: Optional[Numbers] = None
    constraints: List[List[float]]
    zeta: Optional[List[float]] = None

    _parse = validator("inertia_j", "zeta", pre=True, allow_reuse=True)(_numbers)
    _parse_rows = validator("constraints", pre=True, allow_reuse=True)(_rows)

    @validator("n")
    def _dimension(cls, v):
        if v < 3:
            raise ValueError("must be >= 3")
        return v


class RollingBodySection(_Section):
    id: str
    mass: float = 1.0
    gravity: float = 9.81
    inertia: Numbers = [0.4, 0.4, 0.4]
    kappa: float = 0.0
    shape: str = "sphere"
    radius: float = 1.0
    semi_axes: Optional[List[float]] = None

    _parse = validator("inertia", "semi_axes", pre=True, allow_reuse=True)(_numbers)
    _check_positive = validator("mass", "radius", allow_reuse=True)(_positive)

    @validator("gravity")
    def _non_negative(cls, v):
        if v < 0.0:
            raise ValueError("must be non-negative")
        return v

    @validator("shape")
    def _known_shape(cls, v):
        v = v.lower()
        if v not in ("sphere", "ellipsoid"):
            raise ValueError("must be 'sphere' or 'ellipsoid'")
        return v

    @validator("semi_axes")
    def _three_positive(cls, v):
        if v is not None and (len(v) != 3 or min(v) <= 0.0):
            raise ValueError("needs three positive values")
        return v


class Chaplygin3DSection(RollingBodySection):
    @validator("shape")
    def _sphere_only(cls, v):
        if v != "sphere":
            raise ValueError("the Chaplygin ball is a sphere")
        return v


class ChapNDSection(_Section):
    id: str
    n: int = 3
    mass: float = 1.0
    radius: float = 1.0
    inertia_j: Optional[Numbers] = None
    eta: List[float] = []
    eta_planes: List[List[int]] = []

    _parse = validator("inertia_j", "eta", pre=True, allow_reuse=True)(_numbers)
    _check_positive = validator("mass", "radius", allow_reuse=True)(_positive)

    @validator("eta_planes", pre=True)
    def _pairs(cls, v):
        rows = _rows(v)
        return [[int(round(x)) for x in row] for row in rows]

    @validator("n")
    def _dimension(cls, v):
        if v < 3:
            raise ValueError("must be >= 3")
        return v

    @validator("eta_planes")
    def _pair_shape(cls, v):
        for pair in v:
            if len(pair) != 2:
                raise ValueError("each plane is a pair of indices")
        return v


# -- initial-state sections -------------------------------------------------------

def _identity_or_numbers(value):
    if isinstance(value, str) and value.strip().lower() == "identity":
        return None
    return _numbers(value)


class VeselovaInitial(_Section):
    gamma: List[float] = [0.0, 0.0, 1.0]
    omega: List[float] = [0.0, 0.0, 0.0]

    _parse = validator("gamma", "omega", pre=True, allow_reuse=True)(_numbers)


class LRSonInitial(_Section):
    g: Optional[Numbers] = None
    omega: Optional[List[float]] = None

    _parse_g = validator("g", pre=True, allow_reuse=True)(_identity_or_numbers)
    _parse = validator("omega", pre=True, allow_reuse=True)(_numbers)


class RollingInitial(_Section):
    gamma: List[float] = [0.0, 0.0, 1.0]
    x_body: Optional[List[float]] = None
    omega: List[float] = [0.0, 0.0, 0.0]

    _parse = validator("gamma", "x_body", "omega", pre=True, allow_reuse=True)(_numbers)


class ChapNDInitial(_Section):
    x: Optional[List[float]] = None
    g: Optional[Numbers] = None
    omega: Optional[List[float]] = None

    _parse_g = validator("g", pre=True, allow_reuse=True)(_identity_or_numbers)
    _parse = validator("x", "omega", pre=True, allow_reuse=True)(_numbers)


MODEL_SECTIONS: Dict[str, Tuple[Type[_Section], Type[_Section]]] = {
    "veselova-3d": (Veselova3DSection, VeselovaInitial),
    "lr-son": (LRSonSection, LRSonInitial),
    "rolling-body": (RollingBodySection, RollingInitial),
    "chaplygin-3d": (Chaplygin3DSection, RollingInitial),
    "chaplygin-nd": (ChapNDSection, ChapNDInitial),
    "chaplygin-nd-reduced": (ChapNDSection, ChapNDInitial),
}

GENERAL_SECTIONS: Dict[str, Type[_Section]] = {
    "run": RunSection,
    "integrator": IntegratorSection,
    "observables": ObservablesSection,
    "diagnostics": DiagnosticsSection,
    "output": OutputSection,
}

KNOWN_SECTIONS = ("run", "model", "initial", "integrator", "observables", "diagnostics", "output")


@dataclass
class Scenario:
    name: str
    model_id: str
    model: Model
    y0: np.ndarray
    seed: Optional[int]
    integrator: IntegratorSection
    observables: List[str]
    diagnostics: DiagnosticsSection
    output: OutputSection
    source: Optional[str] = None
    text: str = ""
    lines: Dict[Tuple[str, str], int] = field(default_factory=dict, repr=False)

    @property
    def recorded_observables(self) -> List[str]:
        """Scenario observables followed by drift-only ones, without duplicates."""
        names = list(self.observables)
        names += [d for d in self.diagnostics.drift if d not in names]
        return names

    def with_overrides(self, settings: Optional[Settings] = None, **changes) -> "Scenario":
        """Copy with command-line overrides applied; None values are ignored."""
        changes = {k: v for k, v in changes.items() if v is not None}
        integ = self.integrator.copy(update={k: changes[k] for k in ("h", "t_end", "method", "project") if k in changes})
        _validate_section(IntegratorSection, integ.dict(), "integrator", self.lines)
        output = self.output.copy(update={k: changes[k] for k in ("csv", "report", "pdf") if k in changes})
        scenario = Scenario(
            name=self.name,
            model_id=self.model_id,
            model=self.model,
            y0=self.y0,
            seed=changes.get("seed", self.seed),
            integrator=integ,
            observables=list(self.observables),
            diagnostics=self.diagnostics,
            output=output,
            source=self.source,
            text=self.text,
            lines=self.lines,
        )
        check_initial_state(scenario, (settings or Settings()).tol_constraint)
        return scenario


def _line_index(text: str) -> Dict[Tuple[str, str], int]:
    """(section, key) -> 1-based line; (section, '') holds the header line."""
    lines: Dict[Tuple[str, str], int] = {}
    section = ""
    for number, raw in enumerate(text.splitlines(), start=1):
        m = _SECTION_RE.match(raw)
        if m:
            section = m.group(1).strip()
            lines.setdefault((section, ""), number)
            continue
        m = _KEY_RE.match(raw)
        if m and section:
            lines.setdefault((section, m.group(1).strip()), number)
    return lines


def _validate_section(schema: Type[_Section], values: Dict[str, str], section: str, lines):
    try:
        return schema(**values)
    except ValidationError as e:
        err = e.errors()[0]
        key = str(err["loc"][0]) if err.get("loc") else ""
        line = lines.get((section, key)) or lines.get((section, ""))
        raise ConfigError(err["msg"], key=f"{section}.{key}" if key else section, line=line) from None


def check_initial_state(scenario: Scenario, tol: float) -> None:
    """Off-manifold initial data is only accepted when projection is enabled."""
    if scenario.integrator.project:
        return
    model = scenario.model
    monitored = set(model.monitored_residuals())
    bad = {k: v for k, v in model.residuals(scenario.y0).items() if k not in monitored and abs(v) > tol}
    if bad:
        detail = ", ".join(f"{k}={v:.3e}" for k, v in bad.items())
        raise ConfigError(
            f"initial state is off the invariant manifold ({detail}); enable projection",
            key="integrator.project",
            line=scenario.lines.get(("initial", "")),
        )


def parse_scenario(text: str, source: Optional[str] = None, settings: Optional[Settings] = None) -> Scenario:
    settings = settings or Settings()
    lines = _line_index(text)
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",), default_section="__defaults__")
    parser.optionxform = str
    try:
        parser.read_string(text, source=source or "<scenario>")
    except configparser.Error as e:
        raise ConfigError(str(e).splitlines()[0], line=getattr(e, "lineno", None)) from None

    for section in parser.sections():
        if section not in KNOWN_SECTIONS:
            raise ConfigError(f"unknown section [{section}]", key=section, line=lines.get((section, "")))
    if not parser.has_section("model") or not parser.has_option("model", "id"):
        raise ConfigError("missing model id", key="model.id", line=lines.get(("model", "")))

    model_values = dict(parser["model"])
    model_id = model_values["id"].strip()
    try:
        model_cls = get_model_class(model_id)
    except UnknownModel as e:
        raise ConfigError(str(e).split(": ", 1)[-1], key="model.id", line=lines.get(("model", "id"))) from None
    model_schema, initial_schema = MODEL_SECTIONS[model_id]
    model_cfg = _validate_section(model_schema, model_values, "model", lines)
    initial_values = dict(parser["initial"]) if parser.has_section("initial") else {}
    initial_cfg = _validate_section(initial_schema, initial_values, "initial", lines)

    general = {
        name: _validate_section(schema, dict(parser[name]) if parser.has_section(name) else {}, name, lines)
        for name, schema in GENERAL_SECTIONS.items()
    }

    try:
        model = model_cls.from_section(model_cfg)
    except ValueError as e:
        raise ConfigError(str(e), key="model", line=lines.get(("model", ""))) from None
    try:
        y0 = model.initial_state(initial_cfg)
    except ValueError as e:
        raise ConfigError(str(e), key="initial", line=lines.get(("initial", ""))) from None

    available = model.all_observables()
    observables = general["observables"].names or list(model.default_observables)
    for key, names in (("observables.names", observables), ("diagnostics.drift", general["diagnostics"].drift)):
        unknown = [n for n in names if n not in available]
        if unknown:
            section, option = key.split(".")
            raise ConfigError(
                f"unknown observable(s) {', '.join(unknown)} (known: {', '.join(sorted(available))})",
                key=key,
                line=lines.get((section, option)),
            )

    integ: IntegratorSection = general["integrator"]
    integ = integ.copy(update={
        "h": integ.h if integ.h is not None else settings.default_h,
        "t_end": integ.t_end if integ.t_end is not None else settings.default_t_end,
    })

    scenario = Scenario(
        name=general["run"].name or (Path(source).stem if source else "scenario"),
        model_id=model_id,
        model=model,
        y0=y0,
        seed=general["run"].seed,
        integrator=integ,
        observables=observables,
        diagnostics=general["diagnostics"],
        output=general["output"],
        source=source,
        text=text,
        lines=lines,
    )
    check_initial_state(scenario, settings.tol_constraint)
    logger.debug("parsed scenario %s (%s)", scenario.name, model_id)
    return scenario


def load_scenario(path: Union[str, Path], settings: Optional[Settings] = None) -> Scenario:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read scenario file {p}: {e.strerror or e}") from None
    return parse_scenario(text, source=str(p), settings=settings)
