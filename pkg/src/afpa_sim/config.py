"""Strict JSON run configuration.

The file declares its pressure/length units up front; pressures may be
given in Pa and are normalized to kPa on load.  Unknown keys anywhere
in the document are rejected so a typo cannot silently fall back to a
default calibration.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

from .planner import DEFAULT_PROBE_DEPTH_MM
from .pneumatics import ValveSpec
from .pouch import PouchStackSpec
from .rig import RigSpec
from .study import ResponderModel


class ConfigError(ValueError):
    """Malformed or invalid configuration; message carries the field path."""


@dataclass(frozen=True)
class SweepSettings:
    """Quasi-static characterization sweeps."""

    p2_levels: tuple[float, ...]  # kPa, one size curve per level
    p1_max: float  # kPa, sweep turnaround
    p1_step: float  # kPa
    compression_depth: float  # mm, probe travel for stiffness curves
    probe_rate: float  # mm/s
    sample_rate: float  # Hz


@dataclass(frozen=True)
class StepSettings:
    dt: float  # s
    t_end: float  # s
    step_time: float  # s, command switch instant


@dataclass(frozen=True)
class StudySettings:
    sizes: tuple[float, float, float]  # mm
    stiffnesses: tuple[float, float, float]  # N/mm
    reps: int
    sessions: int
    responder: ResponderModel


@dataclass(frozen=True)
class RunConfig:
    rig: RigSpec
    valves: tuple[ValveSpec, ValveSpec]  # (modulating, morphing)
    bounds: tuple[float, float, float, float]  # kPa pressure box
    probe_depth: float  # mm
    max_characterized_p2: float  # kPa
    sweep: SweepSettings
    step: StepSettings
    study: StudySettings


_PRESSURE_SCALE = {"kPa": 1.0, "Pa": 1e-3}


class _Section:
    """One JSON object with strict key checking and a running field path."""

    def __init__(self, data: Any, path: str):
        if not isinstance(data, dict):
            raise ConfigError(f"{path or '<root>'}: expected an object, got {type(data).__name__}")
        self.data = data
        self.path = path
        self.seen: set[str] = set()

    def _at(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def child(self, key: str) -> "_Section":
        return _Section(self.take(key), self._at(key))

    def take(self, key: str, default: Any = ...) -> Any:
        self.seen.add(key)
        if key not in self.data:
            if default is ...:
                raise ConfigError(f"missing required field {self._at(key)}")
            return default
        return self.data[key]

    def number(self, key: str, default: Any = ..., scale: float = 1.0) -> float:
        v = self.take(key, default)
        if v is default and default is not ...:
            return v
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{self._at(key)}: expected a number, got {v!r}")
        return float(v) * scale

    def integer(self, key: str, default: Any = ...) -> int:
        v = self.take(key, default)
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"{self._at(key)}: expected an integer, got {v!r}")
        return v

    def boolean(self, key: str, default: Any = ...) -> bool:
        v = self.take(key, default)
        if not isinstance(v, bool):
            raise ConfigError(f"{self._at(key)}: expected a boolean, got {v!r}")
        return v

    def numbers(self, key: str, scale: float = 1.0, length: int | None = None) -> tuple[float, ...]:
        v = self.take(key)
        if not isinstance(v, list) or any(
            isinstance(x, bool) or not isinstance(x, (int, float)) for x in v
        ):
            raise ConfigError(f"{self._at(key)}: expected an array of numbers, got {v!r}")
        if length is not None and len(v) != length:
            raise ConfigError(f"{self._at(key)}: expected {length} values, got {len(v)}")
        return tuple(float(x) * scale for x in v)

    def finish(self) -> None:
        unknown = sorted(set(self.data) - self.seen)
        if unknown:
            where = self.path or "<root>"
            raise ConfigError(f"unknown keys in {where}: {', '.join(unknown)}")


def _build(section: _Section, builder, path_hint: str):
    try:
        return builder()
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path_hint}: {exc}") from exc


def _parse_stack(sec: _Section) -> PouchStackSpec:
    spec = _build(sec, lambda: PouchStackSpec(
        flat_width=sec.number("flat_width"),
        flat_length=sec.number("flat_length"),
        pouch_count=sec.integer("pouch_count", 3),
        end_cap_correction=sec.boolean("end_cap_correction", True),
    ), sec.path)
    sec.finish()
    return spec


def _parse_valve(sec: _Section, p_scale: float) -> ValveSpec:
    spec = _build(sec, lambda: ValveSpec(
        sonic_conductance=sec.number("sonic_conductance"),
        critical_ratio=sec.number("critical_ratio", 0.3),
        supply_pressure=sec.number("supply_pressure", scale=p_scale),
        exhaust_pressure=sec.number("exhaust_pressure", scale=p_scale),
        command_lag=sec.number("command_lag", 0.05),
    ), sec.path)
    sec.finish()
    return spec


def _parse_responder(sec: _Section) -> ResponderModel:
    model = _build(sec, lambda: ResponderModel(
        size_noise=sec.number("size_noise"),
        stiffness_noise=sec.number("stiffness_noise"),
        lapse_rate=sec.number("lapse_rate", 0.0),
        base_time=sec.number("base_time", 2.0),
        time_per_confusability=sec.number("time_per_confusability", 2.0),
        time_noise=sec.number("time_noise", 0.1),
        lapse_drift=sec.number("lapse_drift", 0.0),
    ), sec.path)
    sec.finish()
    return model


def parse_config(doc: Any) -> RunConfig:
    """Validate a parsed JSON document into a RunConfig."""
    root = _Section(doc, "")

    units = root.child("units")
    p_unit = units.take("pressure")
    if p_unit not in _PRESSURE_SCALE:
        raise ConfigError(f"units.pressure: expected one of {sorted(_PRESSURE_SCALE)}, got {p_unit!r}")
    l_unit = units.take("length")
    if l_unit != "mm":
        raise ConfigError(f"units.length: only 'mm' is supported, got {l_unit!r}")
    units.finish()
    ps = _PRESSURE_SCALE[p_unit]

    rig_sec = root.child("rig")
    rig = _build(rig_sec, lambda: RigSpec(
        modulating=_parse_stack(rig_sec.child("modulating")),
        morphing=_parse_stack(rig_sec.child("morphing")),
        belt_span=rig_sec.number("belt_span"),
        belt_compliance=rig_sec.number("belt_compliance", 0.0),
        friction_force=rig_sec.number("friction_force", 0.0),
        deflated_floor=rig_sec.number("deflated_floor", 10.0),
    ), "rig")
    rig_sec.finish()

    valves_sec = root.child("valves")
    valves = (
        _parse_valve(valves_sec.child("modulating"), ps),
        _parse_valve(valves_sec.child("morphing"), ps),
    )
    valves_sec.finish()

    planner_sec = root.child("planner")
    bounds = planner_sec.numbers("bounds", scale=ps, length=4)
    probe_depth = planner_sec.number("probe_depth", DEFAULT_PROBE_DEPTH_MM)
    max_p2 = planner_sec.number("max_characterized_p2", scale=ps)
    planner_sec.finish()
    p1_lo, p1_hi, p2_lo, p2_hi = bounds
    if not (0.0 <= p1_lo < p1_hi and 0.0 <= p2_lo < p2_hi):
        raise ConfigError(f"planner.bounds: expected ordered (p1_lo, p1_hi, p2_lo, p2_hi), got {bounds}")
    if probe_depth <= 0:
        raise ConfigError("planner.probe_depth: must be positive")
    if not (p2_lo < max_p2 <= p2_hi):
        raise ConfigError("planner.max_characterized_p2: must lie inside the p2 bounds")

    sweep_sec = root.child("sweep")
    sweep = SweepSettings(
        p2_levels=sweep_sec.numbers("p2_levels", scale=ps),
        p1_max=sweep_sec.number("p1_max", scale=ps),
        p1_step=sweep_sec.number("p1_step", scale=ps),
        compression_depth=sweep_sec.number("compression_depth"),
        probe_rate=sweep_sec.number("probe_rate"),
        sample_rate=sweep_sec.number("sample_rate", 16.0),
    )
    sweep_sec.finish()
    if not sweep.p2_levels or any(p < 0 for p in sweep.p2_levels):
        raise ConfigError("sweep.p2_levels: need at least one non-negative level")
    if sweep.p1_step <= 0 or sweep.p1_max <= 0:
        raise ConfigError("sweep.p1_step and sweep.p1_max must be positive")
    if sweep.compression_depth <= 0 or sweep.probe_rate <= 0 or sweep.sample_rate <= 0:
        raise ConfigError("sweep probe settings must be positive")

    step_sec = root.child("step")
    step = StepSettings(
        dt=step_sec.number("dt", 1e-3),
        t_end=step_sec.number("t_end"),
        step_time=step_sec.number("step_time"),
    )
    step_sec.finish()
    if not (0.0 <= step.step_time < step.t_end):
        raise ConfigError("step.step_time must lie within [0, step.t_end)")

    study_sec = root.child("study")
    study = StudySettings(
        sizes=study_sec.numbers("sizes", length=3),
        stiffnesses=study_sec.numbers("stiffnesses", length=3),
        reps=study_sec.integer("reps", 10),
        sessions=study_sec.integer("sessions", 10),
        responder=_parse_responder(study_sec.child("responder")),
    )
    study_sec.finish()
    if study.reps < 1 or study.sessions < 1:
        raise ConfigError("study.reps and study.sessions must be >= 1")

    return RunConfig(
        rig=rig,
        valves=valves,
        bounds=(p1_lo, p1_hi, p2_lo, p2_hi),
        probe_depth=probe_depth,
        max_characterized_p2=max_p2,
        sweep=sweep,
        step=step,
        study=study,
    )


def load_config(path: str | Path) -> RunConfig:
    """Load and validate a JSON config file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    return parse_config(doc)


def canonical_form(config: RunConfig) -> dict:
    """Normalized (kPa/mm) dictionary rendering of a RunConfig."""
    def stack(s: PouchStackSpec) -> dict:
        return {
            "flat_width": s.flat_width,
            "flat_length": s.flat_length,
            "pouch_count": s.pouch_count,
            "end_cap_correction": s.end_cap_correction,
        }

    def valve(v: ValveSpec) -> dict:
        return {
            "sonic_conductance": v.sonic_conductance,
            "critical_ratio": v.critical_ratio,
            "supply_pressure": v.supply_pressure,
            "exhaust_pressure": v.exhaust_pressure,
            "command_lag": v.command_lag,
        }

    r = config.study.responder
    return {
        "units": {"pressure": "kPa", "length": "mm"},
        "rig": {
            "modulating": stack(config.rig.modulating),
            "morphing": stack(config.rig.morphing),
            "belt_span": config.rig.belt_span,
            "belt_compliance": config.rig.belt_compliance,
            "friction_force": config.rig.friction_force,
            "deflated_floor": config.rig.deflated_floor,
        },
        "valves": {
            "modulating": valve(config.valves[0]),
            "morphing": valve(config.valves[1]),
        },
        "planner": {
            "bounds": list(config.bounds),
            "probe_depth": config.probe_depth,
            "max_characterized_p2": config.max_characterized_p2,
        },
        "sweep": {
            "p2_levels": list(config.sweep.p2_levels),
            "p1_max": config.sweep.p1_max,
            "p1_step": config.sweep.p1_step,
            "compression_depth": config.sweep.compression_depth,
            "probe_rate": config.sweep.probe_rate,
            "sample_rate": config.sweep.sample_rate,
        },
        "step": {
            "dt": config.step.dt,
            "t_end": config.step.t_end,
            "step_time": config.step.step_time,
        },
        "study": {
            "sizes": list(config.study.sizes),
            "stiffnesses": list(config.study.stiffnesses),
            "reps": config.study.reps,
            "sessions": config.study.sessions,
            "responder": {
                "size_noise": r.size_noise,
                "stiffness_noise": r.stiffness_noise,
                "lapse_rate": r.lapse_rate,
                "base_time": r.base_time,
                "time_per_confusability": r.time_per_confusability,
                "time_noise": r.time_noise,
                "lapse_drift": r.lapse_drift,
            },
        },
    }


def default_config_path() -> Path:
    """Path of the packaged default (calibrated) configuration."""
    return Path(resources.files("afpa_sim").joinpath("data/default_config.json"))
