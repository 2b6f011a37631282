"""JSON configuration: parsing, validation and serialisation.

Frequencies may be raw numbers (rad/s) or ``{"value": v, "unit": u}``
objects; times may be raw seconds or ``{"value": v, "unit": "ns"}``.
Serialisation always writes raw SI numbers, so a parse/serialise/parse
round trip is lossless.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from ..effective import VARIANTS, EffectiveParams
from ..errors import ConfigError
from ..propagator import IntegratorSpec
from ..pulses import AeParams, GaussianPairParams
from ..three_level import ThreeLevelParams
from ..two_level import TwoLevelParams

FREQUENCY_UNITS = {
    "rad/s": 1.0,
    "2pi*Hz": 2 * math.pi,
    "2pi*kHz": 2 * math.pi * 1e3,
    "2pi*MHz": 2 * math.pi * 1e6,
    "2pi*GHz": 2 * math.pi * 1e9,
    "krad/s": 1e3,
    "Mrad/s": 1e6,
    "Grad/s": 1e9,
}
TIME_UNITS = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9, "ps": 1e-12}

SYSTEMS = ("TwoLevel", "ThreeLevel", "EffectiveTwoLevel")
CD_NAMES = {
    "None": "none",
    "RWA": "rwa",
    "BeyondRWA": "beyond_rwa",
    "ProjectorFormula": "projector",
    "ClosedForm": "closed_form",
    "EffectiveCD": "effective",
}
CD_BY_SYSTEM = {
    "TwoLevel": ("None", "RWA", "BeyondRWA"),
    "ThreeLevel": ("None", "RWA", "ProjectorFormula", "ClosedForm"),
    "EffectiveTwoLevel": ("None", "EffectiveCD"),
}
METHOD_NAMES = {"RK4Fixed": "rk4", "RK4Adaptive": "rk4_adaptive"}
DIMENSION = {"TwoLevel": 2, "ThreeLevel": 3, "EffectiveTwoLevel": 2}
DEFAULT_TARGET = {"TwoLevel": 2, "ThreeLevel": 3, "EffectiveTwoLevel": 2}
SCAN_AXES = ("omega0", "gamma", "delta")


def _quantity(raw: Any, field_name: str, units: dict[str, float], kind: str) -> float:
    if isinstance(raw, bool):
        raise ConfigError(field_name, f"expected a {kind}, got a boolean")
    if isinstance(raw, (int, float)):
        value = float(raw)
    elif isinstance(raw, dict):
        if "value" not in raw:
            raise ConfigError(field_name, "unit object needs a 'value'")
        unit = raw.get("unit", next(iter(units)))
        if unit not in units:
            raise ConfigError(field_name, f"unknown {kind} unit {unit!r}; expected one of {sorted(units)}")
        value = _quantity(raw["value"], field_name, units, kind) * units[unit]
    else:
        raise ConfigError(field_name, f"expected a number or a {{value, unit}} object, got {type(raw).__name__}")
    if not math.isfinite(value):
        raise ConfigError(field_name, "must be finite")
    return value


def frequency(raw: Any, field_name: str) -> float:
    return _quantity(raw, field_name, FREQUENCY_UNITS, "frequency")


def duration(raw: Any, field_name: str) -> float:
    return _quantity(raw, field_name, TIME_UNITS, "time")


def _require(d: dict, key: str, prefix: str):
    if not isinstance(d, dict):
        raise ConfigError(prefix or "config", "expected an object")
    if key not in d:
        raise ConfigError(f"{prefix}.{key}" if prefix else key, "missing required field")
    return d[key]


def _bool(d: dict, key: str, prefix: str, default: bool) -> bool:
    value = d.get(key, default)
    if not isinstance(value, bool):
        raise ConfigError(f"{prefix}.{key}", "expected true or false")
    return value


def _wrap(field_name: str, fn, *args):
    """Re-raise a params constructor error with the full field path."""
    try:
        return fn(*args)
    except ConfigError as exc:
        raise ConfigError(f"{field_name}.{exc.field}", str(exc).split(": ", 1)[-1]) from None


@dataclass(frozen=True)
class SystemConfig:
    system: str
    params: TwoLevelParams | ThreeLevelParams | EffectiveParams
    cd: str = "None"
    imag_only: bool = False
    dress_cd: bool = False
    integrator: IntegratorSpec = field(default_factory=IntegratorSpec)
    initial_state: int = 1
    target: int | None = None
    outputs: dict[str, str] = field(default_factory=dict)
    name: str | None = None

    def __post_init__(self):
        if self.system not in SYSTEMS:
            raise ConfigError("system", f"expected one of {SYSTEMS}")
        if self.cd not in CD_BY_SYSTEM[self.system]:
            raise ConfigError("cd", f"{self.cd!r} is not valid for {self.system}; expected one of {CD_BY_SYSTEM[self.system]}")
        dim = DIMENSION[self.system]
        if not 1 <= self.initial_state <= dim:
            raise ConfigError("initialState", f"level must be in 1..{dim}")
        if self.target is not None and not 1 <= self.target <= dim:
            raise ConfigError("target", f"level must be in 1..{dim}")
        if self.imag_only and not (self.system == "TwoLevel" and self.cd == "RWA"):
            raise ConfigError("imagOnly", "only applies to the two-level RWA auxiliary field")
        if self.dress_cd and self.cd != "RWA":
            raise ConfigError("dressCd", "only applies to the RWA auxiliary field")

    @property
    def dim(self) -> int:
        return DIMENSION[self.system]

    @property
    def target_level(self) -> int:
        return self.target if self.target is not None else DEFAULT_TARGET[self.system]

    @property
    def tf(self) -> float:
        p = self.params
        if isinstance(p, TwoLevelParams):
            return p.ae.tf
        if isinstance(p, EffectiveParams):
            return p.base.pulses.tf
        return p.pulses.tf

    @property
    def cd_key(self) -> str:
        return CD_NAMES[self.cd]


def _parse_two_level(d: dict, prefix: str) -> TwoLevelParams:
    ae = _require(d, "ae", prefix)
    ae_params = _wrap(
        f"{prefix}.ae",
        AeParams,
        frequency(_require(ae, "omega0", f"{prefix}.ae"), f"{prefix}.ae.omega0"),
        frequency(_require(ae, "delta", f"{prefix}.ae"), f"{prefix}.ae.delta"),
        duration(_require(ae, "t0", f"{prefix}.ae"), f"{prefix}.ae.t0"),
        duration(_require(ae, "tf", f"{prefix}.ae"), f"{prefix}.ae.tf"),
    )
    return _wrap(
        prefix,
        TwoLevelParams,
        frequency(d.get("gamma", 0.0), f"{prefix}.gamma"),
        frequency(d.get("omegaL", 0.0), f"{prefix}.omegaL"),
        ae_params,
        _bool(d, "counterRotating", prefix, True),
    )


def _parse_three_level(d: dict, prefix: str) -> ThreeLevelParams:
    pulses = _require(d, "pulses", prefix)
    pp = f"{prefix}.pulses"
    pulse_params = _wrap(
        pp,
        GaussianPairParams,
        frequency(_require(pulses, "omega0", pp), f"{pp}.omega0"),
        duration(_require(pulses, "tau", pp), f"{pp}.tau"),
        duration(_require(pulses, "T", pp), f"{pp}.T"),
        duration(_require(pulses, "tf", pp), f"{pp}.tf"),
    )
    delta_p = frequency(_require(d, "deltaP", prefix), f"{prefix}.deltaP")
    delta_s = frequency(d.get("deltaS", delta_p), f"{prefix}.deltaS")
    return _wrap(
        prefix,
        ThreeLevelParams,
        frequency(d.get("gamma", 0.0), f"{prefix}.gamma"),
        delta_p,
        delta_s,
        frequency(d.get("omegaP", 0.0), f"{prefix}.omegaP"),
        frequency(d.get("omegaS", 0.0), f"{prefix}.omegaS"),
        pulse_params,
        _bool(d, "counterRotating", prefix, True),
    )


def _parse_integrator(d: dict | None) -> IntegratorSpec:
    d = d or {}
    if not isinstance(d, dict):
        raise ConfigError("integrator", "expected an object")
    method = d.get("method", "RK4Fixed")
    if method not in METHOD_NAMES:
        raise ConfigError("integrator.method", f"expected one of {sorted(METHOD_NAMES)}")
    dt = d.get("dt")
    res = d.get("carrierResolution", 200)
    if not isinstance(res, int) or isinstance(res, bool):
        raise ConfigError("integrator.carrierResolution", "expected an integer")
    store = d.get("storePoints", 1000)
    if store is not None and (not isinstance(store, int) or isinstance(store, bool) or store < 1):
        raise ConfigError("integrator.storePoints", "expected a positive integer or null")
    return IntegratorSpec(
        method=METHOD_NAMES[method],
        dt=None if dt is None else duration(dt, "integrator.dt"),
        carrier_resolution=res,
        tol=float(d.get("tol", 1e-10)),
        store_points=store,
    )


def _level(d: dict, key: str, default):
    value = d.get(key, default)
    if value is not None and (not isinstance(value, int) or isinstance(value, bool)):
        raise ConfigError(key, "expected an integer level number")
    return value


def parse_config(d: dict) -> SystemConfig:
    """Build a validated :class:`SystemConfig` from a decoded JSON document."""
    if not isinstance(d, dict):
        raise ConfigError("config", "expected a JSON object")
    system = _require(d, "system", "")
    if system not in SYSTEMS:
        raise ConfigError("system", f"expected one of {SYSTEMS}, got {system!r}")
    cd = d.get("cd", "None")
    if cd not in CD_NAMES:
        raise ConfigError("cd", f"expected one of {sorted(CD_NAMES)}, got {cd!r}")
    if cd not in CD_BY_SYSTEM[system]:
        raise ConfigError("cd", f"{cd!r} is not valid for {system}; expected one of {CD_BY_SYSTEM[system]}")
    raw = _require(d, "params", "")
    if system == "TwoLevel":
        params = _parse_two_level(raw, "params")
    elif system == "ThreeLevel":
        params = _parse_three_level(raw, "params")
    else:
        variant = raw.get("variant", "standard") if isinstance(raw, dict) else None
        if variant not in VARIANTS:
            raise ConfigError("params.variant", f"expected one of {VARIANTS}")
        params = EffectiveParams(_parse_three_level(raw, "params"), variant)
    outputs = d.get("outputs", {}) or {}
    if not isinstance(outputs, dict) or not all(isinstance(v, str) for v in outputs.values()):
        raise ConfigError("outputs", "expected an object of path strings")
    name = d.get("name")
    return SystemConfig(
        system=system,
        params=params,
        cd=cd,
        imag_only=_bool(d, "imagOnly", "", False),
        dress_cd=_bool(d, "dressCd", "", False),
        integrator=_parse_integrator(d.get("integrator")),
        initial_state=_level(d, "initialState", 1),
        target=_level(d, "target", None),
        outputs=dict(outputs),
        name=name,
    )


def _three_level_dict(p: ThreeLevelParams) -> dict:
    return {
        "gamma": p.gamma,
        "deltaP": p.deltaP,
        "deltaS": p.deltaS,
        "omegaP": p.omegaP,
        "omegaS": p.omegaS,
        "pulses": {"omega0": p.pulses.omega0, "tau": p.pulses.tau, "T": p.pulses.T, "tf": p.pulses.tf},
        "counterRotating": p.counter_rotating,
    }


def config_to_dict(cfg: SystemConfig) -> dict:
    p = cfg.params
    if isinstance(p, TwoLevelParams):
        params = {
            "gamma": p.gamma,
            "omegaL": p.omegaL,
            "ae": {"omega0": p.ae.omega0, "delta": p.ae.delta, "t0": p.ae.t0, "tf": p.ae.tf},
            "counterRotating": p.counter_rotating,
        }
    elif isinstance(p, EffectiveParams):
        params = _three_level_dict(p.base) | {"variant": p.variant}
    else:
        params = _three_level_dict(p)
    spec = cfg.integrator
    method = {v: k for k, v in METHOD_NAMES.items()}[spec.method]
    out = {
        "system": cfg.system,
        "params": params,
        "cd": cfg.cd,
        "imagOnly": cfg.imag_only,
        "dressCd": cfg.dress_cd,
        "integrator": {
            "method": method,
            "dt": spec.dt,
            "carrierResolution": spec.carrier_resolution,
            "tol": spec.tol,
            "storePoints": spec.store_points,
        },
        "initialState": cfg.initial_state,
        "target": cfg.target,
        "outputs": dict(cfg.outputs),
    }
    if cfg.name is not None:
        out["name"] = cfg.name
    return out


@dataclass(frozen=True)
class ScanAxis:
    name: str
    min: float
    max: float
    count: int

    def __post_init__(self):
        if self.name not in SCAN_AXES:
            raise ConfigError("axis.name", f"expected one of {SCAN_AXES}")
        if self.count < 2:
            raise ConfigError(f"{self.name}.count", "need at least 2 points per axis")

    def values(self) -> list[float]:
        step = (self.max - self.min) / (self.count - 1)
        return [self.min + i * step for i in range(self.count)]


@dataclass(frozen=True)
class ScanSpec:
    axis1: ScanAxis
    axis2: ScanAxis
    base: SystemConfig
    target: int | None = None
    outputs: dict[str, str] = field(default_factory=dict)
    name: str | None = None

    def __post_init__(self):
        if self.axis1.name == self.axis2.name:
            raise ConfigError("axis2.name", "the two scan axes must differ")

    @property
    def target_level(self) -> int:
        return self.target if self.target is not None else self.base.target_level


def _parse_axis(d: dict, key: str) -> ScanAxis:
    raw = _require(d, key, "")
    name = _require(raw, "name", key)
    count = _require(raw, "count", key)
    if not isinstance(count, int) or isinstance(count, bool):
        raise ConfigError(f"{key}.count", "expected an integer")
    try:
        return ScanAxis(
            name,
            frequency(_require(raw, "min", key), f"{key}.min"),
            frequency(_require(raw, "max", key), f"{key}.max"),
            count,
        )
    except ConfigError as exc:
        if exc.field.startswith(key):
            raise
        raise ConfigError(f"{key}.{exc.field.split('.')[-1]}", str(exc).split(": ", 1)[-1]) from None


def parse_scan(d: dict) -> ScanSpec:
    if not isinstance(d, dict):
        raise ConfigError("config", "expected a JSON object")
    try:
        base = parse_config(_require(d, "base", ""))
    except ConfigError as exc:
        raise ConfigError(f"base.{exc.field}", str(exc).split(": ", 1)[-1]) from None
    outputs = d.get("outputs", {}) or {}
    if not isinstance(outputs, dict):
        raise ConfigError("outputs", "expected an object of path strings")
    return ScanSpec(
        axis1=_parse_axis(d, "axis1"),
        axis2=_parse_axis(d, "axis2"),
        base=base,
        target=_level(d, "target", None),
        outputs=dict(outputs),
        name=d.get("name"),
    )


def scan_to_dict(spec: ScanSpec) -> dict:
    def axis(a: ScanAxis) -> dict:
        return {"name": a.name, "min": a.min, "max": a.max, "count": a.count}

    out = {
        "axis1": axis(spec.axis1),
        "axis2": axis(spec.axis2),
        "base": config_to_dict(spec.base),
        "target": spec.target,
        "outputs": dict(spec.outputs),
    }
    if spec.name is not None:
        out["name"] = spec.name
    return out


def with_axis_value(cfg: SystemConfig, name: str, value: float) -> SystemConfig:
    """Copy of ``cfg`` with one scan parameter replaced."""
    p = cfg.params
    if isinstance(p, TwoLevelParams):
        if name == "omega0":
            p = replace(p, ae=replace(p.ae, omega0=value))
        elif name == "gamma":
            p = replace(p, gamma=value)
        else:
            p = replace(p, ae=replace(p.ae, delta=value))
        return replace(cfg, params=p)
    base = p.base if isinstance(p, EffectiveParams) else p
    if name == "omega0":
        base = replace(base, pulses=replace(base.pulses, omega0=value))
    elif name == "gamma":
        base = replace(base, gamma=value)
    else:
        base = replace(base, deltaP=value, deltaS=value)
    p = replace(p, base=base) if isinstance(p, EffectiveParams) else base
    return replace(cfg, params=p)


def load_json(path: str | Path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON: {exc}") from None
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
