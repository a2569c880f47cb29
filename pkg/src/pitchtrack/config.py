"""
Run configuration: typed sections, TOML/JSON loading, ``section.key=value`` overrides.

Every section has embedded defaults for the reference vehicle and controller,
so an empty file is a valid configuration.
"""

from __future__ import annotations

import dataclasses
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .environment import DEFAULT_WIND_ALT_M, DEFAULT_WIND_MPS
from .inner import ActuatorEnvelope, InnerGains
from .vehicle import VehicleModel


class ConfigError(ValueError):
    """Invalid configuration; ``line`` points into the source file when known."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line else f"{path}: "
        super().__init__(where + message)


@dataclass(frozen=True)
class AeroConfig:
    table_path: str | None = None
    enabled: bool = True


@dataclass(frozen=True)
class WindConfig:
    profile_path: str | None = None
    profile_alt_m: tuple[float, ...] = DEFAULT_WIND_ALT_M
    profile_wind_mps: tuple[float, ...] = DEFAULT_WIND_MPS
    gusts_enabled: bool = True
    gust_length_m: float = 533.0
    gust_sigma_mps: float = 2.0
    gust_ceiling_m: float = 20000.0
    reference_airspeed_mps: float = 200.0
    constant_wind_i: tuple[float, float] | None = None


@dataclass(frozen=True)
class OuterConfig:
    Q_diag: tuple[float, float, float] = (5.0, 1.0, 1.0)
    R: float = 60.0
    filter_cutoff1_hz: float = 0.5
    filter_cutoff2_hz: float = 0.5
    sm_min: float = 1e-3
    gains: tuple[float, float, float] | None = None  # bypasses the LQR design when set


@dataclass(frozen=True)
class MissionConfig:
    scenario: str = "I"
    t_f: float = 103.0
    segments: tuple[dict, ...] = ()


@dataclass(frozen=True)
class SimSettings:
    dt: float = 1e-3
    controller_rate_hz: float = 500.0
    t_max: float = 110.0
    seed: int = 0
    singularity_margin_deg: float = 5.0
    max_downrange_error_m: float = 10000.0
    freeze_mass: bool = False
    record_physics: bool = False
    g0: float = 9.80665
    r_earth_m: float = 6371000.0

    @property
    def controller_substeps(self) -> int:
        return int(round(1.0 / (self.controller_rate_hz * self.dt)))


@dataclass(frozen=True)
class McConfig:
    n_runs: int = 100
    sigma3: dict = field(default_factory=lambda: {
        "m": 0.05, "j_y": 0.1, "x_cm": 0.1, "x_cp": 0.2, "cd": 0.2, "cl": 0.2})
    seed: int = 0
    workers: int = 1


@dataclass(frozen=True)
class SimConfig:
    vehicle: VehicleModel = field(default_factory=VehicleModel)
    aero: AeroConfig = field(default_factory=AeroConfig)
    wind: WindConfig = field(default_factory=WindConfig)
    inner: InnerGains = field(default_factory=InnerGains)
    outer: OuterConfig = field(default_factory=OuterConfig)
    mission: MissionConfig = field(default_factory=MissionConfig)
    sim: SimSettings = field(default_factory=SimSettings)
    envelope: ActuatorEnvelope = field(default_factory=ActuatorEnvelope)
    mc: McConfig = field(default_factory=McConfig)

    def __post_init__(self):
        validate(self)


SECTIONS = {
    "vehicle": VehicleModel,
    "aero": AeroConfig,
    "wind": WindConfig,
    "inner": InnerGains,
    "outer": OuterConfig,
    "mission": MissionConfig,
    "sim": SimSettings,
    "envelope": ActuatorEnvelope,
    "mc": McConfig,
}

# Engine and tank parameters live on VehicleModel but are written under their own section
PROPULSION_KEYS = (
    "propellant_mass_kg", "isp_vac_s", "ox_fuel_ratio", "lox_density_kgpm3", "rp1_density_kgpm3",
    "ox_tank_volume_m3", "fuel_tank_volume_m3", "nozzle_exit_area_m2",
)

_TUPLE_FIELDS = {"profile_alt_m", "profile_wind_mps", "constant_wind_i", "Q_diag", "gains", "segments"}


def validate(cfg: SimConfig) -> None:
    s = cfg.sim
    if not (s.dt > 0 and s.t_max > 0 and s.controller_rate_hz > 0):
        raise ConfigError("sim.dt, sim.t_max and sim.controller_rate_hz must be > 0")
    n = 1.0 / (s.controller_rate_hz * s.dt)
    if n < 1 - 1e-9 or abs(n - round(n)) > 1e-6:
        raise ConfigError("controller period must be an integer multiple of sim.dt")
    if not 0 <= s.singularity_margin_deg < 90:
        raise ConfigError("sim.singularity_margin_deg must lie in [0, 90)")
    o = cfg.outer
    if len(o.Q_diag) != 3 or any(not math.isfinite(q) or q < 0 for q in o.Q_diag):
        raise ConfigError("outer.Q_diag must hold three non-negative entries")
    if not o.R > 0:
        raise ConfigError("outer.R must be > 0")
    if o.gains is not None and len(o.gains) != 3:
        raise ConfigError("outer.gains must hold (k_z, k_zdot, k_i)")
    if o.filter_cutoff1_hz <= 0 or o.filter_cutoff2_hz <= 0:
        raise ConfigError("outer filter cutoffs must be > 0")
    if cfg.mission.scenario not in ("I", "II", "custom"):
        raise ConfigError(f"mission.scenario must be 'I', 'II' or 'custom', got {cfg.mission.scenario!r}")
    if cfg.mission.scenario in ("I", "II") and cfg.mission.t_f <= 60:
        raise ConfigError("mission.t_f must exceed 60 s for the built-in scenarios")
    if cfg.mission.scenario == "custom" and not cfg.mission.segments:
        raise ConfigError("custom mission needs at least one entry in mission.segments")
    mc = cfg.mc
    if mc.n_runs < 1 or mc.workers < 1:
        raise ConfigError("mc.n_runs and mc.workers must be >= 1")
    unknown = set(mc.sigma3) - {"m", "j_y", "x_cm", "x_cp", "cd", "cl"}
    if unknown:
        raise ConfigError(f"unknown mc.sigma3 parameters: {sorted(unknown)}")
    if any(v < 0 for v in mc.sigma3.values()):
        raise ConfigError("mc.sigma3 multipliers must be >= 0")


def _coerce(name, value):
    if isinstance(value, str) and value in ("inf", "-inf"):
        return float(value)
    if name in _TUPLE_FIELDS and value is not None:
        if name == "segments":
            return tuple(dict(v) for v in value)
        return tuple(value)
    return value


def _find_line(text: str | None, section: str, key: str | None) -> int | None:
    if text is None:
        return None
    lines = text.splitlines()
    in_section = False
    sec_line = None
    for i, line in enumerate(lines, start=1):
        s = line.strip()
        if s.startswith("["):
            in_section = s.strip("[] ") == section
            if in_section:
                sec_line = i
            continue
        if in_section and key is not None and re.match(rf"{re.escape(key)}\s*=", s):
            return i
    return sec_line


def from_dict(data: dict, path=None, text: str | None = None) -> SimConfig:
    """Build a :class:`SimConfig` from nested section dictionaries."""
    sections = {}
    data = dict(data)
    if "propulsion" in data:
        prop = data.pop("propulsion")
        if not isinstance(prop, dict):
            raise ConfigError("[propulsion] must be a table", path, _find_line(text, "propulsion", None))
        for key in prop:
            if key not in PROPULSION_KEYS:
                raise ConfigError(f"unknown key propulsion.{key}", path,
                                  _find_line(text, "propulsion", key))
        vehicle = dict(data.get("vehicle", {}))
        clash = set(vehicle) & set(prop)
        if clash:
            raise ConfigError(f"{sorted(clash)} given in both [vehicle] and [propulsion]", path,
                              _find_line(text, "propulsion", sorted(clash)[0]))
        data["vehicle"] = {**vehicle, **prop}
    for name, value in data.items():
        if name not in SECTIONS:
            raise ConfigError(f"unknown section [{name}]", path, _find_line(text, name, None))
        if not isinstance(value, dict):
            raise ConfigError(f"[{name}] must be a table", path, _find_line(text, name, None))
        cls = SECTIONS[name]
        known = {f.name for f in dataclasses.fields(cls)}
        for key in value:
            if key not in known:
                raise ConfigError(f"unknown key {name}.{key}", path, _find_line(text, name, key))
        kwargs = {k: _coerce(k, v) for k, v in value.items()}
        if name == "mc" and "sigma3" in kwargs:
            kwargs["sigma3"] = {**McConfig().sigma3, **kwargs["sigma3"]}
        try:
            sections[name] = cls(**kwargs)
        except (TypeError, ValueError) as exc:
            key = next((k for k in value if k in str(exc)), None)
            raise ConfigError(f"[{name}] {exc}", path, _find_line(text, name, key)) from exc
    try:
        return SimConfig(**sections)
    except ConfigError as exc:
        if exc.path is None and path is not None:
            m = re.match(r"(\w+)\.(\w+)", str(exc))
            line = _find_line(text, m.group(1), m.group(2)) if m else None
            raise ConfigError(str(exc), path, line) from exc
        raise


def parse_override(item: str) -> tuple[str, str, object]:
    """Parse ``section.key=value``; the value uses TOML syntax, bare words become strings."""
    if "=" not in item or "." not in item.split("=", 1)[0]:
        raise ConfigError(f"override {item!r} must look like section.key=value")
    lhs, rhs = item.split("=", 1)
    section, key = lhs.strip().split(".", 1)
    try:
        value = tomllib.loads(f"v = {rhs.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = rhs.strip()
    return section, key, value


def apply_overrides(data: dict, overrides) -> dict:
    out = {k: dict(v) for k, v in data.items()}
    for item in overrides or ():
        section, key, value = parse_override(item) if isinstance(item, str) else item
        out.setdefault(section, {})[key] = value
    return out


def read_config_data(path) -> tuple[dict, str]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", path) from exc
    try:
        if path.suffix == ".json":
            return json.loads(text), text
        return tomllib.loads(text), text
    except json.JSONDecodeError as exc:
        raise ConfigError(exc.msg, path, exc.lineno) from exc
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(str(exc), path, int(m.group(1)) if m else None) from exc


def load_config(path=None, overrides=()) -> SimConfig:
    data, text = ({}, None) if path is None else read_config_data(path)
    return from_dict(apply_overrides(data, overrides), path, text)


def to_dict(cfg: SimConfig) -> dict:
    """Fully resolved configuration as plain JSON-compatible data."""

    def clean(v):
        if isinstance(v, float) and not math.isfinite(v):
            return repr(v)
        if isinstance(v, (list, tuple)):
            return [clean(x) for x in v]
        if isinstance(v, dict):
            return {k: clean(x) for k, x in v.items()}
        return v

    out = {name: clean(dataclasses.asdict(getattr(cfg, name))) for name in SECTIONS}
    out["propulsion"] = {k: out["vehicle"].pop(k) for k in PROPULSION_KEYS}
    return out


def replace_section(cfg: SimConfig, section: str, **changes) -> SimConfig:
    return dataclasses.replace(cfg, **{section: dataclasses.replace(getattr(cfg, section), **changes)})
