"""Scenario configuration: YAML sections mapped onto dataclasses.

Every section is optional and every key has a default, but unknown keys
are rejected so that a typo in a sweep definition fails loudly instead of
silently running the default.
"""

from dataclasses import dataclass, field, fields, asdict, is_dataclass
import hashlib
import json
import math

import yaml

from ..errors import ConfigError

__all__ = [
    "SystemConfig", "GeometryConfig", "PathLossConfig", "FadingConfig",
    "AoConfig", "SumrateConfig", "RankConfig", "PsoConfig", "AasrConfig",
    "ScenarioConfig", "dbm_to_watts", "load_config", "config_from_dict",
    "config_hash",
]


def dbm_to_watts(dbm):
    """``10^((dBm - 30) / 10)`` watts; 30 dBm is exactly 1 W."""
    return 10.0 ** ((float(dbm) - 30.0) / 10.0)


@dataclass
class SystemConfig:
    bs_antennas: int = 8
    irs_units: int = 2
    elements_per_unit: int = 16
    users: int = 3
    streams: int = 2
    power_dbm: float = 30.0
    noise_dbm: float = -90.0
    wavelength: float = 0.1

    def validate(self):
        for name in ("bs_antennas", "irs_units", "elements_per_unit", "users", "streams"):
            _positive_int(self, name)
        if self.streams > min(self.bs_antennas, self.users):
            raise ConfigError("system.streams must not exceed min(bs_antennas, users)")
        if not self.wavelength > 0:
            raise ConfigError("system.wavelength must be positive")


@dataclass
class GeometryConfig:
    user_center: list = field(default_factory=lambda: [40.0, 0.0])
    user_radius: float = 10.0
    # None places unit i (1-based) at (35, 5 i)
    irs_positions: list = None

    def validate(self):
        if len(self.user_center) != 2:
            raise ConfigError("geometry.user_center needs two coordinates")
        if not self.user_radius > 0:
            raise ConfigError("geometry.user_radius must be positive")
        if self.irs_positions is not None:
            if any(len(p) != 2 for p in self.irs_positions):
                raise ConfigError("geometry.irs_positions entries need two coordinates")


@dataclass
class PathLossConfig:
    c0_db: float = -30.0
    alpha_bs_irs: float = 2.2
    alpha_irs_user: float = 2.2
    alpha_bs_user: float = 3.5
    d0: float = 1.0

    def validate(self):
        if min(self.alpha_bs_irs, self.alpha_irs_user, self.alpha_bs_user, self.d0) <= 0:
            raise ConfigError("path-loss exponents and reference distance must be positive")


@dataclass
class FadingConfig:
    kappa: float = 0.5
    bs_irs_paths: int = 3
    rho_values: list = field(default_factory=lambda: [round(0.1 * i, 1) for i in range(11)])
    # normalised Doppler values f_d * tau; when given they replace rho_values
    normalized_doppler: list = None
    delay_slots: int = 1

    def validate(self):
        if not 0.0 <= self.kappa <= 1.0:
            raise ConfigError("fading.kappa must lie in [0, 1]")
        _positive_int(self, "bs_irs_paths")
        _positive_int(self, "delay_slots")
        if any(not 0.0 <= r <= 1.0 for r in self.rho_values):
            raise ConfigError("fading.rho_values must lie in [0, 1]")


@dataclass
class AoConfig:
    tol: float = 1e-6
    max_iters: int = 200

    def validate(self):
        if not self.tol > 0:
            raise ConfigError("ao.tol must be positive")
        _positive_int(self, "max_iters")


@dataclass
class SumrateConfig:
    elements: list = field(default_factory=lambda: [8, 16, 32])
    phase_bits: list = field(default_factory=lambda: [1, 2])
    direct_link: bool = True

    def validate(self):
        if not self.elements or any(not isinstance(n, int) or n < 1 for n in self.elements):
            raise ConfigError("sumrate.elements must be positive integers")
        if any(not isinstance(b, int) or b < 1 for b in self.phase_bits):
            raise ConfigError("sumrate.phase_bits must be positive integers")


@dataclass
class RankConfig:
    max_units: int = 3
    threshold: float = 1e-3

    def validate(self):
        _positive_int(self, "max_units")
        if not 0 < self.threshold < 1:
            raise ConfigError("rank.threshold must lie in (0, 1)")


@dataclass
class PsoConfig:
    swarm: int = 10
    inertia: float = 0.7
    c1: float = 1.5
    c2: float = 1.5
    iterations: int = 10
    batch_size: int = 4

    def validate(self):
        for name in ("swarm", "iterations", "batch_size"):
            _positive_int(self, name)
        if min(self.inertia, self.c1, self.c2) < 0:
            raise ConfigError("PSO coefficients must be non-negative")


@dataclass
class AasrConfig:
    elements: int = 8
    eval_samples: int = 20

    def validate(self):
        _positive_int(self, "elements")
        _positive_int(self, "eval_samples")


_SECTIONS = {
    "system": SystemConfig, "geometry": GeometryConfig, "pathloss": PathLossConfig,
    "fading": FadingConfig, "ao": AoConfig, "sumrate": SumrateConfig,
    "rank": RankConfig, "pso": PsoConfig, "aasr": AasrConfig,
}


@dataclass
class ScenarioConfig:
    seed: int = 0
    trials: int = 30
    system: SystemConfig = field(default_factory=SystemConfig)
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    pathloss: PathLossConfig = field(default_factory=PathLossConfig)
    fading: FadingConfig = field(default_factory=FadingConfig)
    ao: AoConfig = field(default_factory=AoConfig)
    sumrate: SumrateConfig = field(default_factory=SumrateConfig)
    rank: RankConfig = field(default_factory=RankConfig)
    pso: PsoConfig = field(default_factory=PsoConfig)
    aasr: AasrConfig = field(default_factory=AasrConfig)

    @property
    def p_max(self):
        return dbm_to_watts(self.system.power_dbm)

    @property
    def noise(self):
        return dbm_to_watts(self.system.noise_dbm)

    def validate(self):
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        _positive_int(self, "trials")
        for name in _SECTIONS:
            getattr(self, name).validate()
        return self

    def to_dict(self):
        return asdict(self)


def _positive_int(obj, name):
    value = getattr(obj, name)
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ConfigError(f"{name} must be a positive integer, got {value!r}")


def _coerce(cls, name, raw):
    # ints are accepted where floats are expected; nothing else is converted
    default = next(f for f in fields(cls) if f.name == name)
    if default.type is float and isinstance(raw, int) and not isinstance(raw, bool):
        return float(raw)
    if default.type is float and not isinstance(raw, float):
        raise ConfigError(f"{cls.__name__}.{name} must be a number, got {raw!r}")
    if default.type is float and not math.isfinite(raw):
        raise ConfigError(f"{cls.__name__}.{name} must be finite")
    return raw


def _build(cls, data, where):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"section {where!r} must be a mapping")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where!r}: {', '.join(map(str, unknown))}")
    return cls(**{k: _coerce(cls, k, v) for k, v in data.items()})


def config_from_dict(data):
    """Validated :class:`ScenarioConfig` from a nested mapping."""
    data = {} if data is None else data
    if not isinstance(data, dict):
        raise ConfigError("configuration root must be a mapping")
    known = {"seed", "trials"} | set(_SECTIONS)
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(map(str, unknown))}")
    kwargs = {name: _build(cls, data.get(name), name) for name, cls in _SECTIONS.items()}
    for key in ("seed", "trials"):
        if key in data:
            kwargs[key] = data[key]
    try:
        cfg = ScenarioConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.validate()


def load_config(path=None):
    """Read a YAML scenario file; ``None`` gives the defaults."""
    if path is None:
        return config_from_dict({})
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML in {path}: {exc}") from exc
    return config_from_dict(data)


def config_hash(cfg):
    """SHA-256 of the canonical JSON form of the configuration."""
    data = cfg.to_dict() if is_dataclass(cfg) else cfg
    blob = json.dumps(data, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()
