"""Scenario configuration.

Scenarios are INI documents read with :mod:`configparser`. Keys in the
``[network]`` section map one-to-one onto :class:`NetworkConfig` fields and
keys in ``[simulation]`` onto :class:`SimulationConfig`. Unknown keys are an
error so that typos do not silently fall back to defaults.
"""
from __future__ import annotations

import configparser
import dataclasses
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional


class ConfigError(ValueError):
    """Raised for an invalid or unreadable scenario."""


@dataclass(frozen=True)
class NetworkConfig:
    n_macro: int = 7
    picos_per_macro: int = 2
    users_per_macro: int = 10
    inter_site_distance: float = 500.0
    M: int = 10
    # per-subband transmit powers (46 dBm / 30 dBm spread over 10 subbands)
    macro_power_dbm: float = 36.0
    pico_power_dbm: float = 20.0
    bias_db: float = 9.0
    noise_density_dbm_hz: float = -174.0
    bandwidth_hz: float = 10e6
    shadowing_std_db: float = 8.0
    edge_threshold_db: float = 6.0
    # optional relative cutoff: a non-serving link only becomes an edge when it
    # is within this many dB of the serving link's received power
    edge_sir_db: Optional[float] = 15.0
    superframe_len: int = 200
    seed: int = 0
    clustered_fraction: float = 2.0 / 3.0
    cluster_radius: float = 40.0
    min_distance: float = 10.0
    pico_min_macro_distance: float = 75.0
    # Poisson means; when set they replace the fixed per-macro counts
    picos_poisson_mean: Optional[float] = None
    users_poisson_mean: Optional[float] = None
    macro_pl_intercept: float = 128.1
    macro_pl_slope: float = 37.6
    pico_pl_intercept: float = 140.7
    pico_pl_slope: float = 36.7

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.n_macro < 1:
            raise ConfigError("n_macro must be >= 1")
        if self.picos_per_macro < 0 or self.users_per_macro < 0:
            raise ConfigError("per-macro counts must be nonnegative")
        if (self.picos_poisson_mean is None and self.picos_per_macro < 1) or (
            self.users_poisson_mean is None and self.users_per_macro < 1
        ):
            raise ConfigError("picos_per_macro and users_per_macro must be >= 1")
        if self.M < 2:
            raise ConfigError("M must be >= 2")
        if self.bias_db < 0:
            raise ConfigError("bias_db must be >= 0")
        if self.superframe_len < 1:
            raise ConfigError("superframe_len must be >= 1")
        for name in ("macro_power_dbm", "pico_power_dbm", "noise_density_dbm_hz",
                     "bandwidth_hz", "inter_site_distance"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")
        if self.bandwidth_hz <= 0 or self.inter_site_distance <= 0:
            raise ConfigError("bandwidth_hz and inter_site_distance must be positive")
        if not 0.0 <= self.clustered_fraction <= 1.0:
            raise ConfigError("clustered_fraction must lie in [0, 1]")

    @property
    def noise_dbm(self) -> float:
        """Noise power in one subband (equal subband widths)."""
        return self.noise_density_dbm_hz + 10.0 * math.log10(self.bandwidth_hz / self.M)

    @property
    def subband_hz(self) -> float:
        return self.bandwidth_hz / self.M

    def replace(self, **changes) -> "NetworkConfig":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class SimulationConfig:
    n_superframes: int = 50
    utility: str = "pf"
    alpha: float = 1.0
    profile_period: int = 10
    eps: float = 1e-6
    warmup_qa: float = 0.5
    baseline_blank_rate: float = 0.125
    ffr_outer_percentile: float = 0.3
    ffr_outer_fraction: float = 0.6
    pilot_len: Optional[int] = None
    workers: int = 1
    broadcast_delay: int = 0
    debug: bool = False

    def __post_init__(self):
        if self.n_superframes < 1:
            raise ConfigError("n_superframes must be >= 1")
        if self.utility not in ("pf", "alpha", "sum"):
            raise ConfigError(f"unknown utility {self.utility!r}")
        if self.profile_period < 1:
            raise ConfigError("profile_period must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.broadcast_delay < 0:
            raise ConfigError("broadcast_delay must be >= 0")


@dataclass(frozen=True)
class Scenario:
    network: NetworkConfig = field(default_factory=NetworkConfig)
    simulation: SimulationConfig = field(default_factory=SimulationConfig)


def _coerce(kind, raw: str):
    text = raw.strip()
    if text.lower() in ("none", ""):
        return None
    if "bool" in str(kind):
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(text)
    if "int" in str(kind) and "Optional" not in str(kind):
        return int(text)
    if "float" in str(kind):
        return float(text)
    if "int" in str(kind):
        return int(text)
    return text


def _section(parser, name, cls):
    if not parser.has_section(name):
        return cls()
    known = {f.name: f.type for f in fields(cls)}
    values = {}
    for key, raw in parser.items(name):
        if key not in known:
            raise ConfigError(f"unknown key {key!r} in [{name}]")
        try:
            values[key] = _coerce(known[key], raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {name}.{key}: {raw!r}") from exc
    return cls(**values)


def parse_scenario(text: str) -> Scenario:
    parser = configparser.ConfigParser()
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    for name in parser.sections():
        if name not in ("network", "simulation"):
            raise ConfigError(f"unknown section [{name}]")
    return Scenario(_section(parser, "network", NetworkConfig),
                    _section(parser, "simulation", SimulationConfig))


def load_scenario(path) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse_scenario(text)


def dump_scenario(scenario: Scenario) -> str:
    lines = []
    for name, obj in (("network", scenario.network), ("simulation", scenario.simulation)):
        lines.append(f"[{name}]")
        for f in fields(obj):
            lines.append(f"{f.name} = {getattr(obj, f.name)}")
        lines.append("")
    return "\n".join(lines)
