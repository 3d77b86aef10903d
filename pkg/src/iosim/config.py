"""Scenario configuration: counts, powers, leakage factors, and layout knobs.

A scenario is fully described by a :class:`ScenarioConfig`, which mirrors the
JSON document accepted by the CLI field for field (see
``docs/scenario_schema.json``).
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

REFLECT = "reflect"
REFRACT = "refract"


class ConfigError(ValueError):
    """Raised when a scenario configuration violates its invariants."""


@dataclass(frozen=True)
class ElementGainModel:
    """Radiation model of one surface element.

    The element amplitude is sqrt(G * F_in * F_out * S) where the normalized
    pattern is F(theta) = cos(theta)^q on the radiating half-space and 0
    behind it (q = 0 means isotropic, F = 1 everywhere).  The product G * S
    is clamped to 1 so amplitudes never exceed unity.
    """

    power_gain: float = 1.0
    area: float = 1.0
    pattern_exponent: float = 3.0

    def validate(self) -> None:
        if self.power_gain < 0:
            raise ConfigError("power_gain must be >= 0")
        if self.area < 0:
            raise ConfigError("area must be >= 0")
        if self.pattern_exponent < 0:
            raise ConfigError("pattern_exponent must be >= 0")

    @property
    def boresight_power(self) -> float:
        # clamped so the boresight-to-boresight amplitude is at most 1
        return min(self.power_gain * self.area, 1.0)


@dataclass(frozen=True)
class PathLossModel:
    """Distance power law PL(d) = c0 * (d / 1 m)^-alpha, c0 given in dB."""

    c0_db: float = -30.0
    alpha_bi: float = 2.2
    alpha_iu: float = 2.8
    alpha_bu: float = 3.5

    def gain(self, distance_m: float, alpha: float) -> float:
        d = max(float(distance_m), 1e-3)
        return 10.0 ** (self.c0_db / 10.0) * d ** (-alpha)


@dataclass(frozen=True)
class GeometryLayout:
    """Parameters of the default deterministic layout.

    The surface lies in the x-z plane through ``ios_center`` with its normal
    along +y (the reflection side).  Users sit on horizontal circles of
    radius ``user_radius`` centred at ``ios_center + (dx, +/-dy, dz)`` with
    ``(dx, dy, dz) = user_offset``; the reflect circle is on the +y side.

    With ``symmetric=True`` the two circles use mirrored slot angles so a
    user keeps the same distances to the BS and to every element when the
    side split changes; meaningful together with an on-plane BS and an
    isotropic element pattern.
    """

    bs_position: tuple[float, float, float] = (0.0, 6.0, 5.0)
    ios_center: tuple[float, float, float] = (30.0, 0.0, 5.0)
    element_spacing: float = 0.1
    user_offset: tuple[float, float, float] = (5.0, 5.0, -3.5)
    user_radius: float = 4.0
    symmetric: bool = False


@dataclass
class ScenarioConfig:
    """All scalars defining one simulated scenario."""

    n_t: int = 4
    m_elems: int = 4
    k_r: int = 2
    k_t: int = 2
    beta_bi: float = 0.1
    beta_iu: float = 0.1
    beta_bu: float = 0.1
    p_bs: float = 1.0
    sigma2: float = 1e-8
    n_bits: int = 2
    gain_model: ElementGainModel = field(default_factory=ElementGainModel)
    path_loss: PathLossModel = field(default_factory=PathLossModel)
    layout: GeometryLayout = field(default_factory=GeometryLayout)
    geometry: Optional["Geometry"] = None  # explicit override of the layout
    epsilon: float = 1.0
    power_domain_coupled_phases: bool = False
    seed: int = 0

    @property
    def n_users(self) -> int:
        return self.k_r + self.k_t

    def validate(self) -> None:
        if self.n_t < 1 or self.m_elems < 1:
            raise ConfigError("n_t and m_elems must be positive")
        if self.k_r < 0 or self.k_t < 0:
            raise ConfigError("user counts must be non-negative")
        total = self.k_r + self.k_t
        if total < 2 or total % 2 != 0:
            raise ConfigError("k_r + k_t must be even and >= 2")
        for name in ("beta_bi", "beta_iu", "beta_bu"):
            b = getattr(self, name)
            if not 0.0 <= b <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if self.p_bs <= 0:
            raise ConfigError("p_bs must be positive")
        if self.sigma2 <= 0:
            raise ConfigError("sigma2 must be positive")
        if self.n_bits < 1:
            raise ConfigError("n_bits must be >= 1")
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")
        self.gain_model.validate()

    def replace(self, **kwargs) -> "ScenarioConfig":
        return dataclasses.replace(self, **kwargs)


def _dict_to_dataclass(cls, data: dict, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"{path}: unknown fields {sorted(unknown)}")
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name not in data:
            continue
        value = data[f.name]
        if f.name in ("bs_position", "ios_center", "user_offset"):
            value = tuple(float(x) for x in value)
        kwargs[f.name] = value
    return cls(**kwargs)


def config_from_dict(data: dict) -> ScenarioConfig:
    """Build and validate a ScenarioConfig from a plain JSON-style dict."""
    if not isinstance(data, dict):
        raise ConfigError("config document must be a JSON object")
    data = dict(data)
    sub = {}
    if "gain_model" in data:
        sub["gain_model"] = _dict_to_dataclass(
            ElementGainModel, data.pop("gain_model"), "gain_model")
    if "path_loss" in data:
        sub["path_loss"] = _dict_to_dataclass(
            PathLossModel, data.pop("path_loss"), "path_loss")
    if "layout" in data:
        sub["layout"] = _dict_to_dataclass(
            GeometryLayout, data.pop("layout"), "layout")
    if "geometry" in data and data["geometry"] is not None:
        from .geometry import Geometry
        sub["geometry"] = Geometry.from_dict(data.pop("geometry"))
    else:
        data.pop("geometry", None)
    cfg = _dict_to_dataclass(ScenarioConfig, data, "config")
    cfg = dataclasses.replace(cfg, **sub)
    cfg.validate()
    return cfg


def load_config(path) -> ScenarioConfig:
    """Read a scenario from a JSON file; raises ConfigError on bad content."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    return config_from_dict(data)


def config_to_dict(cfg: ScenarioConfig) -> dict:
    """Inverse of config_from_dict (geometry serialized only if explicit)."""
    out = dataclasses.asdict(cfg)
    if cfg.geometry is None:
        out.pop("geometry")
    else:
        out["geometry"] = cfg.geometry.to_dict()
    return out
