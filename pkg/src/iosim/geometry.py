"""Scenario geometry and the angle-dependent element amplitude model.

The surface plane carries a unit normal pointing into the reflection
half-space; users are labelled by the half-space they occupy and reflect
users always come first in every per-user array.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import (
    REFLECT,
    REFRACT,
    ConfigError,
    ElementGainModel,
    ScenarioConfig,
)

_PLANE_TOL = 1e-9


@dataclass
class Geometry:
    """Positions of the BS, the surface elements, and the users (meters)."""

    bs_position: np.ndarray          # (3,)
    ios_center: np.ndarray           # (3,)
    ios_normal: np.ndarray           # (3,), unit, points into the reflect side
    element_positions: np.ndarray    # (M, 3), on the surface plane
    user_positions: np.ndarray       # (2K, 3)
    side_label: list[str]            # 'reflect' / 'refract', reflect first

    def __post_init__(self):
        self.bs_position = np.asarray(self.bs_position, dtype=float)
        self.ios_center = np.asarray(self.ios_center, dtype=float)
        self.ios_normal = np.asarray(self.ios_normal, dtype=float)
        self.element_positions = np.atleast_2d(
            np.asarray(self.element_positions, dtype=float))
        self.user_positions = np.atleast_2d(
            np.asarray(self.user_positions, dtype=float))
        self.side_label = list(self.side_label)

    @property
    def n_elements(self) -> int:
        return self.element_positions.shape[0]

    @property
    def n_users(self) -> int:
        return self.user_positions.shape[0]

    def signed_offset(self, point) -> float:
        """Signed distance from the surface plane, positive on reflect side."""
        return float(np.dot(np.asarray(point, dtype=float) - self.ios_center,
                            self.ios_normal))

    def validate(self) -> None:
        if abs(np.linalg.norm(self.ios_normal) - 1.0) > 1e-9:
            raise ConfigError("ios_normal must be a unit vector")
        if self.n_users != len(self.side_label):
            raise ConfigError("side_label length must match user count")
        bad = [s for s in self.side_label if s not in (REFLECT, REFRACT)]
        if bad:
            raise ConfigError(f"unknown side labels: {bad}")
        first_refract = next(
            (i for i, s in enumerate(self.side_label) if s == REFRACT),
            self.n_users)
        if any(s == REFLECT for s in self.side_label[first_refract:]):
            raise ConfigError("users must be ordered reflect first")
        for m in range(self.n_elements):
            if abs(self.signed_offset(self.element_positions[m])) > _PLANE_TOL:
                raise ConfigError(f"element {m} is off the surface plane")
        for k in range(self.n_users):
            off = self.signed_offset(self.user_positions[k])
            if self.side_label[k] == REFLECT and off <= 0:
                raise ConfigError(f"reflect user {k} not in reflection half-space")
            if self.side_label[k] == REFRACT and off >= 0:
                raise ConfigError(f"refract user {k} not in refraction half-space")

    def users_on(self, side: str) -> np.ndarray:
        return np.array([i for i, s in enumerate(self.side_label) if s == side],
                        dtype=int)

    def to_dict(self) -> dict:
        return {
            "bs_position": self.bs_position.tolist(),
            "ios_center": self.ios_center.tolist(),
            "ios_normal": self.ios_normal.tolist(),
            "element_positions": self.element_positions.tolist(),
            "user_positions": self.user_positions.tolist(),
            "side_label": list(self.side_label),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Geometry":
        try:
            geom = cls(
                bs_position=data["bs_position"],
                ios_center=data["ios_center"],
                ios_normal=data["ios_normal"],
                element_positions=data["element_positions"],
                user_positions=data["user_positions"],
                side_label=data["side_label"],
            )
        except KeyError as exc:
            raise ConfigError(f"geometry document missing field {exc}") from exc
        geom.validate()
        return geom


def _element_grid(center, spacing, count):
    """Square-ish grid in the x-z plane, row-major, centred on `center`."""
    cols = int(np.ceil(np.sqrt(count)))
    rows = int(np.ceil(count / cols))
    pos = np.zeros((count, 3))
    m = 0
    for i in range(rows):
        for j in range(cols):
            if m >= count:
                break
            pos[m] = center + np.array(
                [(j - (cols - 1) / 2.0) * spacing,
                 0.0,
                 (i - (rows - 1) / 2.0) * spacing])
            m += 1
    return pos


def build_geometry(config: ScenarioConfig) -> Geometry:
    """Deterministic default layout for a scenario.

    Reflect users share the half-space of the BS; refract users sit in the
    opposite one.  In symmetric mode user j keeps its slot angle when the
    side split changes, so re-labelling the split moves users to mirror
    positions with identical distances.
    """
    config.validate()
    lay = config.layout
    center = np.asarray(lay.ios_center, dtype=float)
    normal = np.array([0.0, 1.0, 0.0])
    elements = _element_grid(center, lay.element_spacing, config.m_elems)

    dx, dy, dz = lay.user_offset
    centers = {
        REFLECT: center + np.array([dx, abs(dy), dz]),
        REFRACT: center + np.array([dx, -abs(dy), dz]),
    }
    two_k = config.n_users
    half = two_k // 2
    positions = np.zeros((two_k, 3))
    labels = [REFLECT] * config.k_r + [REFRACT] * config.k_t
    for j, side in enumerate(labels):
        if lay.symmetric:
            angle = 2.0 * np.pi * (j % half) / half
        else:
            angle = 2.0 * np.pi * j / two_k
        c = centers[side]
        # horizontal circle; radius must stay below |dy| to keep users
        # strictly inside their half-space
        r = lay.user_radius
        if r >= abs(dy):
            raise ConfigError("user_radius must be smaller than the circle "
                              "centre offset from the surface plane")
        positions[j] = c + np.array([r * np.cos(angle), r * np.sin(angle), 0.0])

    geom = Geometry(
        bs_position=np.asarray(lay.bs_position, dtype=float),
        ios_center=center,
        ios_normal=normal,
        element_positions=elements,
        user_positions=positions,
        side_label=labels,
    )
    geom.validate()
    return geom


def ensure_geometry(config: ScenarioConfig) -> Geometry:
    """Explicit geometry if the config carries one, else the default layout."""
    if config.geometry is not None:
        config.geometry.validate()
        return config.geometry
    return build_geometry(config)


def _pattern(cos_theta: float, q: float) -> float:
    if q == 0:
        return 1.0
    return max(cos_theta, 0.0) ** q


def element_amplitude(geometry: Geometry, gain: ElementGainModel, m: int,
                      tx_point, rx_point, mode: str | None = None) -> float:
    """Amplitude sqrt(G * F_in * F_out * S) of element m for one tx/rx pair.

    The phase factor is applied separately by the surface state.  `mode`
    forces reflect or refract; by default it is inferred from the rx
    half-space.  Querying a mode whose half-space does not contain rx gives
    amplitude 0 when the pattern is directional (q > 0).
    """
    q = gain.pattern_exponent
    pos = geometry.element_positions[m]
    n = geometry.ios_normal

    v_in = np.asarray(tx_point, dtype=float) - pos
    d_in = np.linalg.norm(v_in)
    cos_in = float(np.dot(v_in, n) / d_in) if d_in > 0 else 1.0

    v_out = np.asarray(rx_point, dtype=float) - pos
    d_out = np.linalg.norm(v_out)
    cos_out = float(np.dot(v_out, n) / d_out) if d_out > 0 else 1.0

    rx_side = REFLECT if cos_out >= 0 else REFRACT
    if mode is None:
        mode = rx_side
    if mode not in (REFLECT, REFRACT):
        raise ValueError(f"unknown mode {mode!r}")
    if mode != rx_side and q > 0:
        return 0.0
    cos_dep = cos_out if mode == REFLECT else -cos_out

    power = gain.boresight_power * _pattern(cos_in, q) * _pattern(cos_dep, q)
    return float(np.sqrt(power))


def surface_amplitudes(config: ScenarioConfig, geometry: Geometry):
    """Per-element amplitudes for both surface modes.

    Departure angles are evaluated at each side's user centroid (the state
    shares one amplitude per element across users); an empty side falls back
    to the boresight point of its half-space.
    """
    gain = config.gain_model
    bs = geometry.bs_position
    points = {}
    for side, sign in ((REFLECT, 1.0), (REFRACT, -1.0)):
        idx = geometry.users_on(side)
        if idx.size:
            points[side] = geometry.user_positions[idx].mean(axis=0)
        else:
            points[side] = geometry.ios_center + sign * geometry.ios_normal
    m = geometry.n_elements
    amp_reflect = np.array([
        element_amplitude(geometry, gain, i, bs, points[REFLECT], mode=REFLECT)
        for i in range(m)])
    amp_refract = np.array([
        element_amplitude(geometry, gain, i, bs, points[REFRACT], mode=REFRACT)
        for i in range(m)])
    return amp_reflect, amp_refract
