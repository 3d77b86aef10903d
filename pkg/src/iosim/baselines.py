"""Comparator schemes and the fixed power-split analysis.

Scheme identifiers used everywhere (CLI, CSV columns, sweep specs):
``dualpol_ios``, ``power_domain_ios``, ``dualpol_ris``, ``cellular``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import ChannelSet
from .config import REFLECT, ScenarioConfig
from .geometry import ensure_geometry, surface_amplitudes
from .metrics import Beamformer, sum_rate_from_rows
from .optimizer import (
    DualPolRisSurface,
    DualPolSurface,
    IterTrace,
    PowerDomainSurface,
    optimize_loop,
    surface_rows,
)
from .surface import codebook

SCHEMES = ("dualpol_ios", "power_domain_ios", "dualpol_ris", "cellular")


# ---------------------------------------------------------------------------
# power-split sum rate and its sensitivity (fixed-ratio analysis)
# ---------------------------------------------------------------------------

@dataclass
class PowerSplitModel:
    """Per-user direct (tau) and surface-path (chi) SINRs plus the ratio."""

    tau: np.ndarray
    chi: np.ndarray
    side_label: list[str]
    epsilon: float = 1.0

    def __post_init__(self):
        self.tau = np.asarray(self.tau, dtype=float)
        self.chi = np.asarray(self.chi, dtype=float)
        self.side_label = list(self.side_label)
        if np.any(self.tau < 0) or np.any(self.chi < 0):
            raise ValueError("tau and chi must be non-negative")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")

    def reflect_mask(self) -> np.ndarray:
        return np.array([s == REFLECT for s in self.side_label])


def power_domain_rate(model: PowerSplitModel,
                      epsilon: float | None = None) -> float:
    """Sum rate with the surface path scaled eps/(1+eps) in reflection and
    1/(1+eps) in refraction."""
    eps = model.epsilon if epsilon is None else float(epsilon)
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    share = eps / (1.0 + eps)
    mask = model.reflect_mask()
    scaled = np.where(mask, share * model.chi, (1.0 - share) * model.chi)
    return float(np.sum(np.log2(1.0 + model.tau + scaled)))


def power_split_derivative(model: PowerSplitModel,
                           epsilon: float | None = None) -> float:
    """d/d(eps) of power_domain_rate, in closed form.

    Reflect users gain from a larger split (d/d eps of eps/(1+eps) is
    1/(1+eps)^2), refract users lose the same share; matches central
    finite differences of power_domain_rate.
    """
    eps = model.epsilon if epsilon is None else float(epsilon)
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    share = eps / (1.0 + eps)
    mask = model.reflect_mask()
    scaled = np.where(mask, share * model.chi, (1.0 - share) * model.chi)
    common = model.chi / (1.0 + eps) ** 2 / (1.0 + model.tau + scaled)
    signed = np.where(mask, common, -common)
    return float(np.sum(signed) / np.log(2.0))


def optimal_epsilon(model: PowerSplitModel, lo: float = 1e-3,
                    hi: float = 1e3, tol: float = 1e-6) -> float:
    """Golden-section search of power_domain_rate over log10(eps).

    A flat objective (all chi zero) returns 1 by convention.
    """
    if np.all(model.chi == 0.0):
        return 1.0
    a, b = np.log10(lo), np.log10(hi)
    invphi = (np.sqrt(5.0) - 1.0) / 2.0

    def value(x):
        return power_domain_rate(model, epsilon=10.0 ** x)

    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = value(c), value(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = value(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = value(d)
    return float(10.0 ** (0.5 * (a + b)))


# ---------------------------------------------------------------------------
# scheme runners (same outer loop, different surfaces)
# ---------------------------------------------------------------------------

@dataclass
class SchemeResult:
    scheme: str
    beamformer: Beamformer
    state: object | None
    sum_rate: float
    trace: IterTrace


def optimize_scheme(scheme: str, config: ScenarioConfig,
                    channels: ChannelSet, epsilon: float | None = None,
                    analog_method: str = "auto") -> SchemeResult:
    """Run one scheme on a shared channel draw."""
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    config.validate()
    cb = codebook(config.n_bits)
    if scheme == "cellular":
        surface = None
    else:
        geometry = ensure_geometry(config)
        amp_r, amp_t = surface_amplitudes(config, geometry)
        if scheme == "dualpol_ios":
            surface = DualPolSurface(amp_r, amp_t)
        elif scheme == "dualpol_ris":
            surface = DualPolRisSurface(amp_r, amp_r)
        else:
            eps = config.epsilon if epsilon is None else float(epsilon)
            surface = PowerDomainSurface(
                amp_r, eps, coupled=config.power_domain_coupled_phases)
    w, phases, trace = optimize_loop(
        channels, surface, config.p_bs, config.sigma2,
        None if surface is None else cb, analog_method=analog_method)
    heff = surface_rows(channels, surface, phases)
    rate = sum_rate_from_rows(heff, w, config.sigma2)
    k_r = int(channels.users_on(REFLECT).size)
    beam = Beamformer.from_stacked(w, k_r)
    state = None if surface is None else surface.state(phases)
    return SchemeResult(scheme=scheme, beamformer=beam, state=state,
                        sum_rate=rate, trace=trace)


def optimize_power_domain(config: ScenarioConfig, channels: ChannelSet,
                          epsilon: float):
    """Power-domain surface with a fixed split; returns
    (beamformer, state, sum rate)."""
    res = optimize_scheme("power_domain_ios", config, channels,
                          epsilon=epsilon)
    return res.beamformer, res.state, res.sum_rate


def optimize_dualpol_ris(config: ScenarioConfig, channels: ChannelSet):
    """Reflect-only surface; refract users keep the direct link only."""
    res = optimize_scheme("dualpol_ris", config, channels)
    return res.beamformer, res.state, res.sum_rate


def optimize_cellular(config: ScenarioConfig, channels: ChannelSet):
    """No surface at all: plain weighted-MMSE precoding on direct links."""
    res = optimize_scheme("cellular", config, channels)
    return res.beamformer, res.sum_rate
