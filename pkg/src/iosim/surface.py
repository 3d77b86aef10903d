"""Surface state for the dual-polarized IOS and its comparator devices.

A dual-polarized surface applies independent quantized phases to the
vertically polarized (reflected) and horizontally polarized (refracted)
field; a power-domain surface splits each element's power between the two
modes with a fixed ratio epsilon.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class PhaseCodebook:
    """Equally spaced quantized phases {2*pi*l / 2^N : l = 0..2^N - 1}."""

    n_bits: int
    values: np.ndarray

    @property
    def size(self) -> int:
        return self.values.size

    @property
    def spacing(self) -> float:
        return TWO_PI / self.size

    def index_of(self, psi: float) -> int:
        idx = int(np.argmin(np.abs(self.values - psi)))
        if not np.isclose(self.values[idx], psi, atol=1e-12):
            raise ValueError(f"phase {psi} is not a codebook value")
        return idx


def codebook(n_bits: int) -> PhaseCodebook:
    if n_bits < 1:
        raise ValueError("n_bits must be >= 1")
    size = 2 ** int(n_bits)
    values = TWO_PI * np.arange(size) / size
    values.setflags(write=False)
    return PhaseCodebook(n_bits=int(n_bits), values=values)


def quantize_phase(psi: float, cb: PhaseCodebook) -> float:
    """Nearest codebook phase under circular distance, ties to lower index."""
    if not np.isfinite(psi):
        raise ValueError("phase must be finite")
    size = cb.size
    d = (psi / cb.spacing) % size
    lo = int(np.floor(d))
    frac = d - lo
    idx = lo if frac <= 0.5 else lo + 1
    return float(cb.values[idx % size])


@dataclass
class DualPolIosState:
    """Per-element amplitudes and codebook phases for both polarizations."""

    psi_vv: np.ndarray
    psi_hh: np.ndarray
    amp_vv: np.ndarray
    amp_hh: np.ndarray

    def __post_init__(self):
        self.psi_vv = np.asarray(self.psi_vv, dtype=float)
        self.psi_hh = np.asarray(self.psi_hh, dtype=float)
        self.amp_vv = np.asarray(self.amp_vv, dtype=float)
        self.amp_hh = np.asarray(self.amp_hh, dtype=float)

    @property
    def m_elems(self) -> int:
        return self.psi_vv.size

    def diagonal(self) -> np.ndarray:
        """Length-2M diagonal [amp_vv e^{j psi_vv}, amp_hh e^{j psi_hh}]."""
        return np.concatenate([
            self.amp_vv * np.exp(1j * self.psi_vv),
            self.amp_hh * np.exp(1j * self.psi_hh),
        ])

    def to_dict(self, cb: PhaseCodebook | None = None) -> dict:
        out = {
            "amp_vv": self.amp_vv.tolist(),
            "amp_hh": self.amp_hh.tolist(),
        }
        if cb is not None:
            out["psi_vv_index"] = [cb.index_of(p) for p in self.psi_vv]
            out["psi_hh_index"] = [cb.index_of(p) for p in self.psi_hh]
        else:
            out["psi_vv"] = self.psi_vv.tolist()
            out["psi_hh"] = self.psi_hh.tolist()
        return out


def coefficient_matrix(state: DualPolIosState) -> np.ndarray:
    """Diagonal coefficient matrix diag{g_vv_1..g_vv_M, g_hh_1..g_hh_M}."""
    return np.diag(state.diagonal())


@dataclass
class PowerDomainIosState:
    """Power-domain surface: shared amplitudes split by the ratio epsilon.

    Reflection keeps the fraction epsilon/(1+epsilon) of each element's
    power, refraction the remaining 1/(1+epsilon); the two squared
    amplitudes always sum back to amp^2.
    """

    epsilon: float
    psi_r: np.ndarray
    psi_t: np.ndarray
    amp: np.ndarray

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        self.psi_r = np.asarray(self.psi_r, dtype=float)
        self.psi_t = np.asarray(self.psi_t, dtype=float)
        self.amp = np.asarray(self.amp, dtype=float)

    @property
    def m_elems(self) -> int:
        return self.psi_r.size

    @property
    def reflect_amplitude(self) -> np.ndarray:
        return self.amp * np.sqrt(self.epsilon / (1.0 + self.epsilon))

    @property
    def refract_amplitude(self) -> np.ndarray:
        # 1 - eps/(1+eps) rather than 1/(1+eps): keeps the squared
        # amplitudes summing to amp^2 at float precision
        return self.amp * np.sqrt(1.0 - self.epsilon / (1.0 + self.epsilon))

    def reflect_diagonal(self) -> np.ndarray:
        return self.reflect_amplitude * np.exp(1j * self.psi_r)

    def refract_diagonal(self) -> np.ndarray:
        return self.refract_amplitude * np.exp(1j * self.psi_t)

    def to_dict(self, cb: PhaseCodebook | None = None) -> dict:
        out = {"epsilon": self.epsilon, "amp": self.amp.tolist()}
        if cb is not None:
            out["psi_r_index"] = [cb.index_of(p) for p in self.psi_r]
            out["psi_t_index"] = [cb.index_of(p) for p in self.psi_t]
        else:
            out["psi_r"] = self.psi_r.tolist()
            out["psi_t"] = self.psi_t.tolist()
        return out


def power_domain_matrices(state: PowerDomainIosState):
    """(reflect, refract) M x M diagonal coefficient matrices."""
    return (np.diag(state.reflect_diagonal()),
            np.diag(state.refract_diagonal()))
