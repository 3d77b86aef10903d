"""Effective channels, SINR, rates, MSE, and the weighted-MSE surrogate.

User k is served by column k of the stacked precoder [W_r, W_t]; reflect
users own the first K_r columns.  All functions are pure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import ChannelSet

LOG2 = np.log(2.0)


@dataclass
class Beamformer:
    """Digital precoder over the 2*N_t dual-polarized BS ports."""

    w_r: np.ndarray  # (2 N_t, K_r)
    w_t: np.ndarray  # (2 N_t, K_t)

    def __post_init__(self):
        self.w_r = np.atleast_2d(np.asarray(self.w_r, dtype=complex))
        self.w_t = np.atleast_2d(np.asarray(self.w_t, dtype=complex))

    @property
    def stacked(self) -> np.ndarray:
        return np.hstack([self.w_r, self.w_t])

    @property
    def k_r(self) -> int:
        return self.w_r.shape[1]

    def power(self) -> float:
        return float(np.sum(np.abs(self.w_r) ** 2)
                     + np.sum(np.abs(self.w_t) ** 2))

    @classmethod
    def from_stacked(cls, w: np.ndarray, k_r: int) -> "Beamformer":
        w = np.asarray(w, dtype=complex)
        return cls(w_r=w[:, :k_r], w_t=w[:, k_r:])


@dataclass
class AuxWeights:
    """Scalar receivers u and positive MSE weights f, one pair per user."""

    u: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=complex)
        self.f = np.asarray(self.f, dtype=float)

    def validate(self) -> None:
        if np.any(self.f <= 0):
            raise ValueError("weights f must be positive")


def _as_diagonal_vector(g, two_m: int) -> np.ndarray | None:
    """Accept None (zero surface), a length-2M vector, or a 2M x 2M diagonal."""
    if g is None:
        return None
    g = np.asarray(g)
    if g.ndim == 1:
        if g.size != two_m:
            raise ValueError("coefficient vector has wrong length")
        return g.astype(complex)
    if g.shape != (two_m, two_m):
        raise ValueError("coefficient matrix has wrong shape")
    return np.diagonal(g).astype(complex)


def effective_channel(channels: ChannelSet, g, k: int) -> np.ndarray:
    """Overall row h_k = h_BU,k + h_IU,k G H_BI for one user."""
    gvec = _as_diagonal_vector(g, 2 * channels.m_elems)
    if gvec is None:
        return channels.h_bu[k].copy()
    return channels.h_bu[k] + (channels.h_iu[k] * gvec) @ channels.h_bi


def effective_rows(channels: ChannelSet, g) -> np.ndarray:
    """All effective rows stacked into a (2K, 2N_t) matrix."""
    gvec = _as_diagonal_vector(g, 2 * channels.m_elems)
    if gvec is None:
        return channels.h_bu.copy()
    return channels.h_bu + (channels.h_iu * gvec[None, :]) @ channels.h_bi


def sinr_from_rows(heff: np.ndarray, w_stacked: np.ndarray, sigma2: float,
                   k: int) -> float:
    hw = heff[k] @ w_stacked
    signal = np.abs(hw[k]) ** 2
    interference = np.sum(np.abs(hw) ** 2) - signal
    return float(signal / (interference + sigma2))


def sinr(channels: ChannelSet, g, w: Beamformer, sigma2: float, k: int) -> float:
    """SINR of user k: own column over all other columns plus noise."""
    heff = effective_rows(channels, g)
    return sinr_from_rows(heff, w.stacked, sigma2, k)


def sum_rate_from_rows(heff: np.ndarray, w_stacked: np.ndarray,
                       sigma2: float) -> float:
    hw = heff @ w_stacked
    power = np.abs(hw) ** 2
    signal = np.diagonal(power)
    interference = power.sum(axis=1) - signal
    return float(np.sum(np.log2(1.0 + signal / (interference + sigma2))))


def sum_rate(channels: ChannelSet, g, w: Beamformer, sigma2: float) -> float:
    """Sum of log2(1 + SINR_k) over all users, bit/s/Hz."""
    return sum_rate_from_rows(effective_rows(channels, g), w.stacked, sigma2)


def mse_from_rows(heff: np.ndarray, w_stacked: np.ndarray, u: np.ndarray,
                  sigma2: float) -> np.ndarray:
    """Per-user MSE of u_k^* y_k against the intended unit-power symbol."""
    hw = heff @ w_stacked
    total = np.sum(np.abs(hw) ** 2, axis=1)
    own = np.diagonal(hw)
    return (np.abs(u) ** 2 * (total + sigma2)
            - 2.0 * np.real(np.conj(u) * own) + 1.0)


def mse(channels: ChannelSet, g, w: Beamformer, aux: AuxWeights,
        sigma2: float, k: int) -> float:
    aux.validate()
    heff = effective_rows(channels, g)
    return float(mse_from_rows(heff, w.stacked, aux.u, sigma2)[k])


def surrogate(aux: AuxWeights, mses) -> float:
    """Sum over users of log2(f_k) - f_k * e_k.

    With the closed-form receivers and weights this equals the sum rate
    minus the number of users.
    """
    aux.validate()
    mses = np.asarray(mses, dtype=float)
    return float(np.sum(np.log2(aux.f) - aux.f * mses))


def polarization_power(w: Beamformer, n_t: int) -> tuple[float, float]:
    """Transmit power on the vertical and horizontal port halves."""
    stacked = w.stacked
    p_v = float(np.sum(np.abs(stacked[:n_t]) ** 2))
    p_h = float(np.sum(np.abs(stacked[n_t:]) ** 2))
    return p_v, p_h
