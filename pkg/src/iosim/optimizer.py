"""Alternating digital/analog sum-rate optimizer.

One outer iteration refreshes the scalar receivers u and weights f in
closed form, re-optimizes the surface phases over the quantized codebook
(continuous per-element descent warm-starting an exact discrete solve),
and solves the power-constrained digital precoding problem through its
Lagrangian with a bisection on the multiplier.  With the exact discrete
step the recorded surrogate is non-decreasing and the loop converges.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .analog import (
    PhaseQuadratic,
    continuous_descent,
    reduce_quadratics,
    solve_unit_modulus_discrete,
    unit_modulus_objective,
)
from .channels import ChannelSet
from .config import REFLECT, REFRACT, ScenarioConfig
from .geometry import ensure_geometry, surface_amplitudes
from .metrics import (
    AuxWeights,
    Beamformer,
    effective_rows,
    mse_from_rows,
    sum_rate_from_rows,
)
from .surface import DualPolIosState, PhaseCodebook, PowerDomainIosState, codebook

MAX_OUTER_ITERS = 100
SURROGATE_TOL = 1e-4
PINV_RTOL = 1e-12
BISECT_MAX_ITERS = 200


# ---------------------------------------------------------------------------
# closed-form auxiliary updates
# ---------------------------------------------------------------------------

def aux_from_rows(heff: np.ndarray, w_stacked: np.ndarray, sigma2: float):
    """Optimal receivers and weights for fixed effective rows and precoder.

    u_k = h_k W^(k) / (||h_k W||^2 + sigma2) and f_k = 1 / (1 - u_k
    conj(h_k W^(k))); users with a dead channel get u = 0, f = 1 and drop
    out of every later step.
    """
    hw = heff @ w_stacked
    own = np.diagonal(hw)
    denom = np.sum(np.abs(hw) ** 2, axis=1) + sigma2
    u = own / denom
    d = 1.0 - np.real(u * np.conj(own))
    if np.any(d <= 0.0):
        raise ValueError("weight denominator <= 0: receivers inconsistent "
                         "with the precoder")
    return u, 1.0 / d


def update_receivers(channels: ChannelSet, g, w: Beamformer,
                     sigma2: float) -> np.ndarray:
    heff = effective_rows(channels, g)
    return aux_from_rows(heff, w.stacked, sigma2)[0]


def update_weights(channels: ChannelSet, g, w: Beamformer, u,
                   sigma2: float) -> np.ndarray:
    heff = effective_rows(channels, g)
    hw = heff @ w.stacked
    own = np.diagonal(hw)
    d = 1.0 - np.real(np.asarray(u, dtype=complex) * np.conj(own))
    if np.any(d <= 0.0):
        raise ValueError("weight denominator <= 0: receivers inconsistent "
                         "with the precoder")
    return 1.0 / d


# ---------------------------------------------------------------------------
# digital subproblem
# ---------------------------------------------------------------------------

def solve_digital_rows(heff: np.ndarray, u: np.ndarray, f: np.ndarray,
                       p_bs: float):
    """Columns u_k f_k (M + lambda I)^+ h_k^H with the multiplier from a
    bisection on the total-power curve.

    M = sum_k f_k |u_k|^2 h_k^H h_k is eigendecomposed once; the power
    consumed at a given multiplier is a cheap diagonal sum, so the
    bisection runs to float-width brackets and complementary slackness
    holds to machine precision.  Returns (stacked precoder, lambda).
    """
    if not np.all(np.isfinite(heff.view(float))):
        raise ValueError("effective channels must be finite")
    wgt = f * np.abs(u) ** 2
    m_mat = (heff.conj().T * wgt) @ heff
    m_mat = 0.5 * (m_mat + m_mat.conj().T)
    lam_vals, q_mat = np.linalg.eigh(m_mat)
    lam_vals = np.maximum(lam_vals, 0.0)

    coef = u * f
    qth = q_mat.conj().T @ heff.conj().T          # (2N_t, 2K)
    n_diag = (np.abs(qth) ** 2) @ (np.abs(coef) ** 2)

    def power_at(lam: float) -> float:
        return float(np.sum(n_diag / (lam_vals + lam) ** 2))

    cutoff = PINV_RTOL * (lam_vals.max() if lam_vals.size else 0.0)
    keep = lam_vals > cutoff
    p_unconstrained = float(np.sum(n_diag[keep] / lam_vals[keep] ** 2)) \
        if np.any(keep) else 0.0

    if p_unconstrained <= p_bs:
        lam = 0.0
        inv = np.zeros_like(lam_vals)
        inv[keep] = 1.0 / lam_vals[keep]
    else:
        lam_ub = float(np.sqrt(np.sum(n_diag) / p_bs))
        lo, hi = 0.0, lam_ub
        for _ in range(BISECT_MAX_ITERS):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:  # bracket at float resolution
                break
            if power_at(mid) > p_bs:
                lo = mid
            else:
                hi = mid
        lam = hi
        if abs(power_at(lam) - p_bs) > 1e-6 * p_bs:
            raise RuntimeError("power bisection could not meet its tolerance")
        inv = 1.0 / (lam_vals + lam)

    w = q_mat @ (inv[:, None] * qth) * coef[None, :]
    return w, lam


def solve_digital(channels: ChannelSet, g, aux: AuxWeights, p_bs: float):
    """Spec-facing wrapper returning (Beamformer, lambda)."""
    aux.validate()
    heff = effective_rows(channels, g)
    w, lam = solve_digital_rows(heff, aux.u, aux.f, p_bs)
    k_r = int(channels.users_on(REFLECT).size)
    return Beamformer.from_stacked(w, k_r), lam


# ---------------------------------------------------------------------------
# analog subproblem
# ---------------------------------------------------------------------------

@dataclass
class AnalogQuadratic:
    """Matrices of the surface subproblem min Tr(G^H B G C) + 2Re Tr(G V)."""

    b_matrix: np.ndarray
    c_matrix: np.ndarray
    v_matrix: np.ndarray


def _quadratic_terms(channels: ChannelSet, w_stacked: np.ndarray,
                     u: np.ndarray, f: np.ndarray, users: np.ndarray):
    two_m = 2 * channels.m_elems
    t = channels.h_bi @ w_stacked                  # (2M, 2K)
    c_mat = t @ t.conj().T
    if users.size:
        wgt = f[users] * np.abs(u[users]) ** 2
        h_iu = channels.h_iu[users]
        b_mat = (h_iu.conj().T * wgt) @ h_iu
    else:
        b_mat = np.zeros((two_m, two_m), dtype=complex)
    v_mat = np.zeros((two_m, two_m), dtype=complex)
    for k in users:
        p_k = t @ (w_stacked.conj().T @ channels.h_bu[k].conj())
        col = f[k] * np.conj(u[k]) * (u[k] * p_k - t[:, k])
        v_mat += np.outer(col, channels.h_iu[k])
    return b_mat, c_mat, v_mat


def build_analog_quadratic(channels: ChannelSet, w: Beamformer,
                           aux: AuxWeights) -> AnalogQuadratic:
    """B, C, V of the shared-coefficient subproblem over all users."""
    aux.validate()
    users = np.arange(channels.n_users)
    b, c, v = _quadratic_terms(channels, w.stacked, aux.u, aux.f, users)
    return AnalogQuadratic(b_matrix=b, c_matrix=c, v_matrix=v)


def _identity_quadratic(quad: AnalogQuadratic, amplitudes) -> PhaseQuadratic:
    amps = np.asarray(amplitudes, dtype=float)
    return PhaseQuadratic(
        a=quad.b_matrix * quad.c_matrix.T,
        v=np.diagonal(quad.v_matrix).copy(),
        amps=amps,
        phase_index=np.arange(amps.size),
    )


def analog_objective(quad: AnalogQuadratic, amplitudes, phases) -> float:
    """Objective of the subproblem at given phases (shared evaluator)."""
    pq = _identity_quadratic(quad, amplitudes)
    t_mat, t_lin = reduce_quadratics([pq], pq.amps.size)
    return unit_modulus_objective(t_mat, t_lin, phases)


def solve_analog_continuous(quad: AnalogQuadratic, amplitudes,
                            init_phases) -> np.ndarray:
    """Relaxed solve: cyclic closed-form coordinate descent on the phases."""
    pq = _identity_quadratic(quad, amplitudes)
    t_mat, t_lin = reduce_quadratics([pq], pq.amps.size)
    return continuous_descent(t_mat, t_lin, np.asarray(init_phases, float))


def solve_analog_discrete(quad: AnalogQuadratic, amplitudes,
                          cb: PhaseCodebook, warm_start,
                          method: str = "auto") -> DualPolIosState:
    """Codebook-exact solve of the shared-coefficient subproblem.

    'auto' enumerates when 2M * n_bits <= 16 and branches-and-bounds
    otherwise; both return the global codebook minimizer.  The result is
    never worse than quantizing the continuous solution.
    """
    amps = np.asarray(amplitudes, dtype=float)
    pq = _identity_quadratic(quad, amps)
    t_mat, t_lin = reduce_quadratics([pq], amps.size)
    phases, _ = solve_unit_modulus_discrete(
        t_mat, t_lin, cb, np.asarray(warm_start, dtype=float), method=method)
    m = amps.size // 2
    return DualPolIosState(psi_vv=phases[:m], psi_hh=phases[m:],
                           amp_vv=amps[:m], amp_hh=amps[m:])


# ---------------------------------------------------------------------------
# surface adapters: map free phases to per-side coefficient diagonals
# ---------------------------------------------------------------------------

class DualPolSurface:
    """Independent codebook phases for the reflected and refracted mode."""

    def __init__(self, amp_vv, amp_hh):
        self.amp_vv = np.asarray(amp_vv, dtype=float)
        self.amp_hh = np.asarray(amp_hh, dtype=float)
        self.amps = np.concatenate([self.amp_vv, self.amp_hh])
        self.n_phases = self.amps.size

    def diagonals(self, phases):
        diag = self.amps * np.exp(1j * phases)
        return {REFLECT: diag, REFRACT: diag}

    def quadratics(self, channels, w_stacked, u, f):
        users = np.arange(channels.n_users)
        b, c, v = _quadratic_terms(channels, w_stacked, u, f, users)
        return [PhaseQuadratic(a=b * c.T, v=np.diagonal(v).copy(),
                               amps=self.amps,
                               phase_index=np.arange(self.n_phases))]

    def state(self, phases):
        m = self.amp_vv.size
        return DualPolIosState(psi_vv=phases[:m], psi_hh=phases[m:],
                               amp_vv=self.amp_vv, amp_hh=self.amp_hh)


class DualPolRisSurface(DualPolSurface):
    """Reflect-only comparator: both polarizations serve the BS side and
    refract users keep only their direct link."""

    def diagonals(self, phases):
        diag = self.amps * np.exp(1j * phases)
        return {REFLECT: diag, REFRACT: None}

    def quadratics(self, channels, w_stacked, u, f):
        users = channels.users_on(REFLECT)
        if users.size == 0:
            return []
        b, c, v = _quadratic_terms(channels, w_stacked, u, f, users)
        return [PhaseQuadratic(a=b * c.T, v=np.diagonal(v).copy(),
                               amps=self.amps,
                               phase_index=np.arange(self.n_phases))]


class PowerDomainSurface:
    """Fixed power split: each element keeps eps/(1+eps) of its power in
    reflection; both polarizations of one element share one phase per mode,
    and with coupled=True the two modes share it as well."""

    def __init__(self, amp, epsilon: float, coupled: bool = False):
        if epsilon <= 0:
            raise ValueError("epsilon must be positive")
        self.amp = np.asarray(amp, dtype=float)
        self.epsilon = float(epsilon)
        self.coupled = bool(coupled)
        m = self.amp.size
        self.m = m
        split = self.epsilon / (1.0 + self.epsilon)
        self.amp_r = self.amp * np.sqrt(split)
        self.amp_t = self.amp * np.sqrt(1.0 - split)
        self.n_phases = m if coupled else 2 * m

    def _mode_phases(self, phases):
        m = self.m
        if self.coupled:
            return phases, phases
        return phases[:m], phases[m:]

    def diagonals(self, phases):
        psi_r, psi_t = self._mode_phases(phases)
        d_r = self.amp_r * np.exp(1j * psi_r)
        d_t = self.amp_t * np.exp(1j * psi_t)
        return {REFLECT: np.concatenate([d_r, d_r]),
                REFRACT: np.concatenate([d_t, d_t])}

    def quadratics(self, channels, w_stacked, u, f):
        m = self.m
        idx_r = np.concatenate([np.arange(m), np.arange(m)])
        idx_t = idx_r if self.coupled else idx_r + m
        quads = []
        for side, amps, idx in ((REFLECT, self.amp_r, idx_r),
                                (REFRACT, self.amp_t, idx_t)):
            users = channels.users_on(side)
            if users.size == 0:
                continue
            b, c, v = _quadratic_terms(channels, w_stacked, u, f, users)
            quads.append(PhaseQuadratic(
                a=b * c.T, v=np.diagonal(v).copy(),
                amps=np.concatenate([amps, amps]), phase_index=idx))
        return quads

    def state(self, phases):
        psi_r, psi_t = self._mode_phases(phases)
        return PowerDomainIosState(epsilon=self.epsilon, psi_r=psi_r.copy(),
                                   psi_t=psi_t.copy(), amp=self.amp)


# ---------------------------------------------------------------------------
# the outer loop
# ---------------------------------------------------------------------------

@dataclass
class IterTrace:
    """Per-iteration history of one optimizer run.

    `surrogate[i]` is measured right after the receiver/weight refresh of
    iteration i (it equals the sum rate of the previous iterate minus the
    user count, and is non-decreasing with exact discrete analog solves);
    the remaining columns describe the iterate produced by iteration i.
    """

    surrogate: list = field(default_factory=list)
    sum_rate: list = field(default_factory=list)
    transmit_power: list = field(default_factory=list)
    lam: list = field(default_factory=list)
    analog_objective: list = field(default_factory=list)
    converged: bool = False
    iterations: int = 0

    def record(self, surrogate, sum_rate, transmit_power, lam, analog_obj):
        self.surrogate.append(float(surrogate))
        self.sum_rate.append(float(sum_rate))
        self.transmit_power.append(float(transmit_power))
        self.lam.append(float(lam))
        self.analog_objective.append(float(analog_obj))
        self.iterations = len(self.surrogate)

    def records(self) -> list[dict]:
        return [
            {"iteration": i + 1,
             "surrogate": self.surrogate[i],
             "sum_rate": self.sum_rate[i],
             "transmit_power": self.transmit_power[i],
             "lambda": self.lam[i],
             "analog_objective": self.analog_objective[i],
             "converged": self.converged and i == self.iterations - 1}
            for i in range(self.iterations)
        ]

    def to_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            for rec in self.records():
                fh.write(json.dumps(rec) + "\n")


def surface_rows(channels: ChannelSet, surface, phases) -> np.ndarray:
    """Effective rows under a surface adapter (None means no surface)."""
    if surface is None:
        return channels.h_bu.copy()
    diags = surface.diagonals(phases)
    heff = np.array(channels.h_bu, dtype=complex, copy=True)
    for side in (REFLECT, REFRACT):
        idx = channels.users_on(side)
        d = diags[side]
        if idx.size == 0 or d is None:
            continue
        heff[idx] += (channels.h_iu[idx] * d[None, :]) @ channels.h_bi
    return heff


def _mrt_init(heff: np.ndarray, p_bs: float) -> np.ndarray:
    cols = heff.conj().T.copy()
    norms = np.linalg.norm(cols, axis=0)
    active = norms > 0
    cols[:, ~active] = 0.0
    if np.any(active):
        cols[:, active] /= norms[active]
        cols[:, active] *= np.sqrt(p_bs / active.sum())
    return cols


def optimize_loop(channels: ChannelSet, surface, p_bs: float, sigma2: float,
                  cb: PhaseCodebook | None, analog_method: str = "auto",
                  max_iters: int = MAX_OUTER_ITERS,
                  tol: float = SURROGATE_TOL):
    """Run the alternating loop; returns (w_stacked, phases, trace)."""
    n_phases = 0 if surface is None else surface.n_phases
    phases = np.zeros(n_phases)
    heff = surface_rows(channels, surface, phases)
    w = _mrt_init(heff, p_bs)
    trace = IterTrace()
    surr_prev = None
    best = (-np.inf, w, phases)

    for _ in range(max_iters):
        heff = surface_rows(channels, surface, phases)
        u, f = aux_from_rows(heff, w, sigma2)
        mses = mse_from_rows(heff, w, u, sigma2)
        surr = float(np.sum(np.log2(f) - f * mses))
        if surr > best[0]:
            best = (surr, w, phases)
        if surr_prev is not None and \
                abs(surr - surr_prev) <= tol * max(1.0, abs(surr_prev)):
            trace.converged = True
            trace.record(surr, sum_rate_from_rows(heff, w, sigma2),
                         float(np.sum(np.abs(w) ** 2)),
                         trace.lam[-1] if trace.lam else 0.0,
                         trace.analog_objective[-1]
                         if trace.analog_objective else np.nan)
            return w, phases, trace
        surr_prev = surr

        analog_obj = np.nan
        if surface is not None:
            quads = surface.quadratics(channels, w, u, f)
            if quads:
                t_mat, t_lin = reduce_quadratics(quads, surface.n_phases)
                relaxed = continuous_descent(t_mat, t_lin, phases)
                phases, analog_obj = solve_unit_modulus_discrete(
                    t_mat, t_lin, cb, relaxed, method=analog_method)
            heff = surface_rows(channels, surface, phases)

        w, lam = solve_digital_rows(heff, u, f, p_bs)
        trace.record(surr, sum_rate_from_rows(heff, w, sigma2),
                     float(np.sum(np.abs(w) ** 2)), lam, analog_obj)

    # not converged: hand back the best surrogate iterate seen
    heff = surface_rows(channels, surface, phases)
    u, f = aux_from_rows(heff, w, sigma2)
    mses = mse_from_rows(heff, w, u, sigma2)
    surr = float(np.sum(np.log2(f) - f * mses))
    if surr < best[0]:
        _, w, phases = best
    return w, phases, trace


def run(config: ScenarioConfig, channels: ChannelSet,
        analog_method: str = "auto"):
    """Joint digital and analog design for the dual-polarized surface.

    Returns (Beamformer, DualPolIosState, IterTrace); the precoder always
    satisfies the power budget.
    """
    config.validate()
    geometry = ensure_geometry(config)
    amp_vv, amp_hh = surface_amplitudes(config, geometry)
    surface = DualPolSurface(amp_vv, amp_hh)
    cb = codebook(config.n_bits)
    w, phases, trace = optimize_loop(
        channels, surface, config.p_bs, config.sigma2, cb,
        analog_method=analog_method)
    k_r = int(channels.users_on(REFLECT).size)
    return Beamformer.from_stacked(w, k_r), surface.state(phases), trace
