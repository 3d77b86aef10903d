"""Discrete phase optimization engine shared by all surface types.

Every analog subproblem handled here is a quadratic in the surface
coefficients g_p = a_p * exp(j * phi_{idx(p)}) with fixed amplitudes a_p
and possibly several coefficient entries tied to one phase variable
(power-domain surfaces tie the two polarization copies of an element).
Substituting the selection matrix S[p, idx(p)] = a_p collapses any list of
such quadratics into a single unit-modulus problem

    minimize  z^H T z + 2 Re(t . z),   z_j = exp(j * phi_j),

which is what coordinate descent, exhaustive enumeration, and best-first
branch-and-bound below operate on.  Phase variables that never interact
(T[j, j'] = 0) split into independent components solved separately.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .surface import PhaseCodebook

CD_TOL = 1e-8
CD_MAX_SWEEPS = 200
ENUM_BITS = 16          # enumerate a component when p * n_bits <= ENUM_BITS
_SCREEN = 1e-9          # prescreen window and branch-and-bound safety factor


@dataclass
class PhaseQuadratic:
    """One term Tr(G^H B G C) + 2 Re Tr(G V) restated entrywise.

    a : (d, d) Hermitian matrix with a[p, n] = B[p, n] * C[n, p].
    v : (d,) linear coefficients (the diagonal of V).
    amps : (d,) fixed non-negative amplitudes of the coefficients.
    phase_index : (d,) index of the phase variable driving each entry.
    """

    a: np.ndarray
    v: np.ndarray
    amps: np.ndarray
    phase_index: np.ndarray

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=complex)
        self.v = np.asarray(self.v, dtype=complex)
        self.amps = np.asarray(self.amps, dtype=float)
        self.phase_index = np.asarray(self.phase_index, dtype=int)


def reduce_quadratics(quads, n_phases: int):
    """Fold amplitude-weighted quadratics into the unit-modulus pair (T, t)."""
    t_mat = np.zeros((n_phases, n_phases), dtype=complex)
    t_lin = np.zeros(n_phases, dtype=complex)
    for q in quads:
        d = q.amps.size
        s = np.zeros((d, n_phases))
        s[np.arange(d), q.phase_index] = q.amps
        t_mat += s.T @ q.a @ s
        t_lin += s.T @ q.v
    t_mat = 0.5 * (t_mat + t_mat.conj().T)
    return t_mat, t_lin


def unit_modulus_objective(t_mat: np.ndarray, t_lin: np.ndarray,
                           phases: np.ndarray) -> float:
    """Shared scalar evaluator; every solver reports through this."""
    z = np.exp(1j * np.asarray(phases, dtype=float))
    return float((z.conj() @ t_mat @ z).real + 2.0 * (t_lin @ z).real)


def _coefficient(t_mat, t_lin, z, j):
    """K_j such that the objective is const + 2 Re(exp(j phi_j) K_j)."""
    c = t_mat[j] @ z - t_mat[j, j] * z[j]
    return np.conj(c) + t_lin[j]


def continuous_descent(t_mat, t_lin, phases0, tol: float = CD_TOL,
                       max_sweeps: int = CD_MAX_SWEEPS) -> np.ndarray:
    """Cyclic per-phase closed-form descent; the objective never increases.

    Each update minimizes 2 |K_j| cos(phi_j + arg K_j) exactly, so a sweep
    is monotone; stops when a full sweep improves by less than `tol`.
    """
    phases = np.asarray(phases0, dtype=float).copy()
    n = phases.size
    if n == 0:
        return phases
    z = np.exp(1j * phases)
    prev = unit_modulus_objective(t_mat, t_lin, phases)
    for _ in range(max_sweeps):
        for j in range(n):
            k = _coefficient(t_mat, t_lin, z, j)
            if abs(k) > 0.0:
                phases[j] = (np.pi - np.angle(k)) % (2.0 * np.pi)
                z[j] = np.exp(1j * phases[j])
        obj = unit_modulus_objective(t_mat, t_lin, phases)
        if prev - obj < tol:
            break
        prev = obj
    return phases


def discrete_descent(t_mat, t_lin, phases0, cb: PhaseCodebook,
                     max_sweeps: int = 100) -> np.ndarray:
    """Per-phase codebook descent to a local minimum (incumbent builder)."""
    phases = np.asarray(phases0, dtype=float).copy()
    n = phases.size
    z = np.exp(1j * phases)
    zc = np.exp(1j * cb.values)
    for _ in range(max_sweeps):
        changed = False
        for j in range(n):
            k = _coefficient(t_mat, t_lin, z, j)
            if abs(k) == 0.0:
                continue
            best = int(np.argmin((zc * k).real))
            if phases[j] != cb.values[best]:
                phases[j] = cb.values[best]
                z[j] = zc[best]
                changed = True
        if not changed:
            break
    return phases


def phase_components(t_mat: np.ndarray) -> list[np.ndarray]:
    """Connected components of the coupling graph |T[j, j']| > 0."""
    n = t_mat.shape[0]
    coupled = np.abs(t_mat) > 0.0
    np.fill_diagonal(coupled, False)
    seen = np.zeros(n, dtype=bool)
    comps = []
    for start in range(n):
        if seen[start]:
            continue
        stack, comp = [start], []
        seen[start] = True
        while stack:
            j = stack.pop()
            comp.append(j)
            for nb in np.nonzero(coupled[j])[0]:
                if not seen[nb]:
                    seen[nb] = True
                    stack.append(int(nb))
        comps.append(np.array(sorted(comp), dtype=int))
    return comps


_ENUM_CACHE: dict = {}
_ENUM_CACHE_MAX_CELLS = 1 << 23


def _enumeration_tables(size: int, p: int):
    """Assignment codes plus per-pair circular code differences.

    A pairwise term 2 Re(T[i,j] z_i^* z_j) only depends on
    (code_j - code_i) mod size, so the batch objective is a sum of
    length-`size` table lookups; the index tables are assignment-agnostic
    and cached per (size, p).
    """
    key = (size, p)
    cached = _ENUM_CACHE.get(key)
    if cached is not None:
        return cached
    grids = np.meshgrid(*([np.arange(size, dtype=np.intp)] * p),
                        indexing="ij")
    codes = np.stack([g.ravel() for g in grids], axis=1)
    diffs = {}
    for i in range(p):
        for j in range(i + 1, p):
            diffs[(i, j)] = (codes[:, j] - codes[:, i]) % size
    cached = (codes, diffs)
    if size ** p * max(len(diffs), 1) <= _ENUM_CACHE_MAX_CELLS:
        _ENUM_CACHE[key] = cached
    return cached


def _enumerate_component(t_mat, t_lin, phases, comp, cb: PhaseCodebook):
    """Exhaustive scan of one component, strict improvement over the warm
    assignment; returns the updated full phase vector."""
    p = comp.size
    size = cb.size
    t_cc = np.ascontiguousarray(t_mat[np.ix_(comp, comp)])
    t_c = t_lin[comp]
    best_phases = phases.copy()
    best_obj = unit_modulus_objective(t_mat, t_lin, phases)

    zc = np.exp(1j * cb.values)
    codes, diffs = _enumeration_tables(size, p)
    # vectorized prescreen on the component-restricted objective, then the
    # shared evaluator decides among near-minimal candidates
    obj_b = np.full(codes.shape[0], float(np.diag(t_cc).real.sum()))
    for (i, j), diff in diffs.items():
        if t_cc[i, j] != 0.0:
            table = 2.0 * (t_cc[i, j] * zc).real
            obj_b += table[diff]
    for i in range(p):
        if t_c[i] != 0.0:
            table = 2.0 * (t_c[i] * zc).real
            obj_b += table[codes[:, i]]
    comp_best = float(obj_b.min())
    window = _SCREEN * (1.0 + abs(comp_best))
    candidates = codes[obj_b <= comp_best + window]
    for row in candidates:
        trial = phases.copy()
        trial[comp] = cb.values[row]
        obj = unit_modulus_objective(t_mat, t_lin, trial)
        if obj < best_obj:
            best_obj = obj
            best_phases = trial
    return best_phases


def _bnb_component(t_mat, t_lin, phases, comp, cb: PhaseCodebook):
    """Best-first branch-and-bound over one component.

    Subtree bound = exact value of the decided part, plus the aggregated
    linear term -2|L_j| for every undecided phase against the decided ones,
    plus -2|T[j, j']| for undecided pairs; this never exceeds the subtree
    minimum, so with the safety window the returned objective matches
    exhaustive enumeration.
    """
    p = comp.size
    t_cc = t_mat[np.ix_(comp, comp)]
    t_c = t_lin[comp]
    zc = np.exp(1j * cb.values)

    def comp_obj(z_vec):
        return float((z_vec.conj() @ t_cc @ z_vec).real
                     + 2.0 * (t_c @ z_vec).real)

    # branch on strongly coupled phases first
    influence = np.abs(t_cc).sum(axis=1) - np.abs(np.diag(t_cc)) \
        + np.abs(t_c)
    order = np.argsort(-influence, kind="stable")

    # incumbent: warm start refined by discrete descent
    warm = discrete_descent(t_mat, t_lin, phases, cb)
    warm_codes = np.array([int(np.argmin(np.abs(cb.values - warm[j])))
                           for j in comp])
    inc_codes = warm_codes.copy()
    inc_obj = comp_obj(zc[inc_codes])
    safety = _SCREEN * (1.0 + abs(inc_obj))
    diag_total = float(np.diag(t_cc).real.sum())
    abs_t = np.abs(t_cc)

    def bound(codes_prefix):
        depth = len(codes_prefix)
        decided = order[:depth]
        undecided = order[depth:]
        z_d = zc[np.array(codes_prefix, dtype=int)] if depth else \
            np.zeros(0, dtype=complex)
        val = diag_total
        if depth:
            t_dd = t_cc[np.ix_(decided, decided)]
            val += float((z_d.conj() @ t_dd @ z_d).real
                         - np.diag(t_dd).real.sum()
                         + 2.0 * (t_c[decided] @ z_d).real)
        for j in undecided:
            l_j = t_c[j]
            if depth:
                l_j = l_j + np.conj(t_cc[j, decided] @ z_d)
            val -= 2.0 * abs(l_j)
        if undecided.size > 1:
            sub = abs_t[np.ix_(undecided, undecided)]
            val -= float(np.triu(sub, 1).sum()) * 2.0
        return val

    counter = 0
    heap = [(bound(()), counter, ())]
    while heap:
        node_bound, _, prefix = heapq.heappop(heap)
        if node_bound > inc_obj + safety:
            continue
        if len(prefix) == p:
            codes = np.empty(p, dtype=int)
            codes[order] = prefix
            obj = comp_obj(zc[codes])
            if obj < inc_obj:
                inc_obj = obj
                inc_codes = codes
            continue
        for code in range(cb.size):
            child = prefix + (code,)
            b = bound(child)
            if b <= inc_obj + safety:
                counter += 1
                heapq.heappush(heap, (b, counter, child))

    out = phases.copy()
    out[comp] = cb.values[inc_codes]
    return out


def solve_unit_modulus_discrete(t_mat, t_lin, cb: PhaseCodebook,
                                warm_phases, method: str = "auto"):
    """Codebook-constrained minimizer of z^H T z + 2 Re(t.z).

    method: 'auto' enumerates components with p * n_bits <= 16 and runs
    branch-and-bound on larger ones; 'exhaustive', 'bnb', and 'rounding'
    force one strategy ('rounding' quantizes the continuous descent result
    and is a diagnostic only).  Returns (phases, objective) with the
    objective from the shared evaluator.
    """
    phases = np.asarray(warm_phases, dtype=float).copy()
    n = phases.size
    if method == "rounding":
        cont = continuous_descent(t_mat, t_lin, phases)
        snapped = np.array([_nearest(cb, x) for x in cont])
        return snapped, unit_modulus_objective(t_mat, t_lin, snapped)
    phases = np.array([_nearest(cb, x) for x in phases])
    for comp in phase_components(t_mat):
        if method == "exhaustive" or (
                method == "auto" and comp.size * cb.n_bits <= ENUM_BITS):
            phases = _enumerate_component(t_mat, t_lin, phases, comp, cb)
        elif method in ("bnb", "auto"):
            phases = _bnb_component(t_mat, t_lin, phases, comp, cb)
        else:
            raise ValueError(f"unknown method {method!r}")
    return phases, unit_modulus_objective(t_mat, t_lin, phases)


def _nearest(cb: PhaseCodebook, psi: float) -> float:
    size = cb.size
    d = (psi / cb.spacing) % size
    lo = int(np.floor(d))
    frac = d - lo
    idx = lo if frac <= 0.5 else lo + 1
    return float(cb.values[idx % size])
