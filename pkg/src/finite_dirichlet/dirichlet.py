"""Time change to a reference measure, semigroups, and the closability harness."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import Func, SymForm, eval_form, values_on
from .decomposition import cutoff_phi_alpha
from .errors import (
    AbsContinuityViolated,
    EnergyOnNullSet,
    NegativeMass,
    SelectionFailed,
)
from .lagrangian import require_positive
from .measures import ABS_TOL, AtomicMeasure, check_abs_continuity

CERT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class TimeChangedGenerator:
    """Generator ``G = -M^{-1} Q`` of the form in ``L2(m)``, restricted to ``{m > 0}``."""

    support: tuple
    G: np.ndarray
    m: AtomicMeasure
    _eig: tuple = field(repr=False)

    @property
    def weights(self) -> np.ndarray:
        return self.m.atoms[list(self.support)]

    def quadratic_form(self, f) -> float:
        """``<-G f, f>`` in ``L2(m)`` for f given on the support."""
        u = np.asarray(f, dtype=float)
        return float(np.sum(self.weights * (-self.G @ u) * u))


def time_change(E: SymForm, m: AtomicMeasure) -> TimeChangedGenerator:
    if m.signed and np.any(m.atoms < 0):
        i = int(np.argmin(m.atoms))
        raise NegativeMass(f"m({m.ground.labels[i]}) < 0", witness=m.ground.labels[i])
    if m.ground != E.ground:
        raise ValueError("measure and form live on different ground sets")
    Q = E.dense
    null = m.atoms <= 0
    tol = E.psd_tol
    rows = np.nonzero(null & np.any(np.abs(Q) > tol, axis=1))[0]
    if rows.size:
        w = E.ground.labels[int(rows[0])]
        raise EnergyOnNullSet(f"point {w} carries energy but has zero mass", witness=w)
    supp = np.nonzero(~null)[0]
    Qs = Q[np.ix_(supp, supp)]
    w = m.atoms[supp]
    G = -Qs / w[:, None]
    r = 1.0 / np.sqrt(w)
    S = r[:, None] * Qs * r[None, :]
    lam, V = np.linalg.eigh((S + S.T) / 2.0)
    return TimeChangedGenerator(tuple(int(i) for i in supp), G, m, (lam, V))


def semigroup_at(gen: TimeChangedGenerator, t: float) -> np.ndarray:
    """``exp(tG)`` through the eigendecomposition of ``M^{-1/2} Q M^{-1/2}``."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return np.eye(len(gen.support))
    lam, V = gen._eig
    s = np.sqrt(gen.weights)
    core = (V * np.exp(-t * lam)) @ V.T
    return core / s[:, None] * s[None, :]


def check_submarkov(P: np.ndarray, tol: float = 1e-8) -> tuple:
    """Entries >= -tol and row sums <= 1 + tol; returns ``(ok, witnesses)``."""
    P = np.asarray(P, dtype=float)
    wit = [
        {"kind": "negative_entry", "row": int(i), "col": int(j), "value": float(P[i, j])}
        for i, j in zip(*np.nonzero(P < -tol))
    ]
    rs = P.sum(axis=1)
    wit += [
        {"kind": "row_sum", "row": int(i), "value": float(rs[i])} for i in np.nonzero(rs > 1 + tol)[0]
    ]
    return not wit, wit


def m_symmetry_residual(gen: TimeChangedGenerator, P: np.ndarray) -> float:
    w = gen.weights
    A = w[:, None] * P
    return float(np.max(np.abs(A - A.T))) if A.size else 0.0


# ---------------------------------------------------------------------------
# closability harness


@dataclass(frozen=True, eq=False)
class SequenceSpec:
    functions: tuple
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        fs = tuple(self.functions)
        if fs and any(f.ground != fs[0].ground for f in fs):
            raise ValueError("all sequence members must share one ground set")
        object.__setattr__(self, "functions", fs)

    def __len__(self):
        return len(self.functions)

    def matrix(self) -> np.ndarray:
        return np.array([f.values for f in self.functions])


def knapsack_bound(gamma: np.ndarray, m: np.ndarray, delta: float) -> float:
    """Upper bound for ``sup { gamma(A) : m(A) < delta }`` via the fractional relaxation.

    Atoms of mass at least delta can never be part of A and are left out.
    """
    free = gamma[m <= 0].sum()  # null atoms fit in any budget
    pos = (m > 0) & (m < delta)
    g, w = gamma[pos], m[pos]
    order = np.argsort(-(g / w), kind="stable")
    g, w = g[order], w[order]
    cum = np.cumsum(w)
    full = cum <= delta
    total = g[full].sum()
    k = int(full.sum())
    if k < g.size:
        left = delta - (cum[k - 1] if k else 0.0)
        total += g[k] * left / w[k]
    return float(free + total)


def _gammas(E: SymForm, m: AtomicMeasure, seq: SequenceSpec) -> np.ndarray:
    out = []
    for f in seq.functions:
        g = np.maximum(require_positive(E, values_on(E.ground, f)), 0.0)
        nu = AtomicMeasure(E.ground, g)
        ok, w = check_abs_continuity(nu, m)
        if not ok:
            raise AbsContinuityViolated(f"Gamma(f) charges {w} where m vanishes", witness=w)
        out.append(g)
    return np.array(out).reshape(len(seq), E.ground.size)


def _tail_max(D: np.ndarray) -> list:
    """``[max_{p,q >= n} D[p,q] for n]``."""
    n = D.shape[0]
    return [float(D[i:, i:].max()) if n else 0.0 for i in range(n)]


def uniform_integrability_report(
    E: SymForm, m: AtomicMeasure, seq: SequenceSpec, deltas=None
) -> dict:
    gam = _gammas(E, m, seq)
    N = gam.shape[0]
    D = np.abs(gam[:, None, :] - gam[None, :, :]).sum(axis=2)
    if deltas is None:
        deltas = [2.0**-k for k in range(0, 21)]
    pos = m.atoms > ABS_TOL
    ui = []
    for d in deltas:
        kn = max((knapsack_bound(g, m.atoms, d) for g in gam), default=0.0)
        small = pos & (m.atoms < d)
        atom = float(gam[:, small].max()) if N and small.any() else 0.0
        ui.append({"delta": d, "sup_mass_bound": kn, "sup_single_atom": atom})
    dens = np.zeros_like(gam)
    dens[:, pos] = gam[:, pos] / m.atoms[pos]
    X = seq.matrix()
    worst = 0.0
    for p in range(N):
        for q in range(p + 1, N):
            diff = np.maximum(require_positive(E, X[p] - X[q]), 0.0)
            dd = np.zeros_like(diff)
            dd[pos] = diff[pos] / m.atoms[pos]
            r = np.abs(np.sqrt(dens[p]) - np.sqrt(dens[q])) - np.sqrt(dd)
            worst = max(worst, float(r.max()) if r.size else 0.0)
    return {
        "l1_cauchy_moduli": _tail_max(D),
        "uniform_integrability": ui,
        "pointwise_triangle_residual": worst,
        "horizon": N,
    }


def _energy_moduli(E: SymForm, X: np.ndarray) -> list:
    N = X.shape[0]
    QX = np.array([E.matvec(x) for x in X]).reshape(N, -1)
    G = X @ QX.T
    d = np.diag(G)
    D = d[:, None] + d[None, :] - 2 * G
    return _tail_max(np.maximum(D, 0.0))


def _l2_norms(X: np.ndarray, m: AtomicMeasure) -> np.ndarray:
    return np.sqrt((X**2) @ m.atoms)


def subsequence_selection(
    E: SymForm,
    m: AtomicMeasure,
    seq: SequenceSpec,
    j_max: int = 10,
    cauchy_ratio: float = 0.5,
) -> dict:
    """Select ``k_j`` and ``g_j = f_{n_{k_j}}`` with ``E(g_j - phi_{1/k_j}(g_j)) -> 0``.

    Every "for all n" clause is certified over the given finite horizon only.
    Indices in the result are 0-based positions in ``seq``.
    """
    N = len(seq)
    if N == 0:
        raise SelectionFailed("empty sequence")
    X = seq.matrix()
    moduli = _energy_moduli(E, X)
    l2 = _l2_norms(X, m)
    null_moduli = [float(l2[i:].max()) for i in range(N)]
    mid = N // 2
    if moduli[0] > 0 and not moduli[mid] <= cauchy_ratio * moduli[0]:
        raise SelectionFailed(
            f"sequence is not E-Cauchy over the horizon: modulus {moduli[mid]:.3e} at n={mid} "
            f"vs {moduli[0]:.3e} at n=0",
            witness={"energy_moduli": moduli},
        )
    gam = _gammas(E, m, seq)

    def ui(delta):
        return max(knapsack_bound(g, m.atoms, delta) for g in gam)

    # (weak) condition: first position from which m(|f_n| >= 1/k) < 1/k holds to the horizon
    def n_for(k):
        ok = np.array([m(np.abs(x) >= 1.0 / k) < 1.0 / k for x in X])
        if not ok[-1]:
            return None
        bad = np.nonzero(~ok)[0]
        return int(bad[-1]) + 1 if bad.size else 0

    ks, idx, certs = [], [], []
    k_prev = 1
    for j in range(1, j_max + 1):
        lo = max(k_prev, j)
        if ui(1.0 / lo) >= 1.0 / j:
            hi = lo
            while ui(1.0 / hi) >= 1.0 / j:
                hi *= 2
                if hi > 2**40:
                    raise SelectionFailed(f"no k_{j} found", witness={"j": j})
            while hi - lo > 1:
                mid_k = (lo + hi) // 2
                if ui(1.0 / mid_k) >= 1.0 / j:
                    lo = mid_k
                else:
                    hi = mid_k
            k = hi
        else:
            k = lo
        n = n_for(k)
        if n is None:
            raise SelectionFailed(
                f"no n_k with m(|f_n| >= 1/{k}) < 1/{k} within the horizon (j={j})",
                witness={"j": j, "k": k, "energy_moduli": moduli, "l2_moduli": null_moduli},
            )
        g = X[n]
        alpha = 1.0 / k
        rest = g - cutoff_phi_alpha(alpha)(g)
        lhs = eval_form(E, rest, rest)
        mass = float(gam[n][np.abs(g) >= alpha].sum())
        u = cutoff_phi_alpha(alpha)(g)
        certs.append(
            {
                "j": j,
                "k": k,
                "n": n,
                "lhs": lhs,
                "bound8": 8.0 * mass,
                "bound4": 4.0 * mass,
                "proof_path_ok": bool(lhs <= 8.0 * mass + CERT_TOL and 8.0 * mass < 1.0 / j),
                "corollary_path_ok": bool(lhs <= 4.0 * mass + CERT_TOL),
                "energy_g": eval_form(E, g, g),
                "energy_u": eval_form(E, u, u),
                "sup_u": float(np.max(np.abs(u))) if u.size else 0.0,
            }
        )
        ks.append(k)
        idx.append(n)
        k_prev = k
    energies = [eval_form(E, x, x) for x in X]
    return {
        "k": ks,
        "indices": idx,
        "subsequence": [seq.functions[i] for i in idx],
        "certificates": certs,
        "success": all(c["proof_path_ok"] and c["corollary_path_ok"] for c in certs),
        "energy_moduli": moduli,
        "l2_moduli": null_moduli,
        "energies": energies,
        "terminal_energy": energies[-1],
    }


def lsc_report(E: SymForm, seq: SequenceSpec, limit) -> dict:
    """Compare ``E(limit)`` with the tail infimum of ``E(f_n)``.

    ``liminf`` is estimated as the infimum over the second half of the horizon.
    ``holds`` allows the continuity bound ``||Q|| ||f_n - l|| ||f_n + l||``.
    """
    lv = values_on(E.ground, limit)
    X = seq.matrix()
    N = X.shape[0]
    energies = np.array([eval_form(E, x, x) for x in X])
    tail_inf = [float(energies[i:].min()) for i in range(N)]
    dist = np.max(np.abs(X - lv[None, :]), axis=1) if N else np.array([])
    el = eval_form(E, lv, lv)
    tail = slice(N // 2, N)
    liminf = float(energies[tail].min()) if N else math.inf
    allowance = 0.0
    if N:
        i = N // 2 + int(np.argmin(energies[tail]))
        opnorm = float(np.max(np.abs(np.linalg.eigvalsh(E.dense))))
        allowance = opnorm * float(np.linalg.norm(X[i] - lv) * np.linalg.norm(X[i] + lv))
    margin = liminf - el
    return {
        "energy_limit": el,
        "energies": energies.tolist(),
        "tail_infima": tail_inf,
        "sup_distances": dist.tolist(),
        "liminf_estimate": liminf,
        "margin": margin,
        "continuity_allowance": allowance,
        "holds": bool(margin >= -allowance - 1e-12 * (1.0 + abs(el))),
    }
