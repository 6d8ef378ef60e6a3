"""Killing functional, its relativized version and the zero-killing split.

All infima here are linear objectives over the box ``1_{f>0} <= phi <= 1``,
so the optimum sits at a vertex chosen coordinatewise by the sign of the
objective coefficient: coordinates with ``f(x) > 0`` are pinned at 1, free
coordinates take 1 where the coefficient is negative and 0 otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .core import Func, SymForm, eval_form, values_on
from .decomposition import require_markovian
from .errors import NegativeWeight, NonzeroKilling
from .lagrangian import _density, lagrangian_norm

ZERO_KILL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class EnvelopeConstraint:
    lower: np.ndarray  # indicator of {f > 0}
    upper: np.ndarray  # constant 1


def envelope(f) -> EnvelopeConstraint:
    u = f.values if isinstance(f, Func) else np.asarray(f, dtype=float)
    return EnvelopeConstraint((u > 0).astype(float), np.ones_like(u, dtype=float))


def box_minimize(c: np.ndarray, env: EnvelopeConstraint) -> tuple:
    """Minimize ``c . phi`` over ``lower <= phi <= upper``; returns (value, minimizing vertex)."""
    phi = np.where(c < 0, env.upper, env.lower)
    return float(c @ phi), phi


def _kill_nonneg(E: SymForm, u: np.ndarray) -> float:
    if not np.any(u > 0):
        return 0.0
    return box_minimize(E.matvec(u), envelope(u))[0]


def killing_functional(E: SymForm, f) -> float:
    """``K(f) = K(f+) - K(f-)`` with ``K(f) = min { E(f, phi) : 1_{f>0} <= phi <= 1 }`` on f >= 0."""
    u = values_on(E.ground, f)
    return _kill_nonneg(E, np.maximum(u, 0.0)) - _kill_nonneg(E, np.maximum(-u, 0.0))


def _relkill_nonneg(E: SymForm, u: np.ndarray, w: np.ndarray) -> float:
    if not np.any(u > 0):
        return 0.0
    # c(x) = L_{u, delta_x}(w) = Q(uw)(x) + w(x) Qu(x) - u(x) Qw(x)
    c = E.matvec(u * w) + w * E.matvec(u) - u * E.matvec(w)
    return box_minimize(c, envelope(u))[0]


def killing_relativized(E: SymForm, f, h) -> float:
    """``K^h(f) = min { L_{f,phi}(h) : phi in the envelope of f }``, extended by parts."""
    u = values_on(E.ground, f)
    w = values_on(E.ground, h)
    if np.any(w < 0):
        i = int(np.argmin(w))
        raise NegativeWeight(f"h({E.ground.labels[i]}) = {w[i]} < 0", witness=E.ground.labels[i])
    return _relkill_nonneg(E, np.maximum(u, 0.0), w) - _relkill_nonneg(E, np.maximum(-u, 0.0), w)


def killing_split(E: SymForm) -> tuple:
    """Split off the killing part: returns ``(Q, K)`` with ``Q(f,g) = E(f,g) - K(fg)``.

    ``K`` is returned as its values on point indicators, which determine it
    because K is additive once the unit contraction operates.
    """
    require_markovian(E)
    n = E.ground.size
    kvec = np.zeros(n)
    e = np.zeros(n)
    for i in range(n):
        e[i] = 1.0
        kvec[i] = killing_functional(E, e)
        e[i] = 0.0
    if E.is_sparse:
        Q = (E.coeffs - sp.diags(kvec)).tocsr()
    else:
        Q = np.array(E.dense, dtype=float)
        Q[np.diag_indices(n)] -= kvec
    return SymForm(E.ground, Q), Func(E.ground, kvec)


def _require_zero_killing(E: SymForm):
    n = E.ground.size
    scale = ZERO_KILL_TOL * (1.0 + float(np.max(np.abs(E.diagonal))))
    probes = [("1", np.ones(n))] + [
        (E.ground.labels[i], np.eye(1, n, i).ravel()) for i in range(n)
    ]
    for name, p in probes:
        k = killing_functional(E, p)
        if abs(k) > scale:
            raise NonzeroKilling(f"K({name}) = {k:.3e} is not zero", witness=(name, k))


def sup_representation(E: SymForm, f) -> float:
    """``1/2 max { L_f(phi) : 1_{f^2>0} <= phi <= 1 }``; equals E(f) under zero killing."""
    _require_zero_killing(E)
    u = values_on(E.ground, f)
    gamma = _density(E, u, u)
    phi = np.where(u != 0, 1.0, (gamma > 0).astype(float))
    return 0.5 * float(gamma @ phi)


def energy_identity_report(E: SymForm, f) -> dict:
    """Compute ``E_L(f)``, ``Q(f)``, ``K(f^2)`` and ``E(f)`` separately and test the candidate identities.

    On killing-bearing forms the two identities ``E_L = Q - K(f^2)`` and
    ``E = Q + K(f^2)`` cannot both hold; the report says which do.
    """
    u = values_on(E.ground, f)
    Qform, _ = killing_split(E)
    e = eval_form(E, u, u)
    el = 0.5 * lagrangian_norm(E, u)
    q = eval_form(Qform, u, u)
    k = killing_functional(E, u * u)
    tol = 1e-10 * (1.0 + abs(e))
    cands = {
        "E_L == Q - K(f^2)": el - (q - k),
        "E == Q + K(f^2)": e - (q + k),
        "E_L == E": el - e,
        "E_L == Q + K(f^2)/2": el - (q + 0.5 * k),
    }
    return {
        "E": e,
        "E_L": el,
        "Q": q,
        "K(f^2)": k,
        "identities": {name: {"residual": r, "holds": abs(r) <= tol} for name, r in cands.items()},
    }
