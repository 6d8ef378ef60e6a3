"""Lagrangian functionals ``L_f(h) = 2E(fh, f) - E(f^2, h)`` and derived quantities."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Func, GroundSet, PiecewiseLinearContraction, SymForm, eval_form, values_on
from .errors import InvalidContraction, NotPositive

POS_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class LagrangianDensity:
    """Finite representation of ``L_{f,g}``: ``gamma[x] = L_{f,g}(delta_x)``."""

    ground: GroundSet
    gamma: np.ndarray

    def __call__(self, h) -> float:
        return float(values_on(self.ground, h) @ self.gamma)

    def as_func(self) -> Func:
        return Func(self.ground, self.gamma)


def _lagrange_single(E: SymForm, u: np.ndarray, h: np.ndarray) -> float:
    return 2.0 * eval_form(E, u * h, u) - eval_form(E, u * u, h)


def lagrangian_apply(E: SymForm, f, g, h) -> float:
    """``L_{f,g}(h)`` by polarization of the defining expression."""
    u = values_on(E.ground, f)
    v = values_on(E.ground, g)
    w = values_on(E.ground, h)
    return 0.25 * (_lagrange_single(E, u + v, w) - _lagrange_single(E, u - v, w))


def _density(E: SymForm, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    # L_{f,g}(delta_x) = f(x) (Qg)(x) + g(x) (Qf)(x) - (Q(fg))(x)
    return u * E.matvec(v) + v * E.matvec(u) - E.matvec(u * v)


def lagrangian_density(E: SymForm, f, g) -> LagrangianDensity:
    u = values_on(E.ground, f)
    v = values_on(E.ground, g)
    return LagrangianDensity(E.ground, _density(E, u, v))


def _pos_tol(gamma: np.ndarray, pos_tol) -> float:
    if pos_tol is not None:
        return pos_tol
    return POS_TOL * ((float(np.max(np.abs(gamma))) if gamma.size else 0.0) + 1.0)


def check_positivity(E: SymForm, f, pos_tol: float | None = None) -> tuple:
    """``(True, None)`` if the density of ``L_f`` is nonnegative, else ``(False, worst point)``."""
    u = values_on(E.ground, f)
    gamma = _density(E, u, u)
    tol = _pos_tol(gamma, pos_tol)
    if gamma.size == 0 or gamma.min() >= -tol:
        return True, None
    return False, E.ground.labels[int(np.argmin(gamma))]


def require_positive(E: SymForm, u: np.ndarray, pos_tol=None) -> np.ndarray:
    gamma = _density(E, u, u)
    tol = _pos_tol(gamma, pos_tol)
    if gamma.size and gamma.min() < -tol:
        i = int(np.argmin(gamma))
        raise NotPositive(
            f"Lagrangian density is {gamma[i]:.3e} < 0 at {E.ground.labels[i]}",
            witness=E.ground.labels[i],
        )
    return gamma


def lagrangian_norm(E: SymForm, f) -> float:
    """Dual sup-norm of ``L_f``; attained at ``h = sign(gamma)``."""
    u = values_on(E.ground, f)
    return float(np.sum(np.abs(_density(E, u, u))))


def energy_form(E: SymForm, f, g=None, pos_tol=None) -> float:
    """Polarized ``E_L(f, g)`` with ``E_L(u) = ||L_u|| / 2``; refuses non-positive Lagrangians."""
    u = values_on(E.ground, f)
    v = u if g is None else values_on(E.ground, g)
    plus = require_positive(E, u + v, pos_tol)
    minus = require_positive(E, u - v, pos_tol)
    return 0.25 * (0.5 * np.sum(np.abs(plus)) - 0.5 * np.sum(np.abs(minus)))


def check_leibniz(E: SymForm, f, g, h) -> float:
    u, v, w = (values_on(E.ground, x) for x in (f, g, h))
    return abs(
        2.0 * eval_form(E, u * v, w) - lagrangian_apply(E, u, w, v) - lagrangian_apply(E, v, w, u)
    )


def check_contraction_domination(
    E: SymForm, f, F: PiecewiseLinearContraction, pos_tol: float | None = None
) -> tuple:
    """Check ``L_{F(f)} <= L_f`` pointwise on densities; returns ``(ok, worst point)``."""
    if not isinstance(F, PiecewiseLinearContraction):
        raise InvalidContraction("expected a PiecewiseLinearContraction")
    u = values_on(E.ground, f)
    Fu = F(u)
    gap = _density(E, Fu, Fu) - _density(E, u, u)
    i = int(np.argmax(gap))
    tol = _pos_tol(_density(E, u, u), pos_tol)
    return bool(gap[i] <= tol), E.ground.labels[i]


def bilinear_sqrt_residual(E: SymForm, f, g, h) -> float:
    """``max(0, |L_f(h)^.5 - L_g(h)^.5| - L_{f-g}(h)^.5)`` for ``h >= 0``."""
    u, v, w = (values_on(E.ground, x) for x in (f, g, h))
    a = max(float(_density(E, u, u) @ w), 0.0)
    b = max(float(_density(E, v, v) @ w), 0.0)
    c = max(float(_density(E, u - v, u - v) @ w), 0.0)
    return max(0.0, abs(math.sqrt(a) - math.sqrt(b)) - math.sqrt(c))


def leibniz_estimate_slack(E: SymForm, f, g) -> float:
    """``E(f)^.5 ||g|| + E(g)^.5 ||f|| - E(fg)^.5``; nonnegative for Markovian forms."""
    u, v = values_on(E.ground, f), values_on(E.ground, g)
    ef = max(eval_form(E, u, u), 0.0)
    eg = max(eval_form(E, v, v), 0.0)
    efg = max(eval_form(E, u * v, u * v), 0.0)
    nu = float(np.max(np.abs(u))) if u.size else 0.0
    nv = float(np.max(np.abs(v))) if v.size else 0.0
    return math.sqrt(ef) * nv + math.sqrt(eg) * nu - math.sqrt(efg)
