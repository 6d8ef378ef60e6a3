"""Jump/killing decomposition of finite forms and pushforward coordinate forms.

On a finite ground set every symmetric form splits as

    E(f) = 1/2 sum_{x,y} J(x,y) (f(x) - f(y))^2 + sum_x kappa(x) f(x)^2

with ``J(x,y) = -Q(x,y)`` off the diagonal and ``kappa`` the row sums of Q.
There is no strongly local part on a finite set. The form is Markovian
exactly when J and kappa are entrywise nonnegative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .core import GroundSet, PiecewiseLinearContraction, SymForm, eval_form, values_on
from .errors import NonpositiveAlpha, NotMarkovian
from .lagrangian import lagrangian_density


@dataclass(frozen=True, eq=False)
class JumpKill:
    ground: GroundSet
    J: object  # dense ndarray or csr matrix, zero diagonal
    kappa: np.ndarray
    tol: float = 0.0  # sign tolerance; row sums carry rounding

    @property
    def markovian(self) -> bool:
        Jmin = self.J.min() if sp.issparse(self.J) else (self.J.min() if self.J.size else 0.0)
        kmin = self.kappa.min() if self.kappa.size else 0.0
        return bool(Jmin >= -self.tol and kmin >= -self.tol)

    def negative_entries(self) -> list:
        """Offending (x, y) jump pairs and x killing points, as labels."""
        labels = self.ground.labels
        J = self.J.toarray() if sp.issparse(self.J) else self.J
        out = [("jump", labels[i], labels[j]) for i, j in zip(*np.nonzero(np.triu(J) < -self.tol))]
        out += [("killing", labels[i]) for i in np.nonzero(self.kappa < -self.tol)[0]]
        return out

    def to_matrix(self):
        if sp.issparse(self.J):
            deg = np.asarray(self.J.sum(axis=1)).ravel()
            return (sp.diags(deg + self.kappa) - self.J).tocsr()
        return np.diag(self.J.sum(axis=1) + self.kappa) - self.J

    def to_form(self) -> SymForm:
        return SymForm(self.ground, self.to_matrix())

    def energy(self, f) -> float:
        u = values_on(self.ground, f)
        if sp.issparse(self.J):
            C = self.J.tocoo()
            jump = 0.5 * float(np.sum(C.data * (u[C.row] - u[C.col]) ** 2))
        else:
            jump = 0.5 * float(np.sum(self.J * (u[:, None] - u[None, :]) ** 2))
        return jump + float(np.sum(self.kappa * u**2))

    def carre(self, f) -> np.ndarray:
        """Closed-form density ``sum_y J(x,y)(f(x)-f(y))^2 + kappa(x) f(x)^2``."""
        u = values_on(self.ground, f)
        if sp.issparse(self.J):
            C = self.J.tocoo()
            jump = np.bincount(C.row, C.data * (u[C.row] - u[C.col]) ** 2, minlength=u.size)
        else:
            jump = np.sum(self.J * (u[:, None] - u[None, :]) ** 2, axis=1)
        return jump + self.kappa * u**2


def beurling_deny(E: SymForm) -> JumpKill:
    Q = E.coeffs
    if E.is_sparse:
        J = (-(Q - sp.diags(Q.diagonal()))).tocsr()
        J.eliminate_zeros()
        kappa = np.asarray(Q.sum(axis=1)).ravel()
    else:
        J = -Q.copy()
        np.fill_diagonal(J, 0.0)
        kappa = Q.sum(axis=1)
    return JumpKill(E.ground, J, kappa, E.psd_tol)


def require_markovian(E: SymForm) -> JumpKill:
    bd = beurling_deny(E)
    if not bd.markovian:
        bad = bd.negative_entries()
        raise NotMarkovian(f"form is not Markovian: {bad[0]}", witness=bad[0])
    return bd


@dataclass(frozen=True, eq=False)
class CoordinateForm:
    """Pushforward ``E^f(F, G) = E(F(f), G(f))`` onto the distinct values of f."""

    range_values: np.ndarray
    form: SymForm
    value_map: np.ndarray  # point index -> index into range_values

    def energy(self, F, G=None) -> float:
        """Energy of functions given as value vectors (or callables) on range_values."""
        u = F(self.range_values) if callable(F) else np.asarray(F, dtype=float)
        v = u if G is None else (G(self.range_values) if callable(G) else np.asarray(G, dtype=float))
        return eval_form(self.form, u, v)

    def density(self, F) -> np.ndarray:
        """Lagrangian density of F in the pushforward form, indexed by range value."""
        u = F(self.range_values) if callable(F) else np.asarray(F, dtype=float)
        return lagrangian_density(self.form, u, u).gamma


def coordinate_form(E: SymForm, f) -> CoordinateForm:
    u = values_on(E.ground, f)
    rv, inv = np.unique(u, return_inverse=True)
    P = sp.csr_matrix((np.ones(u.size), (np.arange(u.size), inv)), shape=(u.size, rv.size))
    Qhat = P.T @ (E.coeffs @ P)
    Qhat = Qhat.toarray() if sp.issparse(Qhat) else np.asarray(Qhat)
    ground = GroundSet(tuple(repr(float(x)) for x in rv))
    return CoordinateForm(rv, SymForm(ground, Qhat, check_psd=False), inv)


def cutoff_phi_alpha(alpha: float) -> PiecewiseLinearContraction:
    """Clamp at +-2 alpha: identity on [-alpha, alpha], constant beyond +-2 alpha, 1-Lipschitz."""
    if not alpha > 0:
        raise NonpositiveAlpha(f"alpha must be positive, got {alpha}")
    return PiecewiseLinearContraction.clamp(-2.0 * alpha, 2.0 * alpha)


def cutoff_estimate_check(E: SymForm, f, alpha: float) -> tuple:
    """Return ``(E(f - phi_alpha(f)), 4 Gamma(f)({|f| >= alpha}))``.

    The sharper bound with constant 1 instead of 4 also holds on finite
    forms; use :func:`cutoff_estimate_terms` to see both.
    """
    t = cutoff_estimate_terms(E, f, alpha)
    return t["lhs"], 4.0 * t["gamma_mass"]


def cutoff_estimate_terms(E: SymForm, f, alpha: float) -> dict:
    require_markovian(E)
    u = values_on(E.ground, f)
    phi = cutoff_phi_alpha(alpha)
    rest = u - phi(u)
    gamma = lagrangian_density(E, u, u).gamma
    mass = float(np.sum(gamma[np.abs(u) >= alpha]))
    return {"lhs": eval_form(E, rest, rest), "gamma_mass": mass}
