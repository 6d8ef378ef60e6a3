"""Energy measures, their polarization, energy-dominant measures and densities.

On a finite ground set every subset is measurable and every finitely additive
measure is an atomic measure, so ``Gamma(f)`` is just the vector of its atoms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import Func, GroundSet, SymForm, values_on
from .errors import AbsContinuityViolated, EmptyFamily, NegativeMass
from .lagrangian import _density, require_positive

ABS_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class AtomicMeasure:
    ground: GroundSet
    atoms: np.ndarray
    signed: bool = False

    def __post_init__(self):
        a = np.array(self.atoms, dtype=float).reshape(-1)
        if a.shape[0] != self.ground.size:
            raise ValueError("one atom per ground point is required")
        if not np.all(np.isfinite(a)):
            raise ValueError("atoms must be finite")
        if not self.signed and np.any(a < 0):
            i = int(np.argmin(a))
            raise NegativeMass(
                f"atom at {self.ground.labels[i]} is {a[i]} < 0", witness=self.ground.labels[i]
            )
        a.setflags(write=False)
        object.__setattr__(self, "atoms", a)

    def __call__(self, subset=None) -> float:
        """Mass of a subset (labels, positions, or a boolean mask); whole space if None."""
        if subset is None:
            return float(self.atoms.sum())
        if isinstance(subset, np.ndarray) and subset.dtype == bool:
            return float(self.atoms[subset].sum())
        return float(self.atoms[self.ground.mask(subset)].sum())

    @property
    def total(self) -> float:
        return float(self.atoms.sum())

    def integrate(self, h) -> float:
        return float(values_on(self.ground, h) @ self.atoms)


def _clip_atoms(gamma: np.ndarray) -> np.ndarray:
    # positivity has been checked to tolerance; drop the rounding residue
    return np.maximum(gamma, 0.0)


def energy_measure(E: SymForm, f, pos_tol=None) -> AtomicMeasure:
    u = values_on(E.ground, f)
    gamma = require_positive(E, u, pos_tol)
    return AtomicMeasure(E.ground, _clip_atoms(gamma))


def energy_measure_sup(E: SymForm, f, subset) -> float:
    """Direct optimum ``sup { L_f(h) : 0 <= h <= 1_B }``; the box vertex is ``1_{B, gamma>0}``."""
    u = values_on(E.ground, f)
    gamma = _density(E, u, u)
    mask = subset if isinstance(subset, np.ndarray) and subset.dtype == bool else E.ground.mask(subset)
    return float(np.sum(np.maximum(gamma[mask], 0.0)))


def mutual_energy_measure(E: SymForm, f, g, pos_tol=None) -> AtomicMeasure:
    u, v = values_on(E.ground, f), values_on(E.ground, g)
    plus = require_positive(E, u + v, pos_tol)
    minus = require_positive(E, u - v, pos_tol)
    return AtomicMeasure(E.ground, 0.25 * (plus - minus), signed=True)


def dominant_measure(E: SymForm, family: Sequence, pos_tol=None) -> AtomicMeasure:
    """``sum_n 2^-n Gamma(f_n) / (1 + Gamma(f_n)(X))`` over the (finite) family, n from 1.

    The geometric weights reach the ``ABS_TOL`` zero threshold of
    :func:`check_abs_continuity` after a few dozen members, so long families
    should be trimmed or reordered with the important functions first.
    """
    family = list(family)
    if not family:
        raise EmptyFamily("dominant_measure needs at least one function")
    m = np.zeros(E.ground.size)
    for n, f in enumerate(family, start=1):
        g = _clip_atoms(require_positive(E, values_on(E.ground, f), pos_tol))
        m += 2.0**-n * g / (1.0 + g.sum())
    return AtomicMeasure(E.ground, m)


def check_abs_continuity(nu: AtomicMeasure, m: AtomicMeasure, abs_tol: float = ABS_TOL) -> tuple:
    """Atomwise ``m({x}) = 0 => nu({x}) = 0``; returns ``(ok, first offending point)``."""
    if nu.signed:
        raise ValueError("absolute continuity is only checked for nonnegative measures")
    if nu.ground != m.ground:
        raise ValueError("measures live on different ground sets")
    bad = np.nonzero((m.atoms <= abs_tol) & (nu.atoms > abs_tol))[0]
    if bad.size:
        return False, nu.ground.labels[int(bad[0])]
    return True, None


def carre_du_champ_density(E: SymForm, f, m: AtomicMeasure, pos_tol=None) -> Func:
    """Radon-Nikodym density of ``Gamma(f)`` with respect to ``m``."""
    gam = energy_measure(E, f, pos_tol)
    ok, w = check_abs_continuity(gam, m)
    if not ok:
        raise AbsContinuityViolated(f"Gamma(f) charges {w} where m vanishes", witness=w)
    dens = np.zeros(E.ground.size)
    pos = m.atoms > ABS_TOL
    dens[pos] = gam.atoms[pos] / m.atoms[pos]
    return Func(E.ground, dens)


def measure_triangle_check(E: SymForm, f, g, subset, pos_tol=None) -> float:
    """``max(0, |Gamma(f)(A)^.5 - Gamma(g)(A)^.5| - Gamma(f-g)(A)^.5)``."""
    u, v = values_on(E.ground, f), values_on(E.ground, g)
    mask = subset if isinstance(subset, np.ndarray) and subset.dtype == bool else E.ground.mask(subset)
    a, b, c = (
        float(_clip_atoms(require_positive(E, w, pos_tol))[mask].sum()) for w in (u, v, u - v)
    )
    return max(0.0, abs(math.sqrt(a) - math.sqrt(b)) - math.sqrt(c))
