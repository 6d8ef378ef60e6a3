"""Gelfand spectrum of the algebra generated by finitely many functions.

On a finite set the (non-unital) algebra generated by real functions
``g_1, ..., g_r`` consists of the functions that are constant on the classes
of "all generators agree" and vanish where every generator vanishes. Its
nonzero characters are the evaluations at those classes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Func, GroundSet, SymForm, values_on
from .errors import AbsContinuityViolated, EmptyGenerators, NotInAlgebra
from .measures import AtomicMeasure, check_abs_continuity, dominant_measure, energy_measure


@dataclass(frozen=True, eq=False)
class SpectrumModel:
    ground: GroundSet
    classes: tuple  # tuple of tuples of point indices
    dropped: tuple
    evaluation_map: np.ndarray  # point index -> class index, -1 if dropped

    @property
    def size(self) -> int:
        return len(self.classes)

    def class_labels(self) -> tuple:
        return tuple("{" + ",".join(self.ground.labels[i] for i in c) + "}" for c in self.classes)

    def spectrum_ground(self) -> GroundSet:
        if not self.classes:
            return GroundSet.empty()
        return GroundSet(self.class_labels())

    def indicator_matrix(self) -> np.ndarray:
        P = np.zeros((self.ground.size, self.size))
        for c, pts in enumerate(self.classes):
            P[list(pts), c] = 1.0
        return P

    def lift(self, fhat) -> Func:
        """Function on X that is constant on classes and zero on dropped points."""
        v = np.asarray(fhat.values if isinstance(fhat, Func) else fhat, dtype=float)
        return Func(self.ground, self.indicator_matrix() @ v)


def spectrum(ground: GroundSet, generators: Sequence) -> SpectrumModel:
    gens = [values_on(ground, g) for g in generators]
    if not gens:
        raise EmptyGenerators("at least one generator is required")
    G = np.array(gens).T  # points x generators
    classes, key_to_class = [], {}
    emap = np.full(ground.size, -1, dtype=int)
    dropped = []
    for i, row in enumerate(G):
        if not np.any(row != 0):
            dropped.append(i)
            continue
        key = tuple(row.tolist())
        if key not in key_to_class:
            key_to_class[key] = len(classes)
            classes.append([])
        c = key_to_class[key]
        classes[c].append(i)
        emap[i] = c
    return SpectrumModel(ground, tuple(tuple(c) for c in classes), tuple(dropped), emap)


def gelfand_transform(model: SpectrumModel, f) -> Func:
    u = values_on(model.ground, f)
    labels = model.ground.labels
    for i in model.dropped:
        if u[i] != 0:
            raise NotInAlgebra(
                f"f({labels[i]}) = {u[i]} but every generator vanishes there", witness=(labels[i],)
            )
    vals = []
    for pts in model.classes:
        v0 = u[pts[0]]
        for i in pts[1:]:
            if u[i] != v0:
                raise NotInAlgebra(
                    f"f differs on {labels[pts[0]]} and {labels[i]} which no generator separates",
                    witness=(labels[pts[0]], labels[i]),
                )
        vals.append(v0)
    return Func(model.spectrum_ground(), np.array(vals, dtype=float))


def transfer_form(E: SymForm, model: SpectrumModel) -> SymForm:
    """``Qhat(C, C') = E(1_C, 1_C')`` over the surviving classes."""
    if E.ground != model.ground:
        raise ValueError("form and spectrum model live on different ground sets")
    P = model.indicator_matrix()
    Qhat = P.T @ np.asarray(E.coeffs @ P)
    # summing over a class can cancel to rounding residue; judge it on the source scale
    Qhat[np.abs(Qhat) <= E.psd_tol] = 0.0
    return SymForm(model.spectrum_ground(), Qhat)


def transfer_dominant_measure(E: SymForm, model: SpectrumModel, family: Sequence) -> AtomicMeasure:
    """Dominant measure of the transferred form over the transformed family.

    Each transferred energy measure of a family member is checked to be
    absolutely continuous with respect to the result.
    """
    Ehat = transfer_form(E, model)
    if model.size == 0:
        return AtomicMeasure(Ehat.ground, np.zeros(0))
    fam = [gelfand_transform(model, f) for f in family]
    m = dominant_measure(Ehat, fam)
    for f in fam:
        ok, w = check_abs_continuity(energy_measure(Ehat, f), m)
        if not ok:
            raise AbsContinuityViolated(f"transferred energy measure charges {w}", witness=w)
    return m
