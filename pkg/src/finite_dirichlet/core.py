"""Ground sets, functions, symmetric forms and normal contractions.

The function algebra on a ground set ``X`` is always the full space of real
functions on ``X``; it contains the constants and every indicator, so no
separate "domain" object is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import (
    GroundSetMismatch,
    InvalidContraction,
    NotPSD,
    NotStrictlyPositive,
)

PSD_TOL = 1e-10


@dataclass(frozen=True)
class GroundSet:
    labels: tuple

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        if len(labels) == 0:
            raise ValueError("a ground set needs at least one point")
        if len(set(labels)) != len(labels):
            raise ValueError("ground set labels must be distinct")
        object.__setattr__(self, "labels", labels)

    @classmethod
    def range(cls, n: int, prefix: str = "p") -> "GroundSet":
        return cls(tuple(f"{prefix}{i}" for i in range(n)))

    @classmethod
    def empty(cls) -> "GroundSet":
        # Only the Gelfand transfer of an all-zero generator family produces this.
        obj = object.__new__(cls)
        object.__setattr__(obj, "labels", ())
        return obj

    @property
    def size(self) -> int:
        return len(self.labels)

    def __len__(self):
        return len(self.labels)

    def index(self, label) -> int:
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise KeyError(f"unknown point {label!r}") from None

    def mask(self, subset: Iterable) -> np.ndarray:
        """Boolean mask of a subset given by labels or integer positions."""
        m = np.zeros(self.size, dtype=bool)
        for x in subset:
            m[x if isinstance(x, (int, np.integer)) else self.index(x)] = True
        return m


@dataclass(frozen=True, eq=False)
class Func:
    """A real function on a ground set, stored as a read-only value vector."""

    ground: GroundSet
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.shape[0] != self.ground.size:
            raise GroundSetMismatch(
                f"function has {v.shape[0]} values, ground set has {self.ground.size} points"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("function values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def const(cls, ground: GroundSet, c: float) -> "Func":
        return cls(ground, np.full(ground.size, float(c)))

    @classmethod
    def zero(cls, ground: GroundSet) -> "Func":
        return cls(ground, np.zeros(ground.size))

    @classmethod
    def delta(cls, ground: GroundSet, x) -> "Func":
        return cls.indicator(ground, [x])

    @classmethod
    def indicator(cls, ground: GroundSet, subset: Iterable) -> "Func":
        return cls(ground, ground.mask(subset).astype(float))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def _other(self, other):
        if isinstance(other, Func):
            if other.ground != self.ground:
                raise GroundSetMismatch("functions live on different ground sets")
            return other.values
        return other

    def __add__(self, other):
        return Func(self.ground, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return Func(self.ground, self.values - self._other(other))

    def __rsub__(self, other):
        return Func(self.ground, self._other(other) - self.values)

    def __mul__(self, other):
        return Func(self.ground, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, c):
        return Func(self.ground, self.values / c)

    def __neg__(self):
        return Func(self.ground, -self.values)

    def __abs__(self):
        return Func(self.ground, np.abs(self.values))

    def __pow__(self, p):
        return Func(self.ground, self.values**p)

    def positive_part(self) -> "Func":
        return Func(self.ground, np.maximum(self.values, 0.0))

    def negative_part(self) -> "Func":
        return Func(self.ground, np.maximum(-self.values, 0.0))

    def __repr__(self):
        return f"Func({dict(zip(self.ground.labels, self.values.tolist()))})"


def values_on(ground: GroundSet, f) -> np.ndarray:
    """Value vector of ``f`` on ``ground``; accepts a Func or anything array-like."""
    if isinstance(f, Func):
        if f.ground != ground:
            raise GroundSetMismatch("function and form live on different ground sets")
        return f.values
    v = np.asarray(f, dtype=float).reshape(-1)
    if v.shape[0] != ground.size:
        raise GroundSetMismatch(
            f"expected {ground.size} values, got {v.shape[0]}"
        )
    return v


def _lift(f, values):
    return Func(f.ground, values) if isinstance(f, Func) else values


@dataclass(frozen=True, eq=False)
class SymForm:
    """Symmetric nonnegative definite bilinear form ``E(f, g) = f^T Q g``.

    ``coeffs`` may be a dense array or a scipy sparse matrix; large path-graph
    discretizations are kept sparse. The matrix is symmetrized on construction
    and checked to be positive semidefinite within ``1e-10`` times its largest
    diagonal entry.
    """

    ground: GroundSet
    coeffs: object
    check_psd: bool = field(default=True, repr=False)

    def __post_init__(self):
        Q = self.coeffs
        n = self.ground.size
        if sp.issparse(Q):
            Q = sp.csr_matrix(Q, dtype=float)
            Q = ((Q + Q.T) * 0.5).tocsr()
            if not np.all(np.isfinite(Q.data)):
                raise ValueError("form coefficients must be finite")
        else:
            Q = np.array(Q, dtype=float)
            if n == 0:
                Q = Q.reshape(0, 0)
            if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
                raise ValueError("form coefficients must be a square matrix")
            if not np.all(np.isfinite(Q)):
                raise ValueError("form coefficients must be finite")
            Q = (Q + Q.T) / 2.0
            Q.setflags(write=False)
        if Q.shape != (n, n):
            raise GroundSetMismatch(
                f"matrix side {Q.shape[0]} does not match ground set size {n}"
            )
        object.__setattr__(self, "coeffs", Q)
        if self.check_psd and n:
            self._check_psd()

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.coeffs)

    @property
    def dense(self) -> np.ndarray:
        if self.is_sparse:
            return self.coeffs.toarray()
        return self.coeffs

    @property
    def diagonal(self) -> np.ndarray:
        return np.asarray(self.coeffs.diagonal(), dtype=float)

    @property
    def psd_tol(self) -> float:
        d = self.diagonal
        return PSD_TOL * (float(np.max(np.abs(d))) if d.size else 0.0)

    def _check_psd(self):
        tol = self.psd_tol
        Q = self.coeffs
        if self.is_sparse:
            absQ = abs(Q)
            off = np.asarray(absQ.sum(axis=1)).ravel() - np.abs(self.diagonal)
            if np.all(self.diagonal - off >= -tol):
                return  # diagonally dominant
            from scipy.sparse.linalg import eigsh

            lam = float(eigsh(Q, k=1, which="SA", return_eigenvectors=False)[0])
            where = None
        else:
            lam_all, vecs = np.linalg.eigh(Q)
            lam = float(lam_all[0])
            where = vecs[:, 0]
        if lam < -tol:
            raise NotPSD(
                f"form is not nonnegative definite (smallest eigenvalue {lam:.3e})",
                witness=None if where is None else where.tolist(),
            )

    def matvec(self, u: np.ndarray) -> np.ndarray:
        return np.asarray(self.coeffs @ u, dtype=float).reshape(-1)

    def __call__(self, f, g=None) -> float:
        return eval_form(self, f, f if g is None else g)


def eval_form(E: SymForm, f, g) -> float:
    u = values_on(E.ground, f)
    v = values_on(E.ground, g)
    return float(u @ E.matvec(v))


# ---------------------------------------------------------------------------
# contractions


def _t_alpha_values(x: np.ndarray, alpha: float) -> np.ndarray:
    if alpha >= 0:
        return np.minimum(np.maximum(x, 0.0), alpha)
    return np.maximum(np.minimum(x, 0.0), alpha)


def apply_T_alpha(f, alpha: float):
    """Pointwise ``x+ ^ alpha`` for alpha >= 0 and ``(-x-) v alpha`` for alpha <= 0."""
    x = f.values if isinstance(f, Func) else np.asarray(f, dtype=float)
    return _lift(f, _t_alpha_values(x, float(alpha)))


@dataclass(frozen=True)
class PiecewiseLinearContraction:
    """Piecewise-linear F anchored at ``F(0) = offset``.

    ``slopes[i]`` is the slope on the i-th piece, pieces being delimited by the
    strictly increasing ``breakpoints``. A normal contraction needs offset 0
    and every slope in [-1, 1]; anything else raises InvalidContraction.
    """

    breakpoints: tuple = ()
    slopes: tuple = (1.0,)
    offset: float = 0.0

    def __post_init__(self):
        b = tuple(float(x) for x in self.breakpoints)
        s = tuple(float(x) for x in self.slopes)
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "slopes", s)
        if len(s) != len(b) + 1:
            raise InvalidContraction("need exactly one more slope than breakpoints")
        if any(not math.isfinite(x) for x in b + s):
            raise InvalidContraction("breakpoints and slopes must be finite")
        if any(b[i] >= b[i + 1] for i in range(len(b) - 1)):
            raise InvalidContraction("breakpoints must be strictly increasing")
        bad = [i for i, x in enumerate(s) if abs(x) > 1.0]
        if bad:
            raise InvalidContraction(
                f"slope {s[bad[0]]} on piece {bad[0]} exceeds 1 in absolute value",
                witness=bad[0],
            )
        if self.offset != 0.0:
            raise InvalidContraction(f"F(0) = {self.offset} but must be 0", witness=0.0)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        edges = (-np.inf,) + self.breakpoints + (np.inf,)
        out = np.full(x.shape, float(self.offset))
        for s, lo, hi in zip(self.slopes, edges[:-1], edges[1:]):
            if s:
                out = out + s * (np.clip(x, lo, hi) - min(max(0.0, lo), hi))
        return out

    @classmethod
    def identity(cls):
        return cls((), (1.0,))

    @classmethod
    def absolute(cls):
        return cls((0.0,), (-1.0, 1.0))

    @classmethod
    def clamp(cls, lo: float, hi: float):
        """x -> min(max(x, lo), hi) with lo <= 0 <= hi."""
        if not lo <= 0.0 <= hi:
            raise InvalidContraction("a clamp must contain 0 in [lo, hi]")
        knots, slopes = [], [0.0 if lo > -np.inf else 1.0]
        if lo == hi:
            return cls((0.0,), (0.0, 0.0))
        if lo > -np.inf:
            knots.append(lo)
            slopes.append(1.0)
        if hi < np.inf:
            knots.append(hi)
            slopes.append(0.0)
        return cls(tuple(knots), tuple(slopes))

    @classmethod
    def t_alpha(cls, alpha: float):
        return cls.clamp(0.0, alpha) if alpha >= 0 else cls.clamp(alpha, 0.0)

    @classmethod
    def random(cls, rng: np.random.Generator, n_knots: int = 4, scale: float = 2.0):
        knots = np.unique(rng.uniform(-scale, scale, size=n_knots))
        slopes = rng.uniform(-1.0, 1.0, size=knots.size + 1)
        return cls(tuple(knots), tuple(slopes))


def apply_contraction(f, F: PiecewiseLinearContraction):
    if not isinstance(F, PiecewiseLinearContraction):
        raise InvalidContraction("expected a PiecewiseLinearContraction")
    x = f.values if isinstance(f, Func) else np.asarray(f, dtype=float)
    return _lift(f, F(x))


# ---------------------------------------------------------------------------
# tranches and cutoffs


def tranche_decompose(f: Func, n: int) -> dict:
    """Split ``f`` into level slices of height at most ``2**-n``.

    Returns ``{k: f_k}`` for ``k = -2**n N, ..., 2**n N - 1`` where N is the
    smallest integer strictly greater than ``||f||_sup``. The slices sum to f.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    x = f.values if isinstance(f, Func) else np.asarray(f, dtype=float)
    N = math.floor(float(np.max(np.abs(x))) if x.size else 0.0) + 1
    step = 2.0**-n
    out = {}
    for k in range(-(2**n) * N, (2**n) * N):
        lo = _t_alpha_values(x, k * step)
        hi = _t_alpha_values(x, (k + 1) * step)
        out[k] = _lift(f, hi - lo if k >= 0 else lo - hi)
    return out


def chi_cutoff(chi, k: int):
    """``k(k+1) (chi ^ 1/k - chi ^ 1/(k+1))``: 1 on {chi > 1/k}, 0 off {chi > 1/(k+1)}."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    x = chi.values if isinstance(chi, Func) else np.asarray(chi, dtype=float)
    if np.any(x <= 0):
        i = int(np.argmax(x <= 0))
        w = chi.ground.labels[i] if isinstance(chi, Func) else i
        raise NotStrictlyPositive(f"chi({w}) = {x[i]} is not positive", witness=w)
    ramp = k * (k + 1) * (np.minimum(x, 1.0 / k) - np.minimum(x, 1.0 / (k + 1)))
    # pin the plateaus so rounding cannot move them off 0 and 1
    out = np.where(x > 1.0 / k, 1.0, np.where(x <= 1.0 / (k + 1), 0.0, np.clip(ramp, 0.0, 1.0)))
    return _lift(chi, out)


# ---------------------------------------------------------------------------


def _sample_functions(rng: np.random.Generator, n: int, trials: int) -> np.ndarray:
    half = trials // 2
    a = rng.normal(scale=1.5, size=(half, n))
    b = rng.integers(-2, 3, size=(trials - half, n)).astype(float)
    return np.vstack([a, b])


def check_unit_contraction_operates(E: SymForm, trials: int = 1000, rng_seed: int = 0) -> dict:
    """Sample ``E(T1 f) <= E(f)`` and cross-check with the exact jump/killing sign test."""
    from .decomposition import beurling_deny

    rng = np.random.default_rng(rng_seed)
    samples = _sample_functions(rng, E.ground.size, trials)
    worst, witness, count = 0.0, None, 0
    for u in samples:
        e = eval_form(E, u, u)
        t = _t_alpha_values(u, 1.0)
        gap = eval_form(E, t, t) - e
        if gap > PSD_TOL * (1.0 + abs(e)):
            count += 1
            if gap > worst:
                worst, witness = gap, u.tolist()
    markovian = beurling_deny(E).markovian
    return {
        "trials": int(trials),
        "violations": count,
        "max_violation": worst,
        "witness": witness,
        "markovian": markovian,
        # a violation proves non-Markovianity; no violation is only evidence
        "consistent": not (markovian and count > 0),
    }
