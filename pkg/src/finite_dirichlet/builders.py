"""Model constructors: path-graph discretizations, random forms, test sequences."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .core import Func, GroundSet, SymForm
from .decomposition import JumpKill, beurling_deny
from .dirichlet import SequenceSpec

SPARSE_ABOVE = 2000


def path_graph(N: int, sparse: bool | None = None) -> tuple:
    """Grid of N points on [0, 1] with jump weight 1/h between neighbours.

    ``E(f) = sum_i (f_{i+1} - f_i)^2 / h`` is the Riemann discretization of
    the Dirichlet integral and is exact for affine f.
    """
    if N < 2:
        raise ValueError("path_graph needs N >= 2")
    if sparse is None:
        sparse = N > SPARSE_ABOVE
    h = 1.0 / (N - 1)
    w = np.full(N - 1, 1.0 / h)
    deg = np.zeros(N)
    deg[:-1] += w
    deg[1:] += w
    Q = sp.diags([deg, -w, -w], [0, -1, 1], format="csr")
    ground = GroundSet.range(N, prefix="x")
    form = SymForm(ground, Q if sparse else Q.toarray())
    grid = Func(ground, np.linspace(0.0, 1.0, N))
    return form, grid


def from_jump_kill(ground: GroundSet, J: np.ndarray, kappa: np.ndarray) -> SymForm:
    J = np.array(J, dtype=float)
    np.fill_diagonal(J, 0.0)
    return JumpKill(ground, (J + J.T) / 2.0, np.asarray(kappa, dtype=float)).to_form()


def random_markovian(N: int, edge_density: float = 0.5, kappa_scale: float = 0.0, seed: int = 0) -> SymForm:
    if not 0.0 <= edge_density <= 1.0:
        raise ValueError("edge_density must lie in [0, 1]")
    if kappa_scale < 0:
        raise ValueError("kappa_scale must be nonnegative")
    rng = np.random.default_rng(seed)
    mask = np.triu(rng.random((N, N)) < edge_density, k=1)
    J = np.where(mask, rng.uniform(0.0, 1.0, size=(N, N)), 0.0)
    J = J + J.T
    kappa = kappa_scale * rng.uniform(0.0, 1.0, size=N)
    return from_jump_kill(GroundSet.range(N), J, kappa)


def random_symmetric(N: int, seed: int = 0, rank: int | None = None) -> SymForm:
    """Random PSD form ``A A^T``; typically not Markovian."""
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(N, rank or N))
    return SymForm(GroundSet.range(N), A @ A.T)


def random_nonmarkovian(N: int, seed: int = 0) -> SymForm:
    """Random PSD form with at least one negative jump or killing weight."""
    rng = np.random.default_rng(seed)
    while True:
        A = rng.integers(-2, 3, size=(N, N)).astype(float)
        E = SymForm(GroundSet.range(N), A @ A.T)
        if not beurling_deny(E).markovian:
            return E


def spike_sequence(N: int, count: int, unit_height: bool = False) -> SequenceSpec:
    """Triangular spikes on path_graph(N) centred at the grid point nearest 1/2.

    Spike n (n = 1..count) has height 1/n (or 1 with ``unit_height``) and
    half-width ``max(h, 1/(2n))`` rounded to the grid (and kept inside it), so
    its energy is exactly ``2 height^2 / halfwidth``.
    """
    if count > N / 4:
        raise ValueError("count must be at most N/4")
    _, grid = path_graph(N, sparse=True)
    h = 1.0 / (N - 1)
    ground = grid.ground
    c = int(round(0.5 / h))
    x = np.arange(N)
    fs, energies, widths = [], [], []
    for n in range(1, count + 1):
        height = 1.0 if unit_height else 1.0 / n
        steps = min(max(1, int(round(1.0 / (2 * n) / h))), c, N - 1 - c)
        vals = height * np.maximum(0.0, 1.0 - np.abs(x - c) / steps)
        fs.append(Func(ground, vals))
        hw = steps * h
        widths.append(hw)
        energies.append(2.0 * height**2 / hw)
    meta = {
        "kind": "spike_sequence",
        "N": N,
        "count": count,
        "unit_height": unit_height,
        "half_widths": widths,
        "closed_form_energies": energies,
        "cauchy": not unit_height,
    }
    return SequenceSpec(tuple(fs), meta)


@dataclass(frozen=True)
class ModelRecipe:
    kind: str
    parameters: dict = field(default_factory=dict)

    KINDS = ("path_graph", "random_markovian", "random_symmetric", "spike_sequence")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown recipe kind {self.kind!r}")

    def build(self):
        p = self.parameters
        if self.kind == "path_graph":
            return path_graph(p["N"])
        if self.kind == "random_markovian":
            return random_markovian(p["N"], p.get("edge_density", 0.5), p.get("kappa_scale", 0.0), p.get("seed", 0))
        if self.kind == "random_symmetric":
            return random_symmetric(p["N"], p.get("seed", 0))
        return spike_sequence(p["N"], p["count"], p.get("unit_height", False))
