import numpy as np
import pytest

from finite_dirichlet import (
    ModelRecipe,
    beurling_deny,
    eval_form,
    path_graph,
    random_markovian,
    random_nonmarkovian,
    random_symmetric,
    spike_sequence,
)

import oracles


def test_path_affine_exact():
    for N in (2, 3, 10, 101):
        E, grid = path_graph(N)
        assert eval_form(E, grid, grid) == pytest.approx(1.0, abs=1e-12)
        assert eval_form(E, np.ones(N), np.ones(N)) == 0.0


def test_path_structure():
    E, grid = path_graph(5)
    h = 0.25
    assert np.allclose(beurling_deny(E).J[np.arange(4), np.arange(1, 5)], 1 / h)
    assert not beurling_deny(E).kappa.any()
    assert grid.values.tolist() == [0, 0.25, 0.5, 0.75, 1.0]


def test_path_convergence_rate():
    errs = {}
    for N in (101, 201, 401):
        E, x = path_graph(N)
        errs[N] = [abs(eval_form(E, x.values**k, x.values**k) - oracles.path_energy_closed(k)) for k in (2, 3)]
    for k in range(2):
        # O(h) or better: halving h at least halves the error
        assert errs[201][k] <= 0.55 * errs[101][k] and errs[401][k] <= 0.55 * errs[201][k]


def test_path_sparse_switch():
    assert path_graph(3000)[0].is_sparse
    assert not path_graph(100)[0].is_sparse


def test_random_markovian():
    E = random_markovian(20, 0.3, 0.0, 5)
    assert beurling_deny(E).markovian
    assert abs(eval_form(E, np.ones(20), np.ones(20))) < 1e-12
    assert np.array_equal(E.dense, random_markovian(20, 0.3, 0.0, 5).dense)
    D = random_markovian(6, 0.0, 1.0, 1).dense
    assert np.array_equal(D, np.diag(np.diag(D)))


def test_random_nonmarkovian_and_symmetric():
    for seed in range(5):
        assert not beurling_deny(random_nonmarkovian(3, seed)).markovian
    assert np.array_equal(random_symmetric(4, 1).dense, random_symmetric(4, 1).dense)


def test_spikes():
    seq = spike_sequence(1000, 30)
    E, _ = path_graph(1000)
    sup = [np.max(np.abs(f.values)) for f in seq.functions]
    assert np.allclose(sup, [1 / n for n in range(1, 31)])
    for f, e in zip(seq.functions, seq.metadata["closed_form_energies"]):
        assert eval_form(E, f, f) == pytest.approx(e, abs=1e-10)
    ctl = spike_sequence(1000, 30, unit_height=True)
    assert not ctl.metadata["cauchy"]
    en = [eval_form(E, f, f) for f in ctl.functions]
    assert en[-1] > 25 * en[0]
    with pytest.raises(ValueError):
        spike_sequence(20, 6)


def test_recipe():
    E = ModelRecipe("random_markovian", {"N": 5, "seed": 3}).build()
    assert np.array_equal(E.dense, random_markovian(5, 0.5, 0.0, 3).dense)
    with pytest.raises(ValueError):
        ModelRecipe("torus", {})
