import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finite_dirichlet import (
    GroundSet,
    PiecewiseLinearContraction,
    SymForm,
    bilinear_sqrt_residual,
    check_contraction_domination,
    check_leibniz,
    check_positivity,
    energy_form,
    eval_form,
    lagrangian_apply,
    lagrangian_density,
    lagrangian_norm,
    leibniz_estimate_slack,
    random_markovian,
)
from finite_dirichlet.errors import InvalidContraction, NotPositive

import oracles
from conftest import non_markov_2

seeds = st.integers(0, 2**31 - 1)


def markov(seed, n=None, kappa=0.5):
    r = np.random.default_rng(seed)
    n = n or int(r.integers(2, 8))
    return random_markovian(n, 0.6, kappa, seed), r


def test_apply_two_point(jump2):
    for ha, hb in [(1.0, 0.0), (0.3, -2.0), (5.0, 7.0)]:
        assert lagrangian_apply(jump2, [1, 0], [1, 0], [ha, hb]) == pytest.approx(ha + hb, abs=1e-14)


def test_apply_constant_zero_killing():
    E = random_markovian(5, 0.8, 0.0, 3)
    h = np.random.default_rng(0).normal(size=5)
    assert abs(lagrangian_apply(E, np.ones(5), np.ones(5), h)) < 1e-12
    assert abs(oracles.lagrange_def(E.dense, np.ones(5), h)) < 1e-12


def test_apply_pure_killing(kill1):
    for t in (0.0, 1.5, -2.0):
        assert lagrangian_apply(kill1, [1], [1], [t]) == pytest.approx(t)


def test_density_examples(jump2, kill1):
    assert lagrangian_density(jump2, [1, 0], [1, 0]).gamma.tolist() == [1.0, 1.0]
    assert lagrangian_density(jump2, [0, 0], [0, 0]).gamma.tolist() == [0.0, 0.0]
    assert lagrangian_density(kill1, [1], [1]).gamma.tolist() == [1.0]


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_density_reconstructs_functional(seed):
    E, r = markov(seed)
    n = E.ground.size
    f, g, h = r.normal(size=(3, n))
    dens = lagrangian_density(E, f, g)
    assert abs(dens(h) - lagrangian_apply(E, f, g, h)) <= 1e-12 * (1 + np.abs(dens.gamma).sum() * np.abs(h).max())
    assert abs(lagrangian_apply(E, f, g, h) - lagrangian_apply(E, g, f, h)) <= 1e-12 * (1 + abs(dens(h)))


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_density_matches_carre_formula(seed):
    E, r = markov(seed)
    f = r.normal(size=E.ground.size)
    a = lagrangian_density(E, f, f).gamma
    assert np.max(np.abs(a - oracles.carre_closed_form(E.dense, f))) <= 1e-10
    assert np.max(np.abs(a - oracles.lagrange_def_density(E.dense, f))) <= 1e-10


class TestPositivity:
    def test_markovian(self):
        for seed in range(20):
            E, r = markov(seed)
            assert check_positivity(E, r.normal(size=E.ground.size)) == (True, None)

    def test_zero(self, jump2):
        assert check_positivity(jump2, [0, 0]) == (True, None)

    def test_non_markovian_witness(self):
        E = non_markov_2()
        found = None
        for f in [(a, b) for a in (-1, 0, 1) for b in (-1, 0, 1)]:
            if oracles.lagrange_def_density(E.dense, np.array(f, float)).min() < 0:
                found = f
                break
        assert found is not None
        ok, where = check_positivity(E, found)
        assert not ok and where in ("a", "b")


class TestNorm:
    def test_two_point(self, jump2):
        assert lagrangian_norm(jump2, [1, 0]) == 2.0 == 2 * eval_form(jump2, [1, 0], [1, 0])

    def test_zero(self, jump2):
        assert lagrangian_norm(jump2, [0, 0]) == 0.0

    def test_killing_strict(self, kill1):
        assert lagrangian_norm(kill1, [1]) == 1.0 < 2 * eval_form(kill1, [1], [1])

    @settings(max_examples=60, deadline=None)
    @given(seeds)
    def test_bound_and_equality(self, seed):
        E, r = markov(seed)
        f = r.normal(size=E.ground.size)
        assert lagrangian_norm(E, f) <= 2 * eval_form(E, f, f) + 1e-10
        E0, _ = markov(seed, kappa=0.0)
        f0 = r.normal(size=E0.ground.size)
        assert abs(lagrangian_norm(E0, f0) - 2 * eval_form(E0, f0, f0)) <= 1e-10


class TestEnergyForm:
    def test_zero_killing_equals_form(self):
        for seed in range(10):
            for n in (2, 3):
                E, r = markov(seed, n=n, kappa=0.0)
                f = r.normal(size=n)
                assert abs(energy_form(E, f) - eval_form(E, f, f)) <= 1e-10

    def test_zero(self, jump2):
        assert energy_form(jump2, [0, 0], [3, 1]) == 0.0

    def test_killing(self, kill1):
        assert energy_form(kill1, [1]) == 0.5
        assert eval_form(kill1, [1], [1]) == 1.0

    def test_refuses_non_positive(self):
        with pytest.raises(NotPositive) as exc:
            energy_form(non_markov_2(), [1, 0])
        assert exc.value.witness in ("a", "b")

    @settings(max_examples=40, deadline=None)
    @given(seeds)
    def test_parallelogram(self, seed):
        E, r = markov(seed)
        f, g = r.normal(size=(2, E.ground.size))
        lhs = 2 * (energy_form(E, f) + energy_form(E, g))
        rhs = energy_form(E, f + g) + energy_form(E, f - g)
        assert abs(lhs - rhs) <= 1e-10 * (1 + abs(lhs))


class TestLeibniz:
    @settings(max_examples=60, deadline=None)
    @given(seeds)
    def test_random_five_point(self, seed):
        r = np.random.default_rng(seed)
        A = r.normal(size=(5, 5))
        E = SymForm(GroundSet.range(5), A @ A.T)
        f, g, h = r.normal(size=(3, 5))
        assert check_leibniz(E, f, g, h) < 1e-12 * (1 + np.abs(E.dense).sum())

    def test_zero(self, jump2):
        assert check_leibniz(jump2, [0, 0], [0, 0], [0, 0]) == 0.0

    def test_two_point(self, jump2):
        assert check_leibniz(jump2, [1, 0], [0, 1], [1, 1]) == 0.0

    @settings(max_examples=60, deadline=None)
    @given(seeds)
    def test_estimate(self, seed):
        E, r = markov(seed)
        f, g = r.normal(size=(2, E.ground.size))
        assert leibniz_estimate_slack(E, f, g) >= -1e-10


class TestDomination:
    def test_t1(self):
        for seed in range(20):
            E, r = markov(seed)
            ok, _ = check_contraction_domination(E, 2 * r.normal(size=E.ground.size),
                                                 PiecewiseLinearContraction.t_alpha(1.0))
            assert ok

    def test_identity(self, jump2):
        assert check_contraction_domination(jump2, [3, -1], PiecewiseLinearContraction.identity())[0]

    def test_absolute(self, jump2):
        assert lagrangian_density(jump2, [1, 1], [1, 1]).gamma.tolist() == [0, 0]
        assert lagrangian_density(jump2, [1, -1], [1, -1]).gamma.tolist() == [4, 4]
        assert check_contraction_domination(jump2, [1, -1], PiecewiseLinearContraction.absolute())[0]

    def test_invalid(self, jump2):
        with pytest.raises(InvalidContraction):
            check_contraction_domination(jump2, [1, 0], abs)


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_sqrt_triangle(seed):
    E, r = markov(seed)
    n = E.ground.size
    f, g = r.normal(size=(2, n))
    h = r.uniform(0, 1, size=n)
    assert bilinear_sqrt_residual(E, f, g, h) <= 1e-10
