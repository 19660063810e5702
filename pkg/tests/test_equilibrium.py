import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from thermospec.equilibrium import (
    entropy,
    gibbs_constant,
    gibbs_measure,
    integrate,
    lift,
    periodic_measure,
    random_markov_measure,
    ruelle_derivative_check,
    variational_gap,
)
from thermospec.potentials import constant, indicator, table_potential
from thermospec.shift import enumerate_words

from .conftest import sfts, tables


def test_bernoulli_measure(full2):
    p = 0.3
    phi = table_potential(full2, [math.log(1 - p), math.log(p)])
    mu = gibbs_measure(full2, phi)
    assert mu.cylinder_mass((1, 1, 0)) == pytest.approx(p * p * (1 - p), rel=1e-12)
    assert entropy(mu) == pytest.approx(-(p * math.log(p) + (1 - p) * math.log(1 - p)), rel=1e-12)


def test_parry_measure_on_golden(golden):
    mu = gibbs_measure(golden, constant(golden, 0.0))
    assert entropy(mu) == pytest.approx(golden.topological_entropy, abs=1e-12)
    assert integrate(mu, indicator(golden, 1)) == pytest.approx(1 / (1 + ((1 + 5 ** 0.5) / 2) ** 2), abs=1e-12)


@given(sfts(), st.data())
def test_gibbs_attains_the_variational_principle(space, data):
    phi = data.draw(tables(space, r=data.draw(st.integers(1, 2))))
    mu = gibbs_measure(space, phi)
    assert abs(variational_gap(space, phi, mu)) < 1e-9


@given(sfts(), st.data(), st.integers(0, 2**31))
def test_other_measures_fall_short(space, data, seed):
    phi = data.draw(tables(space))
    nu = random_markov_measure(space, np.random.default_rng(seed))
    assert variational_gap(space, phi, nu) <= 1e-10


@given(sfts(), st.data())
def test_cylinder_masses_sum_to_one(space, data):
    phi = data.draw(tables(space))
    mu = gibbs_measure(space, phi)
    for k in (1, 3):
        assert sum(mu.cylinder_mass(w) for w in enumerate_words(space, k)) == pytest.approx(1.0, abs=1e-12)


def test_lift_preserves_the_measure(golden):
    mu = gibbs_measure(golden, table_potential(golden, [0.4, -0.2]))
    big = lift(mu, 4)
    for w in enumerate_words(golden, 5):
        assert big.cylinder_mass(w) == pytest.approx(mu.cylinder_mass(w), abs=1e-14)


def test_periodic_measure_has_zero_entropy(full2):
    mu = periodic_measure(full2, (0, 1, 1))
    assert entropy(mu) == pytest.approx(0.0, abs=1e-14)
    assert integrate(mu, indicator(full2, 1)) == pytest.approx(2 / 3)


@given(sfts(), st.data())
def test_ruelle_derivative(space, data):
    eta = data.draw(tables(space, scale=1.0))
    phi = data.draw(tables(space, scale=1.0))
    lhs, rhs = ruelle_derivative_check(space, eta, phi)
    assert abs(lhs - rhs) <= 1e-6


def test_gibbs_constant_is_finite_and_at_least_one(full2):
    C = gibbs_constant(full2, table_potential(full2, [0.1, 0.9]), depth=8)
    assert 1.0 <= C < 10
