import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from thermospec.coding import doubling_coding, linear_coding, parabolic_coding
from thermospec.errors import InputError
from thermospec.potentials import (
    LocallyConstant,
    birkhoff_bounds,
    constant,
    geometric_potential,
    growth_diagnostic,
    indicator,
    linear_combination,
    log_bernoulli,
    pesin_zhang_potential,
    table_potential,
    truncate,
    variation,
)
from thermospec.shift import full_shift


def test_table_must_cover_admissible_words(golden):
    with pytest.raises(InputError):
        LocallyConstant(golden, 2, {(0, 0): 1.0, (0, 1): 1.0}, "short")
    with pytest.raises(InputError):
        LocallyConstant(golden, 2, {(0, 0): 1.0, (0, 1): 1.0, (1, 0): 0.0, (1, 1): 0.0}, "extra")


def test_indicator_and_constant(full2):
    phi = indicator(full2, 1)
    assert phi((1, 0, 0)) == 1.0 and phi((0, 1)) == 0.0
    assert constant(full2, 2.5).is_constant()


def test_log_bernoulli_values(full2):
    phi = log_bernoulli(full2, [0.25, 0.75])
    assert phi((0,)) == pytest.approx(math.log(0.25))


def test_tables_have_exact_variation(full2):
    phi = table_potential(full2, {(0, 0): 0.0, (0, 1): 1.0, (1, 0): 3.0, (1, 1): 2.0})
    v = variation(phi, 4)
    assert v.exact
    assert v.values == (1.0, 0.0, 0.0, 0.0)


def test_pesin_zhang_variation_decays_like_power():
    phi = pesin_zhang_potential(0.5)
    v = variation(phi, 12)
    assert all(a >= b for a, b in zip(v.values, v.values[1:]))
    assert v[12] > 0


@pytest.mark.parametrize("rule", ["mid", "sup", "inf"])
def test_truncation_error_bounds_the_sampled_function(rule):
    coding = parabolic_coding()
    geo = geometric_potential(coding)
    tab = truncate(geo, 5, rule)
    rng = np.random.default_rng(1)
    for x in rng.uniform(0.001, 0.999, 200):
        word = []
        y = x
        for _ in range(5):
            a = coding.branch_of(y)
            word.append(a)
            y = coding.branches[a].forward(y)
        exact = coding.branches[word[0]].log_fprime(x)
        assert abs(tab(tuple(word)) - exact) <= tab.error + 1e-12


def test_truncation_sup_keeps_the_maximum():
    phi = pesin_zhang_potential(0.5)
    tab = truncate(phi, 6, "sup")
    assert tab.max == pytest.approx(0.0, abs=1e-15) or tab.max >= phi.cylinder_extrema(6)[1].max() - 1e-15


def test_geometric_potential_of_affine_map_is_exact():
    coding = linear_coding([2, 4])
    tab = truncate(geometric_potential(coding), 3)
    assert tab.error < 1e-12
    assert tab((0, 1, 1)) == pytest.approx(math.log(2))
    assert tab((1, 0, 0)) == pytest.approx(math.log(4))


def test_combination_of_tables(full2):
    a = indicator(full2, 1)
    b = constant(full2, 1.0)
    c = linear_combination([(2.0, a), (-0.5, b)])
    assert c((1,)) == pytest.approx(1.5) and c((0,)) == pytest.approx(-0.5)


@given(st.lists(st.integers(0, 1), min_size=1, max_size=8))
def test_birkhoff_bounds_of_table_are_tight(word):
    space = full_shift(2)
    phi = table_potential(space, {(0, 0): 0.1, (0, 1): -0.4, (1, 0): 0.7, (1, 1): 0.2})
    b = birkhoff_bounds(phi, tuple(word), space)
    inner = sum(phi(tuple(word[i: i + 2])) for i in range(len(word) - 1))
    tails = [inner + phi((word[-1], c)) for c in (0, 1)]
    assert b.lower == pytest.approx(min(tails)) and b.upper == pytest.approx(max(tails))


def test_growth_diagnostic_passes_doubling_and_parabolic():
    assert growth_diagnostic(geometric_potential(doubling_coding()), 10).passed
    assert growth_diagnostic(geometric_potential(parabolic_coding()), 10).passed


def test_growth_diagnostic_fails_when_u_vanishes_on_a_cycle(full2):
    assert not growth_diagnostic(table_potential(full2, [0.0, 1.0]), 10).passed
