import math
from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import given, strategies as st

from thermospec.coarse import (
    block_recode,
    chain_check,
    coarse_count,
    coarse_spectrum,
    rationalize,
    sum_distribution,
)
from thermospec.errors import InputError, LatticeExplosionError
from thermospec.potentials import indicator, log_bernoulli, table_potential
from thermospec.shift import count_words, enumerate_words, full_shift

from .conftest import sfts


def test_binomial_window_count(full2):
    c = coarse_count(full2, indicator(full2, 1), 10, (0.35, 0.65))
    assert c.count == 672 == sum(comb(10, k) for k in (4, 5, 6))


def test_decimal_window_endpoint_is_inclusive(full2):
    # 9/20 = 0.45 exactly must be counted
    c = coarse_count(full2, indicator(full2, 1), 20, (0.45, 0.45))
    assert c.count == comb(20, 9)


def test_rationalize_exact_and_rounded():
    lat = rationalize([0.25, -0.5, 1.0])
    assert lat.exact and lat.denominator == 4 and list(lat.ints) == [1, -2, 4]
    lat = rationalize([math.log(2), math.log(3)])
    assert not lat.exact and lat.denominator == 10_000 and lat.perturbation <= 0.5e-4


@given(sfts(), st.integers(1, 9), st.data())
def test_dp_matches_enumeration(space, n, data):
    vals = data.draw(st.lists(st.integers(-3, 3), min_size=space.alphabet_size, max_size=space.alphabet_size))
    phi = table_potential(space, [v / 2 for v in vals])
    a = data.draw(st.floats(-1.5, 1.5))
    b = a + data.draw(st.floats(0, 1))
    words = enumerate_words(space, n)
    # exact averages; window endpoints read as the decimals they print as
    lo, hi = Fraction(repr(a)), Fraction(repr(b))
    brute = sum(1 for w in words if lo <= Fraction(sum(vals[s] for s in w), 2 * n) <= hi)
    assert coarse_count(space, phi, n, (a, b)).count == brute


@given(sfts(), st.integers(1, 10))
def test_whole_line_counts_every_word(space, n):
    phi = table_potential(space, list(range(space.alphabet_size)))
    assert coarse_count(space, phi, n, (-math.inf, math.inf)).count == count_words(space, n)


def test_block_recoding_counts_match_enumeration(golden):
    phi = table_potential(golden, {(0, 0): 0.0, (0, 1): 1.0, (1, 0): 0.5})
    for n in (3, 6):
        words = enumerate_words(golden, n + 1)
        avgs = [sum(phi(w[i: i + 2]) for i in range(n)) / n for w in words]
        brute = sum(1 for v in avgs if 0.2 <= v <= 0.6)
        assert coarse_count(golden, phi, n, (0.2, 0.6)).count == brute


def test_lattice_budget():
    space = full_shift(2)
    phi = table_potential(space, [0.0, math.pi])
    with pytest.raises(LatticeExplosionError):
        coarse_count(space, phi, 200, (0, 1), budget=10_000)


def test_empty_window_rate_is_minus_infinity(full2):
    c = coarse_count(full2, indicator(full2, 1), 5, (2.0, 3.0))
    assert c.count == 0 and c.rate == -math.inf
    with pytest.raises(InputError):
        coarse_count(full2, indicator(full2, 1), 5, (0.6, 0.4))


def test_coarse_spectrum_approaches_entropy(full2):
    cs = coarse_spectrum(full2, indicator(full2, 1), [0.5], 0.05, (40, 80, 160))
    assert cs.rates[0, -1] > cs.rates[0, 0]
    assert cs.upper[0] <= math.log(2) + 1e-12


@pytest.mark.parametrize("phi_name", ["indicator", "bernoulli"])
def test_chain_has_no_violations(full2, phi_name):
    phi = indicator(full2, 1) if phi_name == "indicator" else log_bernoulli(full2, [0.25, 0.75])
    grid = np.linspace(phi.min, phi.max, 9)
    report = chain_check(full2, phi, grid, (12, 16, 20), radius=0.05)
    assert report.ok, report.violations


@given(sfts(), st.integers(1, 8))
def test_sum_distribution_totals_word_count(space, n):
    offset, dist = sum_distribution(space, list(range(space.alphabet_size)), n)
    assert offset == 0
    assert int(sum(int(c) for c in dist)) == count_words(space, n)


def test_block_recode_alphabet_is_two_blocks(golden):
    phi = table_potential(golden, {(0, 0): 0.0, (0, 1): 1.0, (1, 0): 0.5})
    rec, tab = block_recode(golden, phi)
    assert rec.alphabet_size == 3 and tab.range == 1
    assert sorted(tab.table.values()) == [0.0, 0.5, 1.0]
