import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from thermospec.errors import InputError
from thermospec.potentials import constant, indicator, linear_combination, pesin_zhang_potential, table_potential
from thermospec.pressure import (
    perron,
    pressure,
    pressure_bound_shift,
    pressure_partition,
    pressure_restricted,
    pressure_spectral,
)
from thermospec.shift import block_graph, full_shift, golden_mean_shift, restrict_run

from .conftest import sfts, tables

LOG_GOLDEN = math.log((1 + math.sqrt(5)) / 2)


def test_golden_mean_entropy(golden):
    est = pressure_spectral(golden, constant(golden, 0.0))
    assert abs(est.value - LOG_GOLDEN) < 1e-12
    assert est.lower <= LOG_GOLDEN <= est.upper


@pytest.mark.parametrize("q", [-5.0, -1.0, 0.0, 1.0, 5.0])
def test_indicator_pressure_closed_form(full2, q):
    est = pressure_spectral(full2, linear_combination([(q, indicator(full2, 1))]))
    assert abs(est.value - math.log1p(math.exp(q))) < 1e-12


def test_partition_sums_bracket(golden):
    est = pressure_partition(golden, constant(golden, 0.0), 16)
    assert est.lower <= LOG_GOLDEN <= est.upper
    assert est.gap <= 1e-2


@given(sfts(), st.data())
def test_partition_bracket_contains_spectral_value(space, data):
    phi = data.draw(tables(space, r=data.draw(st.integers(1, 2))))
    spectral = pressure_spectral(space, phi).value
    part = pressure_partition(space, phi, 6)
    assert part.lower - 1e-12 <= spectral <= part.upper + 1e-12


@given(sfts(), st.data(), st.floats(-3, 3))
def test_translation(space, data, c):
    phi = data.draw(tables(space))
    shifted = linear_combination([(1.0, phi), (c, constant(space, 1.0))])
    assert pressure_spectral(space, shifted).value == pytest.approx(pressure_spectral(space, phi).value + c, abs=1e-10)


def test_perron_vector_is_positive_and_fixed():
    space = full_shift(3)
    phi = table_potential(space, [0.2, -3.0, 1.0])
    g = block_graph(space, 2)
    data = perron(g, phi.edge_values(g), want_left=True)
    W = g.dense(np.exp(phi.edge_values(g)), fill=0.0)
    v = data.right.astype(float)
    assert np.all(v > 0)
    assert np.allclose(W @ v, math.exp(float(data.log_root)) * v, rtol=1e-12)
    assert np.all(data.left > 0)


def test_extreme_weights_still_certify():
    # entries spanning hundreds of orders of magnitude
    space = golden_mean_shift()
    phi = table_potential(space, [0.0, -700.0])
    est = pressure_spectral(space, phi)
    assert est.gap < 1e-9


def test_sampled_pressure_widened_by_truncation_error():
    phi = pesin_zhang_potential(0.5)
    est = pressure(full_shift(2), phi, 6)
    finer = pressure(full_shift(2), phi, 10)
    assert est.lower <= finer.value <= est.upper
    assert est.meta["truncation_error"] > 0


def test_restricted_pressure_is_monotone_and_bounded():
    space = full_shift(2)
    zero = constant(space, 0.0)
    vals = [pressure_restricted(space, zero, n).value for n in range(1, 11)]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))
    for n, v in enumerate(vals, start=1):
        assert math.log(2) - v <= math.log(2) / n


def test_restricted_pressure_of_run_one_is_golden():
    sub = restrict_run(full_shift(2), 0, 1)
    assert pressure_spectral(sub, constant(full_shift(2), 0.0)).value == pytest.approx(LOG_GOLDEN, abs=1e-12)


def test_bound_shift(golden):
    est = pressure_spectral(golden, constant(golden, 0.0))
    lo, hi = pressure_bound_shift(est, 2.0, (0.0, 1.0))
    exact = pressure_spectral(golden, linear_combination([(2.0, indicator(golden, 1))])).value
    assert lo <= exact <= hi
    with pytest.raises(InputError):
        pressure_bound_shift(est, -1.0, (0.0, 1.0))
