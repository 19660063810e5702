import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from thermospec.coding import doubling_coding, linear_coding, parabolic_coding
from thermospec.errors import BracketError, InputError
from thermospec.potentials import constant, indicator, log_bernoulli, table_potential
from thermospec.shift import full_shift
from thermospec.spectra import (
    birkhoff_spectrum,
    bowen_dimension,
    cvp_oracle,
    degenerate_symbols,
    domain_endpoints,
    exhaustion_spectrum,
    full_measure_check,
    legendre_profile,
    lyapunov_spectrum,
    minimize_t_alpha,
    pointwise_dimension_spectrum,
    predicted_spectrum,
    spectral_system,
    t_alpha,
)

from .conftest import sfts, tables

LOG2, LOG3 = math.log(2), math.log(3)


def H(x):
    return -sum(p * math.log(p) for p in (x, 1 - x) if p > 0)


def test_bowen_full_shift_log3(full2):
    assert bowen_dimension(full2, constant(full2, LOG3)) == pytest.approx(LOG2 / LOG3, abs=1e-12)


def test_bowen_nonconstant_u_solves_moran(full2):
    # two contraction ratios 1/2 and 1/3: (1/2)^s + (1/3)^s = 1
    s = bowen_dimension(full2, table_potential(full2, [LOG2, LOG3]))
    assert 0.5 ** s + (1 / 3) ** s == pytest.approx(1.0, abs=1e-12)


def test_bowen_degenerate_u_raises(full2):
    with pytest.raises(BracketError):
        bowen_dimension(full2, table_potential(full2, [0.0, 1.0]))


def test_t_alpha_is_root_of_pressure(full2):
    phi, one = indicator(full2, 1), constant(full2, 1.0)
    t = t_alpha(full2, phi, one, one, 0.3, 1.5)
    assert t == pytest.approx(math.log1p(math.exp(1.5)) - 1.5 * 0.3, abs=1e-12)


def test_birkhoff_closed_form(full2):
    grid = np.linspace(0.05, 0.95, 19)
    curve = birkhoff_spectrum(full2, indicator(full2, 1), grid)
    assert np.max(np.abs(curve.values - [H(a) for a in grid])) < 1e-9
    assert curve.domain == pytest.approx((0.0, 1.0))


def test_outside_domain_is_minus_infinity(full2):
    curve = birkhoff_spectrum(full2, indicator(full2, 1), [-0.1, 1.2])
    assert np.all(curve.values == -np.inf)
    assert all("outside_domain" in f for f in curve.flags)


def test_golden_indicator_closed_form(golden):
    grid = np.linspace(0.02, 0.48, 9)
    curve = birkhoff_spectrum(golden, indicator(golden, 1), grid)
    want = [(1 - a) * H(a / (1 - a)) for a in grid]
    assert np.max(np.abs(curve.values - want)) < 1e-9


def test_mixed_closed_form(full2):
    u = table_potential(full2, [LOG2, LOG3])
    grid = np.linspace(0.1, 0.9, 9)
    curve = predicted_spectrum(full2, indicator(full2, 1), constant(full2, 1.0), u, grid)
    want = [H(a) / ((1 - a) * LOG2 + a * LOG3) for a in grid]
    assert np.max(np.abs(curve.values - want)) < 1e-9
    assert np.all(curve.t_root_residual < 1e-8)


def test_plateau_picks_smallest_q(full2):
    one = constant(full2, 1.0)
    system = spectral_system(full2, indicator(full2, 1), one, one)
    pt = minimize_t_alpha(system, 0.5)
    assert pt.q_star == pytest.approx(0.0, abs=1e-9)
    assert pt.value == pytest.approx(LOG2, abs=1e-12)


@given(sfts(), st.data())
def test_spectrum_nonnegative_and_bounded_by_entropy(space, data):
    phi = data.draw(tables(space))
    one = constant(space, 1.0)
    system = spectral_system(space, phi, one, one)
    lo, hi = system.domain
    curve = predicted_spectrum(space, phi, one, one, np.linspace(lo, hi, 7), workers=1)
    assert np.all(curve.values >= -1e-9)
    assert np.all(curve.values <= space.topological_entropy + 1e-9)


def test_linear_lyapunov_reciprocal():
    coding = linear_coding([2, 4])
    space = coding.space
    grid = np.linspace(LOG2 * 1.05, 2 * LOG2 * 0.95, 11)
    ent = lyapunov_spectrum(space, coding, grid, "entropy")
    dim = lyapunov_spectrum(space, coding, grid, "dimension")
    assert np.max(np.abs(dim.values - ent.values / grid)) < 1e-9
    want = [H(a / LOG2 - 1) for a in grid]
    assert np.max(np.abs(ent.values - want)) < 1e-9


def test_lyapunov_dimension_rejects_nonpositive_alpha():
    coding = linear_coding([2, 4])
    with pytest.raises(InputError):
        lyapunov_spectrum(coding.space, coding, [0.0, 1.0], "dimension")


def test_binomial_pointwise_dimension():
    coding = doubling_coding()
    space = coding.space
    phi = log_bernoulli(space, [0.25, 0.75])
    lo, hi = math.log(4 / 3) / LOG2, 2.0
    grid = np.linspace(lo, hi, 9)
    curve = pointwise_dimension_spectrum(space, coding, phi, grid)
    assert curve.domain == pytest.approx((lo, hi), abs=1e-9)
    assert curve.values[0] == pytest.approx(0.0, abs=1e-6) and curve.values[-1] == pytest.approx(0.0, abs=1e-6)


def test_degenerate_symbols():
    coding = parabolic_coding()
    from thermospec.potentials import geometric_potential

    assert degenerate_symbols(geometric_potential(coding)) == (0, 1) or degenerate_symbols(
        geometric_potential(coding)) == (0,)
    assert degenerate_symbols(constant(full_shift(2), 1.0)) == ()


def test_exhaustion_increases_with_n(full2):
    u = table_potential(full2, [0.0, 1.0])
    phi = indicator(full2, 1)
    one = constant(full2, 1.0)
    curve = exhaustion_spectrum(full2, phi, one, u, [0.5, 0.7], n_list=(2, 4, 6), symbols=(0,))
    by_n = curve.meta["by_n"]
    ns = sorted(by_n)
    for a, b in zip(ns, ns[1:]):
        fa = np.nan_to_num(by_n[a].values, neginf=-1e300)
        fb = np.nan_to_num(by_n[b].values, neginf=-1e300)
        assert np.all(fb >= fa - 1e-12)


def test_legendre_of_smooth_pressure_has_no_transition(full2):
    q = np.linspace(-4, 4, 17)
    data = legendre_profile(full2, indicator(full2, 1), constant(full2, 1.0), q)
    assert np.max(np.abs(data.T0 - np.log1p(np.exp(q)))) < 1e-10
    assert data.transitions == ()
    assert np.all(data.d_minus <= data.d_plus + 1e-12)
    second = data.T0[:-2] + data.T0[2:] - 2 * data.T0[1:-1]
    assert np.all(second >= -1e-8)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        lo, hi = domain_endpoints(data)
    assert (lo, hi) == pytest.approx((0.0, 1.0), abs=1e-6)


def test_full_measure_identities(full2):
    one = constant(full2, 1.0)
    for rep in full_measure_check(full2, indicator(full2, 1), one, one, [0.2, 0.4, 0.6]):
        assert abs(rep.constraint) < 1e-9
        assert abs(rep.dimension_residual) < 1e-9


def test_cvp_oracle_is_close_from_below(full2):
    one = constant(full2, 1.0)
    phi = indicator(full2, 1)
    s = H(0.3)
    val = cvp_oracle(full2, phi, one, one, 0.3)
    assert val <= s + 1e-9
    assert s - val < 1e-3
