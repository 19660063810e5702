"""The twelve acceptance criteria, one test each, at their stated tolerances.

Each test records a ``PASS``/``FAIL`` line (printed in the terminal summary
and to stdout) before asserting.
"""

import math
import time

import numpy as np
import pytest

from thermospec.coarse import chain_check, coarse_count
from thermospec.coding import doubling_coding, linear_coding
from thermospec.config import bundled_names, load_system
from thermospec.equilibrium import ruelle_derivative_check
from thermospec.potentials import (
    as_table,
    constant,
    indicator,
    linear_combination,
    log_bernoulli,
    pesin_zhang_potential,
    table_potential,
)
from thermospec.pressure import pressure_partition, pressure_restricted, pressure_spectral
from thermospec.selftest import random_sft, random_table, run_selftest
from thermospec.shift import full_shift, golden_mean_shift
from thermospec.spectra import (
    birkhoff_spectrum,
    bowen_dimension,
    cvp_oracle,
    domain_endpoints,
    full_measure_check,
    legendre_profile,
    lyapunov_spectrum,
    phase_transition_probe,
    pointwise_dimension_spectrum,
    predicted_spectrum,
)

from .conftest import ACCEPTANCE_LINES

LOG2, LOG3 = math.log(2), math.log(3)
GOLDEN = (1 + math.sqrt(5)) / 2


def H(x):
    return -sum(p * math.log(p) for p in (x, 1 - x) if p > 0)


def record(number, passed, detail):
    line = f"{'PASS' if passed else 'FAIL'} criterion {number:2d}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert passed, line


def test_01_pressure_anchors():
    golden = golden_mean_shift()
    t0 = time.perf_counter()
    spectral = pressure_spectral(golden, constant(golden, 0.0)).value
    part = pressure_partition(golden, constant(golden, 0.0), 16)
    secs = time.perf_counter() - t0
    err_spectral = abs(spectral - math.log(GOLDEN))
    bracketed = part.lower <= math.log(GOLDEN) <= part.upper
    full2 = full_shift(2)
    err_q = max(abs(pressure_spectral(full2, linear_combination([(q, indicator(full2, 1))])).value
                    - math.log1p(math.exp(q))) for q in (-5, -1, 0, 1, 5))
    ok = err_spectral <= 1e-9 and bracketed and part.gap <= 1e-2 and secs < 1 and err_q <= 1e-8
    record(1, ok, f"golden error {err_spectral:.1e}, partition gap {part.gap:.2e} in {secs:.2f}s, "
                  f"log(1+e^q) error {err_q:.1e}")


def test_02_birkhoff_spectrum():
    space = full_shift(2)
    grid = np.linspace(0.05, 0.95, 21)
    t0 = time.perf_counter()
    curve = birkhoff_spectrum(space, indicator(space, 1), grid)
    secs = time.perf_counter() - t0
    err = float(np.max(np.abs(curve.values - [H(a) for a in grid])))
    record(2, err <= 1e-6 and secs < 5, f"max |S - H| = {err:.1e} in {secs:.2f}s")


def test_03_bowen_equation():
    e1 = abs(bowen_dimension(full_shift(2), constant(full_shift(2), LOG3)) - LOG2 / LOG3)
    g = golden_mean_shift()
    e2 = abs(bowen_dimension(g, constant(g, LOG2)) - math.log(GOLDEN) / LOG2)
    record(3, max(e1, e2) <= 1e-9, f"errors {e1:.1e} (full shift), {e2:.1e} (golden mean)")


def test_04_ruelle_derivative():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for i in range(20):
        space = full_shift(2) if i % 4 == 0 else random_sft(rng, 2 + i % 2)
        eta = random_table(rng, space, 1)
        phi = random_table(rng, space, 1)
        lhs, rhs = ruelle_derivative_check(space, eta, phi, h=1e-4)
        worst = max(worst, abs(lhs - rhs))
    record(4, worst <= 1e-6, f"worst |central difference - integral| over 20 potentials {worst:.1e}")


def test_05_coarse_counts_and_chain():
    space = full_shift(2)
    count = coarse_count(space, indicator(space, 1), 10, (0.35, 0.65)).count
    violations = {}
    for name in bundled_names():
        cfg = load_system(name)
        tab = as_table(cfg.phi, cfg.coarse_range)
        grid = np.linspace(tab.min, tab.max, 11)
        report = chain_check(cfg.space, cfg.phi, grid, (12, 16, 20), 0.05, cfg.coarse_range)
        violations[name] = len(report.violations)
    total = sum(violations.values())
    record(5, count == 672 and total == 0,
           f"Lambda_10 = {count}; chain violations {total} over {len(violations)} bundled configs")


def test_06_exhaustion_bound():
    space = full_shift(2)
    zero = constant(space, 0.0)
    vals = [pressure_restricted(space, zero, n).value for n in range(1, 11)]
    excess = max(LOG2 - v - LOG2 / n for n, v in enumerate(vals, start=1))
    drop = max(a - b for a, b in zip(vals, vals[1:]))
    record(6, excess <= 0 and drop <= 1e-12,
           f"max (P_X - P_Xn - log2/n) = {excess:.3f}, largest decrease {drop:.1e}")


def test_07_cvp_oracle():
    space = full_shift(2)
    phi, one = indicator(space, 1), constant(space, 1.0)
    u = table_potential(space, [LOG2, LOG3])
    alphas = [0.2, 0.35, 0.5, 0.65, 0.8]
    t0 = time.perf_counter()
    worst = 0.0
    for uu in (one, u):
        curve = predicted_spectrum(space, phi, one, uu, alphas)
        for a, s in zip(alphas, curve.values):
            worst = max(worst, abs(s - cvp_oracle(space, phi, one, uu, a)))
    secs = time.perf_counter() - t0
    record(7, worst <= 1e-3 and secs < 60, f"max |S - oracle| = {worst:.1e} in {secs:.1f}s")


def test_08_full_measure():
    space = full_shift(2)
    one = constant(space, 1.0)
    reports = full_measure_check(space, indicator(space, 1), one, one, [0.2, 0.35, 0.5, 0.65, 0.8])
    c = max(abs(r.constraint) for r in reports)
    d = max(abs(r.dimension_residual) for r in reports)
    record(8, c <= 1e-6 and d <= 1e-6, f"constraint residual {c:.1e}, dimension residual {d:.1e}")


def test_09_binomial_pointwise_dimension():
    p = 0.25
    coding = doubling_coding()
    space = coding.space
    phi = log_bernoulli(space, [p, 1 - p])
    lo, hi = math.log(1 / (1 - p)) / LOG2, math.log(1 / p) / LOG2
    peak = -(math.log(p) + math.log(1 - p)) / (2 * LOG2)
    grid = np.sort(np.append(np.linspace(lo, hi, 41), peak))
    curve = pointwise_dimension_spectrum(space, coding, phi, grid)
    top = abs(curve.max_value - 1.0)
    ends = max(abs(curve.values[0]), abs(curve.values[-1]))
    P = curve.meta["pressure_phi"]
    phibar = linear_combination([(-1.0, phi), (P, constant(space, 1.0))])
    from thermospec.potentials import geometric_potential

    data = legendre_profile(space, phibar, geometric_potential(coding), [0.0])
    slo, shi = domain_endpoints(data)
    dom = max(abs(curve.domain[0] - lo), abs(curve.domain[1] - hi), abs(slo - lo), abs(shi - hi))
    record(9, top <= 1e-6 and ends <= 1e-4 and dom <= 1e-6,
           f"|max - 1| = {top:.1e}, endpoint values {ends:.1e}, endpoint error {dom:.1e}")


def test_10_lyapunov_reciprocal():
    coding = linear_coding([2, 4])
    grid = np.linspace(LOG2, 2 * LOG2, 13)[1:-1]
    grid = np.linspace(grid[0], grid[-1], 11)
    ent = lyapunov_spectrum(coding.space, coding, grid, "entropy")
    dim = lyapunov_spectrum(coding.space, coding, grid, "dimension")
    err = float(np.max(np.abs(dim.values - ent.values / grid)))
    record(10, err <= 1e-6, f"max |L_D - L_E / alpha| = {err:.1e} at 11 points")


def test_11_phase_transition_probe():
    space = full_shift(2)
    ranges = (4, 6, 8)
    pz = phase_transition_probe(space, pesin_zhang_potential(0.5), ranges=ranges)
    ctl = phase_transition_probe(space, indicator(space, 1), ranges=ranges)
    g_pz = [g for _, g in pz.gaps_by_range]
    g_ctl = [g for _, g in ctl.gaps_by_range]
    monotone = all(b >= a for a, b in zip(g_pz, g_pz[1:]))
    ratios = [a / b if b > 0 else math.inf for a, b in zip(g_pz, g_ctl)]
    ok = monotone and all(r > 10 for r in ratios) and max(g_ctl) < 1e-4
    record(11, ok, "gaps " + ", ".join(f"r={r}: {a:.2e} vs {b:.2e}" for r, a, b in zip(ranges, g_pz, g_ctl))
           + f"; ratio min {min(ratios):.0f}")


def test_12_property_suites():
    t0 = time.perf_counter()
    results = run_selftest()
    secs = time.perf_counter() - t0
    failed = [r.name for r in results if not r.passed]
    record(12, not failed and secs < 120, f"{len(results) - len(failed)}/{len(results)} suites pass in {secs:.1f}s"
           + (f"; failed: {failed}" if failed else ""))


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
