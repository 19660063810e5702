"""Invariant suite behind ``thermospec selftest``.

Each check draws a handful of random systems from a seeded generator and
returns a pass/fail line with the worst deviation seen.
"""

from __future__ import annotations

from dataclasses import dataclass
import math
import time

import numpy as np

from .coarse import coarse_count
from .potentials import LocallyConstant, constant, linear_combination, table_potential
from .pressure import pressure_spectral
from .shift import ShiftSpace, count_words, enumerate_words, full_shift, golden_mean_shift, restrict_run
from .spectra import predicted_spectrum, spectral_system


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def random_sft(rng: np.random.Generator, d: int, density: float = 0.7) -> ShiftSpace:
    """Random transitive SFT on ``d`` symbols (redrawn until irreducible)."""
    for _ in range(1000):
        A = rng.random((d, d)) < density
        try:
            return ShiftSpace.from_matrix(A)
        except ValueError:
            continue
    return full_shift(d)


def random_table(rng: np.random.Generator, space: ShiftSpace, r: int = 1, scale: float = 1.0) -> LocallyConstant:
    words = enumerate_words(space, r)
    return LocallyConstant(space, r, {w: float(rng.normal(scale=scale)) for w in words}, "random")


def _systems(rng, count=6):
    out = [full_shift(2), golden_mean_shift(), restrict_run(full_shift(2), 0, 3)]
    while len(out) < count:
        out.append(random_sft(rng, int(rng.integers(2, 4))))
    return out


def check_pressure_axioms(rng) -> tuple[bool, str]:
    worst = 0.0
    for space in _systems(rng):
        base = space.base
        for _ in range(3):
            r = int(rng.integers(1, 3))
            phi = random_table(rng, base, r)
            psi = random_table(rng, base, r)
            P = lambda f: pressure_spectral(space, f).value
            c = float(rng.normal())
            worst = max(worst, abs(P(linear_combination([(1, phi), (c, constant(base, 1.0))])) - P(phi) - c))
            bigger = linear_combination([(1, phi), (1, LocallyConstant(base, r, {w: abs(v) for w, v in psi.table.items()}))])
            worst = max(worst, P(phi) - P(bigger))
            mid = linear_combination([(0.5, phi), (0.5, psi)])
            worst = max(worst, P(mid) - 0.5 * (P(phi) + P(psi)))
    return worst <= 1e-10, f"worst violation {worst:.2e}"


def check_no_coming_back(rng) -> tuple[bool, str]:
    worst = -math.inf
    for space in _systems(rng):
        phi = random_table(rng, space.base, 1)
        p = pressure_spectral(space, phi).value
        shifted = linear_combination([(1, phi), (-(p + abs(rng.normal()) * 0.1), constant(space.base, 1.0))])
        for lam in (1.0, 1.5, 2.0, 5.0):
            worst = max(worst, pressure_spectral(space, linear_combination([(lam, shifted)])).value)
    return worst <= 1e-12, f"largest P(lambda phi) {worst:.2e}"


def _spectra(rng):
    out = []
    for space in _systems(rng, 4):
        base = space.base
        phi = random_table(rng, base, 1)
        u = LocallyConstant(base, 1, {w: 0.5 + abs(v) for w, v in random_table(rng, base, 1).table.items()})
        one = constant(base, 1.0)
        for psi, uu in ((one, one), (u, u)):
            sys = spectral_system(space, phi, psi, uu)
            lo, hi = sys.domain
            grid = np.linspace(lo, hi, 13)
            out.append((predicted_spectrum(space, phi, psi, uu, grid, workers=1), psi is uu))
    return out


def check_nonnegative(rng) -> tuple[bool, str]:
    worst = math.inf
    for curve, _ in _spectra(rng):
        v = curve.values[np.isfinite(curve.values)]
        worst = min(worst, float(v.min()))
    return worst >= -1e-9, f"smallest finite S {worst:.2e}"


def check_concavity(rng) -> tuple[bool, str]:
    worst = 0.0
    for curve, same in _spectra(rng):
        if not same:
            continue
        v = curve.values
        worst = max(worst, float(np.max((v[:-2] + v[2:]) / 2 - v[1:-1])))
    return worst <= 1e-8, f"worst midpoint excess {worst:.2e}"


def check_finite_region(rng) -> tuple[bool, str]:
    """``{q : T_alpha(q) < inf}`` is an interval unbounded on at least one side."""
    bad = 0
    tried = 0
    q_grid = np.linspace(-6, 6, 25)
    for space in (full_shift(2), golden_mean_shift(), full_shift(3)):
        for _ in range(2):
            vals = [0.0] + [abs(float(rng.normal())) + 0.2 for _ in range(space.alphabet_size - 1)]
            u = table_potential(space, vals)
            phi = random_table(rng, space, 1)
            sys = spectral_system(space, phi, constant(space, 1.0), u)
            for alpha in np.linspace(phi.min, phi.max, 5):
                tried += 1
                fin = np.array([math.isfinite(float(sys.root(q, alpha).t)) for q in q_grid])
                idx = np.flatnonzero(fin)
                if idx.size == 0:
                    continue
                contiguous = idx[-1] - idx[0] + 1 == idx.size
                unbounded = fin[0] or fin[-1]
                bad += not (contiguous and unbounded)
    return bad == 0, f"{bad} of {tried} finite regions break the interval structure"


def check_window_additivity(rng) -> tuple[bool, str]:
    bad = 0
    for space in _systems(rng, 4):
        phi = table_potential(space.base, [float(rng.integers(-3, 4)) / 4 for _ in range(space.alphabet_size)])
        n = int(rng.integers(4, 11))
        cuts = np.sort(rng.uniform(phi.min, phi.max, 3)) + 1e-7 * math.pi
        edges = [phi.min - 1, *cuts.tolist(), phi.max + 1]
        total = sum(coarse_count(space, phi, n, (a, b)).count for a, b in zip(edges, edges[1:]))
        bad += total != count_words(space, n)
    return bad == 0, f"{bad} partitions miscounted"


def check_dp_vs_enumeration(rng, max_n: int = 16) -> tuple[bool, str]:
    bad = 0
    tried = 0
    for space in _systems(rng, 4):
        phi = table_potential(space.base, [float(rng.integers(-4, 5)) / 3 for _ in range(space.alphabet_size)])
        for n in (3, 8, max_n if space.alphabet_size <= 2 else 9):
            words = enumerate_words(space, n)
            avgs = np.array([sum(phi.table[(a,)] for a in w) / n for w in words])
            a = float(rng.uniform(phi.min, phi.max))
            b = a + float(rng.uniform(0, 0.6))
            brute = int(np.sum((avgs >= a - 1e-12) & (avgs <= b + 1e-12)))
            tried += 1
            bad += brute != coarse_count(space, phi, n, (a, b)).count
    return bad == 0, f"{bad} of {tried} counts disagree with enumeration"


CHECKS = (
    ("pressure monotonicity/translation/convexity", check_pressure_axioms),
    ("no coming back", check_no_coming_back),
    ("spectrum nonnegative on its domain", check_nonnegative),
    ("spectrum concave when u = psi", check_concavity),
    ("finite-T region is a half-line interval", check_finite_region),
    ("window additivity of coarse counts", check_window_additivity),
    ("coarse DP equals enumeration", check_dp_vs_enumeration),
)


def run_selftest(seed: int = 0) -> list[CheckResult]:
    out = []
    for name, fn in CHECKS:
        rng = np.random.default_rng(seed)
        t0 = time.perf_counter()
        try:
            passed, detail = fn(rng)
        except Exception as exc:  # a crash is a failed check, reported with its type
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, bool(passed), detail, time.perf_counter() - t0))
    return out
