"""Exact coarse multifractal counts.

``Lambda_n(U)`` is the number of admissible n-words whose Birkhoff average
of a range-1 potential lies in the window ``U``. Table values are put on an
integer lattice (exactly when they are rationals with a small common
denominator, otherwise rounded to denominator ``10**4`` with the rounding
error carried as slack) and the count is a dynamic program over
``(state, lattice sum)`` in exact integer arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
import math
from typing import Mapping, Sequence

import numpy as np

from .errors import InputError, LatticeExplosionError
from .potentials import LocallyConstant, Potential, as_table, constant, table_potential
from .pressure import perron
from .shift import ShiftSpace, block_graph
from .spectra import minimize_t_alpha, spectral_system

MAX_DENOMINATOR = 10_000
LATTICE_BUDGET = 5_000_000
NEG_INF = -math.inf


@dataclass(frozen=True)
class Lattice:
    """Integer images ``k_a`` of the table values with ``value_a ~ k_a / denominator``."""

    ints: np.ndarray
    denominator: int
    perturbation: float
    exact: bool


def rationalize(values, max_denominator: int = MAX_DENOMINATOR, tol: float = 1e-12) -> Lattice:
    """Common-denominator integer lattice for ``values``.

    Values that are rationals with denominators whose least common multiple
    is at most ``max_denominator`` are represented exactly; otherwise all
    values are rounded to multiples of ``1 / max_denominator``.
    """
    vals = [float(v) for v in values]
    fracs = [Fraction(v).limit_denominator(max_denominator) for v in vals]
    if all(abs(float(f) - v) <= tol for f, v in zip(fracs, vals)):
        D = 1
        for f in fracs:
            D = D * f.denominator // math.gcd(D, f.denominator)
        if D <= max_denominator:
            ints = np.array([int(f * D) for f in fracs], dtype=object)
            err = max(abs(float(f) - v) for f, v in zip(fracs, vals))
            return Lattice(ints, D, err, True)
    D = max_denominator
    ints = np.array([round(v * D) for v in vals], dtype=object)
    err = max(abs(int(k) / D - v) for k, v in zip(ints, vals))
    return Lattice(ints, D, err, False)


@dataclass(frozen=True)
class CoarseCount:
    n: int
    window: tuple[float, float]
    count: int
    rate: float
    meta: Mapping = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("counts are nonnegative")


def block_recode(space: ShiftSpace, phi: LocallyConstant) -> tuple[ShiftSpace, LocallyConstant]:
    """Recode a range-r table as a range-1 table on the shift of r-blocks.

    The new alphabet is the set of state paths of length r; an n-word of the
    recoded shift is a path of n + r - 1 states.
    """
    g = block_graph(space, max(phi.range, 2))
    if phi.range == 1:
        return space, phi
    n_edges = len(g.src)
    A = np.zeros((n_edges, n_edges), dtype=bool)
    for e in range(n_edges):
        A[e, np.flatnonzero(g.src == g.dst[e])] = True
    rec = ShiftSpace.from_matrix(A, name=f"{space.name}[{phi.range}-blocks]")
    vals = phi.edge_values(g)
    return rec, table_potential(rec, list(vals), name=f"{phi.name}[recoded]")


def _window_bounds(window, n: int, D: int) -> tuple[int, int]:
    """Integer sums ``s`` with ``s / (n D)`` in ``[a, b]``: ``lo <= s <= hi``.

    Endpoints are read as the shortest decimals that print as the given
    floats, so a window typed as 0.45 includes the average 9/20.
    """
    a, b = window
    lo = -math.inf if a == -math.inf else math.ceil(Fraction(repr(a)) * n * D)
    hi = math.inf if b == math.inf else math.floor(Fraction(repr(b)) * n * D)
    return lo, hi


def sum_distribution(space: ShiftSpace, ints, n: int, budget: int = LATTICE_BUDGET):
    """Counts of n-words by lattice sum: ``(offset, counts)`` with ``counts[s - offset]``."""
    ints = [int(k) for k in ints]
    kmin, kmax = min(ints), max(ints)
    width = n * (kmax - kmin) + 1
    S = len(space.states)
    if width * S > budget:
        raise LatticeExplosionError(
            f"value lattice of {width} points over {S} states exceeds the budget {budget}; "
            "lower the rationalization denominator"
        )
    big = len(space.states) > 0 and n * math.log2(max(space.alphabet_size, 2)) >= 62
    dtype = object if big else np.int64
    shift = np.array([ints[a] - kmin for a in space.state_symbols])
    M = space.state_matrix
    cur = np.zeros((S, width), dtype=dtype)
    for i in space.fresh_states:
        cur[i, shift[i]] += 1
    for _ in range(n - 1):
        nxt = np.zeros((S, width), dtype=dtype)
        for j in range(S):
            preds = np.flatnonzero(M[:, j])
            if len(preds) == 0:
                continue
            acc = cur[preds].sum(axis=0)
            k = shift[j]
            nxt[j, k:] += acc[: width - k]
        cur = nxt
    return n * kmin, cur.sum(axis=0)


def coarse_count(space: ShiftSpace, phi: Potential, n: int, window,
                 max_denominator: int = MAX_DENOMINATOR, budget: int = LATTICE_BUDGET) -> CoarseCount:
    """Exact number of n-words with Birkhoff average of ``phi`` in ``window``."""
    if n < 1:
        raise InputError("n must be >= 1")
    a, b = (float(window[0]), float(window[1]))
    if a > b:
        raise InputError("window must satisfy lower <= upper")
    if not isinstance(phi, LocallyConstant):
        raise InputError("coarse counts need a locally constant potential; truncate first")
    rec_space, rec_phi = block_recode(space, phi) if phi.range > 1 else (space, phi)
    vals = [rec_phi.table[(s,)] for s in range(rec_space.alphabet_size)]
    lat = rationalize(vals, max_denominator)
    offset, dist = sum_distribution(rec_space, lat.ints, n, budget)
    lo, hi = _window_bounds((a, b), n, lat.denominator)
    i0 = max(0, lo - offset) if lo != -math.inf else 0
    i1 = min(len(dist) - 1, hi - offset) if hi != math.inf else len(dist) - 1
    count = int(sum(int(c) for c in dist[i0: i1 + 1])) if i1 >= i0 else 0
    points = max(0, i1 - i0 + 1)
    rate = math.log(count) / n if count > 0 else NEG_INF
    meta = {"denominator": lat.denominator, "perturbation": lat.perturbation,
            "exact_lattice": lat.exact, "lattice_points": points, "recoded": phi.range > 1}
    return CoarseCount(n, (a, b), count, rate, meta)


@dataclass(frozen=True)
class CoarseSpectrum:
    """Rates per ``(alpha, n)`` and finite-n stand-ins for the lower and upper spectra."""

    alphas: np.ndarray
    n_list: tuple[int, ...]
    radius: float
    counts: np.ndarray
    rates: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def rows(self):
        for i, a in enumerate(self.alphas):
            for j, n in enumerate(self.n_list):
                yield float(a), n, int(self.counts[i, j]), float(self.rates[i, j])


def coarse_spectrum(space: ShiftSpace, phi: Potential, alpha_grid, window_radius: float,
                    n_list: Sequence[int], coarse_range: int = 1) -> CoarseSpectrum:
    """Rates of ``coarse_count`` on ``[alpha - r, alpha + r]``.

    ``lower``/``upper`` are the min/max rate over the largest half of
    ``n_list`` (finite-n estimates, not limits).
    """
    tab = as_table(phi, coarse_range)
    alphas = np.asarray(alpha_grid, dtype=float)
    ns = tuple(int(n) for n in n_list)
    counts = np.zeros((len(alphas), len(ns)), dtype=object)
    rates = np.zeros((len(alphas), len(ns)))
    for j, n in enumerate(ns):
        for i, a in enumerate(alphas):
            c = coarse_count(space, tab, n, (a - window_radius, a + window_radius))
            counts[i, j] = c.count
            rates[i, j] = c.rate
    order = np.argsort(ns)
    tail = order[len(ns) // 2:]
    return CoarseSpectrum(alphas, ns, float(window_radius), counts, rates,
                          rates[:, tail].min(axis=1), rates[:, tail].max(axis=1))


# -- the inequality chain --------------------------------------------------------


@dataclass(frozen=True)
class ChainCell:
    alpha: float
    n: int
    rate: float
    bound: float
    spectrum_sup: float
    slack: float

    @property
    def violation(self) -> float:
        return self.rate - self.bound if math.isfinite(self.rate) else NEG_INF


@dataclass(frozen=True)
class ChainReport:
    cells: tuple[ChainCell, ...]

    @property
    def max_violation(self) -> float:
        v = [c.violation for c in self.cells]
        return max(v) if v else NEG_INF

    @property
    def violations(self) -> tuple[ChainCell, ...]:
        return tuple(c for c in self.cells if c.violation > 0)

    @property
    def ok(self) -> bool:
        return not self.violations


def _transfer_constant(space: ShiftSpace, phi: LocallyConstant, q: float) -> float:
    """``log K`` with ``sum_w exp(q S_n phi(w)) <= K lambda^n`` for every ``n``."""
    g = block_graph(space, 2)
    ev = q * np.asarray(phi.edge_values(g), dtype=float)
    data = perron(g, ev)
    h = np.asarray(data.right, dtype=float)
    lam = math.exp(float(data.log_root))
    last = np.exp(q * np.array([phi.table[(int(s),)] for s in space.state_symbols]))
    # the weight of a word is exp(q phi) at each symbol; bound the last factor by h
    starts = space.fresh_states
    return math.log(float(np.max(last / h) * h[starts].sum() / lam))


def chain_check(space: ShiftSpace, phi: Potential, alpha_grid, n_list: Sequence[int],
                radius: float = 0.05, coarse_range: int = 1, tol: float = 1e-9) -> ChainReport:
    """Check ``rate_n(U) <= sup_U S + slack(n)`` at each ``(alpha, n)``.

    The slack is ``(log L + log K) / n`` with ``L`` the number of lattice
    points in the window and ``K`` the transfer-matrix constant of the
    Chernoff bound at the optimal ``q``; rounding of irrational table values
    widens the window by the rounding error. Violations are recorded, not
    raised.
    """
    tab = as_table(phi, coarse_range)
    rec_space, rec_phi = block_recode(space, tab) if tab.range > 1 else (space, tab)
    one = constant(rec_phi.space, 1.0)
    system = spectral_system(rec_space, rec_phi, one, one)
    peak = _peak_alpha(system)
    cells = []
    for n in n_list:
        for a in alpha_grid:
            c = coarse_count(rec_space, rec_phi, n, (a - radius, a + radius))
            if c.count == 0:
                cells.append(ChainCell(float(a), n, NEG_INF, NEG_INF, NEG_INF, 0.0))
                continue
            e = c.meta["perturbation"]
            lo, hi = a - radius - e, a + radius + e
            beta = min(max(peak, lo), hi)
            if system.domain is not None:
                beta = min(max(beta, system.domain[0]), system.domain[1])
            pt = minimize_t_alpha(system, beta)
            q = pt.q_star if math.isfinite(pt.q_star) else 0.0
            slack = (math.log(max(c.meta["lattice_points"], 1)) + _transfer_constant(rec_space, rec_phi, q)) / n
            cells.append(ChainCell(float(a), n, c.rate, pt.value + slack + tol, pt.value, slack))
    return ChainReport(tuple(cells))


def _peak_alpha(system) -> float:
    """Average of phi under the measure of maximal entropy (where S peaks)."""
    r = system.root(0.0, 0.0, want_slope=True)
    return float(r.slope)
