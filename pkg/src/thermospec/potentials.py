"""Potentials on shift spaces: locally constant tables and sampled functions.

A locally constant potential of range ``r`` is a table over admissible
r-words: ``phi(x) = table[x_0 ... x_{r-1}]``. A sampled potential is a
function on [0, 1] pulled back through an :class:`IntervalCoding`; every
numerical routine reaches it through a range-r truncation whose sup-norm
error is recorded on the result.

The variation ``V_l(phi)`` is the largest oscillation of ``phi`` over an
l-cylinder. It controls truncation error and the cost of passing between a
shift and its run-restricted subshifts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
import heapq
import itertools
import math
from typing import Callable, Mapping

import numpy as np

from .coding import IntervalCoding, doubling_coding
from .errors import InputError, MismatchedSpaceError, MissingCodingError
from .shift import BlockGraph, ShiftSpace, Word, enumerate_words

TRUNCATION_RANGE = 8
VARIATION_DEPTH = 64


class Potential:
    """Common interface; see :class:`LocallyConstant`, :class:`Sampled`, :class:`Combination`."""

    kind: str
    space: ShiftSpace
    name: str

    @property
    def coding(self) -> IntervalCoding | None:
        return None

    def __add__(self, other: Potential) -> Potential:
        return linear_combination([(1.0, self), (1.0, other)])

    def __sub__(self, other: Potential) -> Potential:
        return linear_combination([(1.0, self), (-1.0, other)])

    def __rmul__(self, c: float) -> Potential:
        return linear_combination([(float(c), self)])


def _check_same_space(*pots: Potential) -> ShiftSpace:
    base = pots[0].space
    for p in pots[1:]:
        if p.space.transition != base.transition:
            raise MismatchedSpaceError(
                f"potentials {pots[0].name!r} and {p.name!r} live on different shift spaces"
            )
    return base


# -- locally constant ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LocallyConstant(Potential):
    """Table over admissible words of length ``range``.

    ``error`` is a sup-norm bound on the distance to the function this table
    stands in for (zero unless it came from :func:`truncate`).
    """

    space: ShiftSpace
    range: int
    table: Mapping[Word, float]
    name: str = ""
    error: float = 0.0
    _edge_cache: dict = field(default_factory=dict, repr=False, compare=False)

    kind = "locally_constant"

    def __post_init__(self):
        if self.range < 1:
            raise InputError("range must be >= 1")
        table = {tuple(int(a) for a in w): float(v) for w, v in dict(self.table).items()}
        expected = set(enumerate_words(self.space, self.range))
        if set(table) != expected:
            missing = sorted(expected - set(table))[:3]
            extra = sorted(set(table) - expected)[:3]
            raise InputError(
                f"table for {self.name or 'potential'} must cover exactly the admissible "
                f"{self.range}-words (missing {missing}, unexpected {extra})"
            )
        if not all(math.isfinite(v) for v in table.values()):
            raise InputError("table values must be finite")
        object.__setattr__(self, "table", table)

    def __call__(self, word) -> float:
        return self.table[tuple(word[: self.range])]

    @cached_property
    def values(self) -> np.ndarray:
        return np.array([self.table[w] for w in sorted(self.table)])

    @property
    def min(self) -> float:
        return float(self.values.min())

    @property
    def max(self) -> float:
        return float(self.values.max())

    @property
    def sup_norm(self) -> float:
        return float(np.abs(self.values).max())

    def is_constant(self, tol: float = 0.0) -> bool:
        return self.max - self.min <= tol

    def edge_values(self, graph: BlockGraph) -> np.ndarray:
        """Value on each block-graph edge (first ``range`` symbols of the window)."""
        if graph.width < self.range:
            raise InputError(f"block width {graph.width} below potential range {self.range}")
        if graph.space.transition != self.space.transition:
            raise MismatchedSpaceError("block graph built on a different shift space")
        key = id(graph)
        hit = self._edge_cache.get(key)
        if hit is not None and hit[0] is graph:
            return hit[1]
        r = self.range
        try:
            vals = np.array([self.table[w[:r]] for w in graph.windows], dtype=float)
        except KeyError as exc:
            raise MismatchedSpaceError(f"word {exc} missing from the potential table") from None
        vals.setflags(write=False)
        self._edge_cache[key] = (graph, vals)
        return vals

    def with_range(self, r: int) -> LocallyConstant:
        """The same function tabulated on longer words."""
        if r < self.range:
            raise InputError("cannot shorten the range of a table")
        if r == self.range:
            return self
        table = {w: self.table[w[: self.range]] for w in enumerate_words(self.space, r)}
        return LocallyConstant(self.space, r, table, self.name, self.error)


def table_potential(space: ShiftSpace, values, name: str = "", range: int | None = None) -> LocallyConstant:
    """Build a table from a per-symbol sequence or a ``{word: value}`` mapping."""
    if isinstance(values, Mapping):
        table = {tuple(int(a) for a in (w if not isinstance(w, int) else (w,))): v for w, v in values.items()}
        r = range or len(next(iter(table)))
        return LocallyConstant(space, r, table, name)
    values = list(values)
    if len(values) != space.alphabet_size:
        raise InputError("per-symbol table needs one value per symbol")
    return LocallyConstant(space, 1, {(a,): float(v) for a, v in enumerate(values)}, name)


def constant(space: ShiftSpace, c: float) -> LocallyConstant:
    return table_potential(space, [c] * space.alphabet_size, name=f"constant({c:g})")


def indicator(space: ShiftSpace, symbol: int = 1) -> LocallyConstant:
    if not 0 <= symbol < space.alphabet_size:
        raise InputError(f"symbol {symbol} not in alphabet")
    vals = [1.0 if a == symbol else 0.0 for a in range(space.alphabet_size)]
    return table_potential(space, vals, name=f"indicator({symbol})")


def log_bernoulli(space: ShiftSpace, probs) -> LocallyConstant:
    """``log p_a`` on symbol ``a``; the Bernoulli measure is its equilibrium state."""
    probs = np.asarray(probs, dtype=float)
    if probs.shape != (space.alphabet_size,) or np.any(probs <= 0) or abs(probs.sum() - 1) > 1e-12:
        raise InputError("probabilities must be positive, one per symbol, summing to 1")
    return table_potential(space, np.log(probs), name=f"log_bernoulli{tuple(probs.round(6))}")


# -- sampled ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Sampled(Potential):
    """``phi(x)`` for ``x`` in [0, 1], read through an interval coding.

    ``func(x, symbol)`` is vectorised in ``x``; ``symbol`` names the branch
    whose image contains ``x`` (needed where branch formulas disagree on a
    shared endpoint). ``monotone=True`` asserts that ``phi`` is monotone on
    every branch image, so extremes over a cylinder sit at its endpoints.
    Otherwise extremes are widened by ``lipschitz[symbol] * diameter``.
    """

    func: Callable[[np.ndarray, int], np.ndarray]
    coding_: IntervalCoding
    name: str = ""
    monotone: bool = True
    lipschitz: tuple[float, ...] = ()

    kind = "sampled"

    def __post_init__(self):
        if self.coding_ is None:
            raise MissingCodingError(f"sampled potential {self.name!r} needs an interval coding")
        if not self.monotone and len(self.lipschitz) != self.coding_.branch_count:
            raise InputError("non-monotone sampled potentials need per-branch Lipschitz constants")

    @property
    def coding(self) -> IntervalCoding:
        return self.coding_

    @property
    def space(self) -> ShiftSpace:
        return self.coding_.space

    def __call__(self, x, symbol: int | None = None):
        x = np.asarray(x, dtype=float)
        if symbol is None:
            symbol = self.coding_.branch_of(float(x))
        return self.func(x, symbol)

    def _eval_images(self, e0, e1, symbols):
        v0 = np.empty_like(e0)
        v1 = np.empty_like(e1)
        for a in range(self.coding_.branch_count):
            m = symbols == a
            if m.any():
                v0[m] = self.func(e0[m], a)
                v1[m] = self.func(e1[m], a)
        return v0, v1

    def cylinder_extrema(self, depth: int) -> tuple[np.ndarray, np.ndarray]:
        """Certified (inf, sup) of phi over every depth-``depth`` cylinder."""
        if depth < 1:
            raise InputError("depth must be >= 1")
        e0, e1 = self.coding_.cylinder_images(depth)
        d = self.coding_.branch_count
        symbols = np.arange(d**depth) // d ** (depth - 1)
        v0, v1 = self._eval_images(e0, e1, symbols)
        lo, hi = np.minimum(v0, v1), np.maximum(v0, v1)
        if not self.monotone:
            widen = np.asarray(self.lipschitz)[symbols] * np.abs(e1 - e0)
            lo, hi = lo - widen, hi + widen
        return lo, hi

    def word_extrema(self, word) -> tuple[float, float]:
        e0, e1 = self.coding_.images(word)
        v0 = float(self.func(np.array(e0), word[0]))
        v1 = float(self.func(np.array(e1), word[0]))
        lo, hi = min(v0, v1), max(v0, v1)
        if not self.monotone:
            w = self.lipschitz[word[0]] * abs(e1 - e0)
            lo, hi = lo - w, hi + w
        return lo, hi

    def orbit_sum(self, word, y: float) -> float:
        """``S_k phi`` at the point ``G_w(y)``; ``y`` in {0, 1} picks a cylinder endpoint."""
        total = 0.0
        for j in range(len(word)):
            e = self.coding_.images(word[j:])[int(y)]
            total += float(self.func(np.array(e), word[j]))
        return total


@dataclass(frozen=True, eq=False)
class Combination(Potential):
    """Finite linear combination with at least one sampled term."""

    terms: tuple[tuple[float, Potential], ...]
    name: str = ""

    kind = "sampled"

    def __post_init__(self):
        _check_same_space(*(p for _, p in self.terms))

    @property
    def space(self) -> ShiftSpace:
        return self.terms[0][1].space

    @property
    def coding(self) -> IntervalCoding | None:
        for _, p in self.terms:
            if p.coding is not None:
                return p.coding
        return None


def linear_combination(terms) -> Potential:
    """Sum of ``c * phi``; stays a table when every term is a table."""
    flat: list[tuple[float, Potential]] = []
    for c, p in terms:
        if isinstance(p, Combination):
            flat.extend((c * c2, p2) for c2, p2 in p.terms)
        else:
            flat.append((float(c), p))
    if not flat:
        raise InputError("empty combination")
    space = _check_same_space(*(p for _, p in flat))
    if all(isinstance(p, LocallyConstant) for _, p in flat):
        r = max(p.range for _, p in flat)
        tabs = [(c, p.with_range(r)) for c, p in flat]
        table = {w: sum(c * p.table[w] for c, p in tabs) for w in tabs[0][1].table}
        err = sum(abs(c) * p.error for c, p in flat)
        name = " + ".join(f"{c:g}*{p.name or '?'}" for c, p in flat)
        return LocallyConstant(space, r, table, name, err)
    return Combination(tuple(flat), name=" + ".join(f"{c:g}*{p.name or '?'}" for c, p in flat))


def combine(q: float, phi: Potential, alpha: float, psi: Potential, t: float, u: Potential) -> Potential:
    """The potential ``q (phi - alpha psi) - t u``."""
    _check_same_space(phi, psi, u)
    return linear_combination([(q, phi), (-q * alpha, psi), (-t, u)])


# -- builtin sampled potentials -----------------------------------------------


def pesin_zhang_potential(beta: float, coding: IntervalCoding | None = None) -> Sampled:
    """``-(1 - log x)**(-beta)`` on (0, 1] with value 0 at x = 0.

    Continuous but not Holder at 0; decreasing on [0, 1] from 0 to -1.
    The default coding is the doubling map, so x = 0 is the fixed point 0^inf.
    """
    beta = float(beta)
    if not 0 < beta <= 1:
        raise InputError("beta must lie in (0, 1]")
    coding = coding or doubling_coding()

    def func(x, symbol=None):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = -np.power(1.0 - np.log(x), -beta)
        return np.where(x > 0, out, 0.0)

    return Sampled(func, coding, name=f"pesin_zhang(beta={beta:g})", monotone=True)


def geometric_potential(coding: IntervalCoding) -> Sampled:
    """``u = log f'`` from the closed-form branch derivatives."""
    branches = coding.branches

    def func(x, symbol):
        return branches[symbol].log_fprime(x)

    lips = tuple(b.log_fprime_lipschitz() for b in branches)
    return Sampled(func, coding, name="log_derivative", monotone=True, lipschitz=lips)


# -- truncation and variation ---------------------------------------------------


def truncate(phi: Potential, r: int = TRUNCATION_RANGE, rule: str = "mid") -> LocallyConstant:
    """Range-r table approximating ``phi``.

    rule "mid" takes the midpoint of the cylinder extremes (error V_r / 2);
    "sup" and "inf" take the extremes themselves (error V_r). The "sup" rule
    keeps the maximum of phi in place, which matters when the maximum sits
    at a fixed point.
    """
    if rule not in ("mid", "sup", "inf"):
        raise InputError(f"unknown truncation rule {rule!r}")
    if isinstance(phi, LocallyConstant):
        return phi.with_range(max(r, phi.range))
    if isinstance(phi, Combination):
        parts = []
        for c, p in phi.terms:
            sub_rule = rule if rule == "mid" or c >= 0 else ("inf" if rule == "sup" else "sup")
            parts.append((c, truncate(p, r, sub_rule)))
        out = linear_combination(parts)
        return LocallyConstant(out.space, out.range, out.table, f"trunc{r}[{phi.name}]", out.error)
    lo, hi = phi.cylinder_extrema(r)
    vals = {"mid": (lo + hi) / 2, "sup": hi, "inf": lo}[rule]
    err = float(((hi - lo) / 2 if rule == "mid" else hi - lo).max())
    d = phi.coding.branch_count
    words = itertools.product(range(d), repeat=r)
    table = dict(zip(words, vals.tolist()))
    return LocallyConstant(phi.space, r, table, f"trunc{r}[{phi.name}]", err)


def as_table(phi: Potential, r: int = TRUNCATION_RANGE, rule: str = "mid") -> LocallyConstant:
    return phi if isinstance(phi, LocallyConstant) else truncate(phi, r, rule)


@dataclass(frozen=True)
class Variation:
    """``V_1 ... V_L`` with an optional power-law extension past the computed depth."""

    values: tuple[float, ...]
    exact: bool
    heuristic_rate: float | None = None

    @property
    def depth(self) -> int:
        return len(self.values)

    def __getitem__(self, ell: int) -> float:
        if ell < 1:
            raise IndexError("variation index starts at 1")
        if ell <= self.depth:
            return self.values[ell - 1]
        last = self.values[-1]
        if last == 0.0 or self.heuristic_rate is None:
            return last
        return last * (ell / self.depth) ** self.heuristic_rate

    def partial_sum(self, n: int) -> float:
        return float(sum(self[ell] for ell in range(1, n + 1)))

    @property
    def heuristic(self) -> bool:
        return self.heuristic_rate is not None


def variation(phi: Potential, depth: int = VARIATION_DEPTH, node_budget: int = 200_000) -> Variation:
    """Variation sequence of ``phi`` to ``depth``.

    Tables are exact. Sampled potentials use best-first search over nested
    cylinders: oscillation shrinks under refinement, so the top of the queue
    bounds every cylinder below it. Values beyond ``depth`` follow a power
    law fitted to the last half of the computed sequence (flagged heuristic).
    """
    if isinstance(phi, LocallyConstant):
        return _table_variation(phi, depth)
    if isinstance(phi, Combination):
        parts = [(abs(c), variation(p, depth, node_budget)) for c, p in phi.terms]
        vals = tuple(sum(c * v.values[i] for c, v in parts) for i in range(depth))
        rates = [v.heuristic_rate for _, v in parts if v.heuristic_rate is not None]
        return Variation(vals, all(v.exact for _, v in parts), max(rates) if rates else None)
    return _sampled_variation(phi, depth, node_budget)


def _table_variation(phi: LocallyConstant, depth: int) -> Variation:
    vals = []
    for ell in range(1, depth + 1):
        if ell >= phi.range:
            vals.append(0.0)
            continue
        groups: dict = {}
        for w, v in phi.table.items():
            lo, hi = groups.get(w[:ell], (v, v))
            groups[w[:ell]] = (min(lo, v), max(hi, v))
        vals.append(max(hi - lo for lo, hi in groups.values()))
    return Variation(tuple(vals), True, None)


def _sampled_variation(phi: Sampled, depth: int, node_budget: int) -> Variation:
    coding = phi.coding
    d = coding.branch_count

    def osc(word):
        lo, hi = phi.word_extrema(word)
        return hi - lo

    heap = [(-osc((a,)), 1, (a,)) for a in range(d)]
    heapq.heapify(heap)
    vals, pops, exact = [], 0, True
    for ell in range(1, depth + 1):
        while heap[0][1] < ell:
            if pops >= node_budget:
                exact = False
                break
            _, dep, w = heapq.heappop(heap)
            pops += 1
            for a in range(d):
                child = w + (a,)
                heapq.heappush(heap, (-osc(child), dep + 1, child))
        vals.append(-heap[0][0])
    # oscillation is monotone under refinement, so enforce the envelope
    vals = list(np.minimum.accumulate(vals))
    rate = None
    tail = np.array(vals[depth // 2 :])
    if depth >= 8 and tail[-1] > 0:
        ells = np.arange(depth // 2, depth) + 1
        slope = np.polyfit(np.log(ells), np.log(tail), 1)[0]
        rate = float(min(slope, 0.0))
    return Variation(tuple(float(v) for v in vals), exact, rate)


# -- Birkhoff sums over cylinders ---------------------------------------------


@dataclass(frozen=True)
class BirkhoffBounds:
    """Inf and sup of ``S_k phi`` over the cylinder of ``word``."""

    word: Word
    lower: float
    upper: float

    @property
    def width(self) -> float:
        return self.upper - self.lower


def _continuations(space: ShiftSpace, word, length: int):
    path = space.state_path(word)
    if path is None:
        raise InputError(f"word {tuple(word)} is not admissible")
    if length == 0:
        return [()]
    out = []

    def extend(st, tail):
        if len(tail) == length:
            out.append(tuple(tail))
            return
        for b in range(space.alphabet_size):
            nxt = space._next_state(st, b)
            if nxt is not None:
                tail.append(b)
                extend(nxt, tail)
                tail.pop()

    extend(space.states[path[-1]], [])
    return out


def birkhoff_bounds(phi: Potential, w, space: ShiftSpace | None = None) -> BirkhoffBounds:
    """Bounds on ``S_k phi`` over ``[w]``, ``k = len(w)``.

    Tables sum exactly inside the word and take the joint inf/sup over
    admissible continuations for windows that run past its end. Sampled
    potentials sum the cylinder extremes of phi along the suffixes of ``w``.
    """
    w = tuple(int(a) for a in w)
    if len(w) == 0:
        return BirkhoffBounds(w, 0.0, 0.0)
    space = space or phi.space
    if isinstance(phi, LocallyConstant):
        r = phi.range
        sums = []
        for c in _continuations(space, w, r - 1):
            x = w + c
            sums.append(sum(phi.table[x[j : j + r]] for j in range(len(w))))
        return BirkhoffBounds(w, float(min(sums)), float(max(sums)))
    if isinstance(phi, Combination):
        lo = hi = 0.0
        for c, p in phi.terms:
            b = birkhoff_bounds(p, w, space)
            lo += c * (b.lower if c >= 0 else b.upper)
            hi += c * (b.upper if c >= 0 else b.lower)
        return BirkhoffBounds(w, lo, hi)
    if phi.coding is None:
        raise MissingCodingError(f"sampled potential {phi.name!r} has no interval coding")
    if not space.is_admissible(w):
        raise InputError(f"word {w} is not admissible")
    lo = hi = 0.0
    for j in range(len(w)):
        a, b = phi.word_extrema(w[j:])
        lo += a
        hi += b
    return BirkhoffBounds(w, lo, hi)


# -- condition (P) diagnostic ---------------------------------------------------


@dataclass(frozen=True)
class GrowthDiagnostic:
    """``m_N = min over N-cylinders of sup S_N u``; growth to infinity is the check."""

    depths: tuple[int, ...]
    minima: tuple[float, ...]
    passed: bool


def growth_diagnostic(u: Potential, max_depth: int = 14, space: ShiftSpace | None = None) -> GrowthDiagnostic:
    """Numerical face of the covering condition on ``u``.

    The minimum over cylinders of the largest Birkhoff sum must keep growing
    with the depth. Lower estimates of each cylinder's sup come from actual
    orbits (cylinder endpoints for sampled potentials, the best continuation
    for tables), so a pass is not an artefact of widening.
    """
    space = space or u.space
    depths = tuple(range(1, max_depth + 1))
    minima = []
    for n in depths:
        if isinstance(u, LocallyConstant):
            minima.append(_table_min_sup(u, space, n))
        else:
            vals = []
            for w in enumerate_words(space, n):
                vals.append(max(_orbit_sum(u, w, 0), _orbit_sum(u, w, 1)))
            minima.append(min(vals))
    m = np.array(minima)
    half = len(m) // 2
    passed = bool(m[-1] > 0 and np.all(np.diff(m[half:]) > 1e-12))
    return GrowthDiagnostic(depths, tuple(float(v) for v in m), passed)


def _orbit_sum(u: Potential, w, y: int) -> float:
    if isinstance(u, Sampled):
        return u.orbit_sum(w, y)
    if isinstance(u, Combination):
        return sum(c * _orbit_sum(p, w, y) if not isinstance(p, LocallyConstant)
                   else c * birkhoff_bounds(p, w).upper for c, p in u.terms)
    return birkhoff_bounds(u, w).upper


def _table_min_sup(u: LocallyConstant, space: ShiftSpace, n: int) -> float:
    from .shift import block_graph

    R = max(u.range, 2)
    g = block_graph(space, R)
    ev = u.edge_values(g)
    # tail: best continuation of R - 1 edges from each node (max-plus)
    tail = np.zeros(g.n_nodes)
    for _ in range(R - 1):
        cand = ev + tail[g.dst]
        nt = np.full(g.n_nodes, -np.inf)
        np.maximum.at(nt, g.src, cand)
        tail = nt
    if n < R - 1:
        words = enumerate_words(space, n)
        return min(birkhoff_bounds(u, w, space).upper for w in words)
    head = np.where(g.fresh_mask, 0.0, np.inf)
    for _ in range(n - R + 1):
        cand = head[g.src] + ev
        nh = np.full(g.n_nodes, np.inf)
        np.minimum.at(nh, g.dst, cand)
        head = nh
    return float(np.min(head + tail))
