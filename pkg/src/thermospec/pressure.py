"""Topological pressure with certified brackets.

For a locally constant potential the pressure is the log Perron root of the
weighted block matrix ``W[i, j] = exp(phi(edge))``. The root is computed in
extended precision (numpy ``longdouble``) and certified by Collatz-Wielandt
bounds ``min_i (Wv)_i / v_i <= lambda <= max_i (Wv)_i / v_i``, valid for any
positive vector ``v``.

General potentials go through partition sums over cylinders. The sup-sum is
submultiplicative, so every depth gives an upper bound for the limit. The
lower bound is the spectral radius of the block-concatenation matrix built
from inf-sums, which is supermultiplicative for the limit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math
from typing import Mapping

import numpy as np
import scipy.sparse as sp

from .errors import BudgetExceededError, ConvergenceError, InputError
from .potentials import (
    Combination,
    LocallyConstant,
    Potential,
    Sampled,
    TRUNCATION_RANGE,
    as_table,
    variation,
)
from .shift import (
    DEFAULT_ENUMERATION_BUDGET,
    BlockGraph,
    ShiftSpace,
    block_graph,
    restrict_run,
)

LD = np.longdouble
EIG_TOL = 1e-10
DENSE_LIMIT = 1500
MAX_ITER = 100_000


@dataclass(frozen=True)
class PressureEstimate:
    value: float
    lower: float
    upper: float
    method: str
    depth: int
    meta: Mapping = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if not self.lower <= self.value <= self.upper:
            raise ValueError(f"inconsistent estimate {self.lower} <= {self.value} <= {self.upper}")

    @property
    def gap(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class PerronData:
    """Perron triple of a weighted block graph; logs are in extended precision."""

    log_root: np.longdouble
    log_lower: np.longdouble
    log_upper: np.longdouble
    right: np.ndarray
    left: np.ndarray | None
    iterations: int

    def edge_measure(self, graph: BlockGraph, log_weights) -> np.ndarray:
        """Equilibrium mass of each edge, ``l_i W_ij h_j / (lambda l.h)``."""
        if self.left is None:
            raise ValueError("left eigenvector was not computed")
        lw = np.asarray(log_weights, dtype=LD)
        m = lw.max()
        w = np.exp(lw - m) / np.exp(self.log_root - m)
        mass = self.left[graph.src] * w * self.right[graph.dst]
        return (mass / mass.sum()).astype(float)


@dataclass(frozen=True, eq=False)
class WeightedMatrix:
    """Nonnegative matrix ``exp(log_weights)`` on the edges of a block graph."""

    graph: BlockGraph
    log_weights: np.ndarray

    @property
    def states(self):
        return self.graph.node_symbols

    def dense(self, dtype=LD) -> tuple[np.ndarray, np.longdouble]:
        """Scaled dense matrix and the log of the scale factor taken out."""
        lw = np.asarray(self.log_weights, dtype=LD)
        m = lw.max()
        W = np.zeros((self.graph.n_nodes, self.graph.n_nodes), dtype=dtype)
        W[self.graph.src, self.graph.dst] = np.exp(lw - m).astype(dtype)
        return W, m


def perron(graph: BlockGraph, log_weights, want_left: bool = False, tol: float = EIG_TOL) -> PerronData:
    """Certified Perron root of ``exp(log_weights)`` on ``graph``.

    Dense graphs start from a LAPACK eigenvector and polish it by Newton
    steps with extended-precision residuals. Large graphs, or a failed
    polish, fall back to power iteration on ``I + W`` (aperiodic even when
    ``W`` is periodic), stopping once the bracket is below ``tol`` or after
    ``MAX_ITER`` steps.
    """
    wm = WeightedMatrix(graph, np.asarray(log_weights))
    n = graph.n_nodes
    if n <= DENSE_LIMIT:
        W, m = wm.dense()
        res = _dense_perron(W, tol)
        left = None
        if want_left:
            left = _dense_perron(W.T.copy(), tol)[3]
        lam, lo, hi, v, its = res
        return PerronData(m + np.log(lam), m + np.log(lo), m + np.log(hi), v, left, its)
    lw = np.asarray(log_weights, dtype=float)
    m = lw.max()
    W = sp.csr_matrix((np.exp(lw - m), (graph.src, graph.dst)), shape=(n, n))
    lam, lo, hi, v, its = _power_iteration(W, np.full(n, 1.0 / n), tol)
    left = None
    if want_left:
        left = _power_iteration(W.T.tocsr(), np.full(n, 1.0 / n), tol)[3].astype(LD)
    return PerronData(LD(m) + np.log(LD(lam)), LD(m) + np.log(LD(lo)), LD(m) + np.log(LD(hi)),
                      v.astype(LD), left, its)


def _collatz(W, v):
    Wv = W @ v
    ratio = Wv / v
    return ratio.min(), ratio.max()


def _dense_perron(W: np.ndarray, tol: float):
    n = W.shape[0]
    W64 = W.astype(float)
    if n == 1:
        lam = W[0, 0]
        return lam, lam, lam, np.ones(1, dtype=LD), 0
    vals, vecs = np.linalg.eig(W64)
    k = int(np.argmax(vals.real))
    lam = LD(vals[k].real)
    v = np.abs(vecs[:, k].real).astype(LD)
    if not np.all(v > 0) or not lam > 0:
        v = np.full(n, LD(1) / n)
        lam, lo, hi, v, its = _power_iteration(W, v, tol)
        return LD(lam), LD(lo), LD(hi), np.asarray(v, dtype=LD), its
    v /= v.sum()
    J = np.zeros((n + 1, n + 1))
    J[n, :n] = 1.0
    its = 0
    for its in range(1, 8):
        r = W @ v - lam * v
        J[:n, :n] = W64 - float(lam) * np.eye(n)
        J[:n, n] = -v.astype(float)
        rhs = np.concatenate([-r.astype(float), [float(1 - v.sum())]])
        try:
            step = np.linalg.solve(J, rhs)
        except np.linalg.LinAlgError:
            break
        v = v + step[:n].astype(LD)
        lam = lam + LD(step[n])
        if abs(step[n]) <= 1e-19 * float(lam):
            break
    # Entries far below the largest one carry only absolute accuracy after the
    # solve and may come out slightly negative. Each product W v / lam recomputes
    # them as sums of positive terms, so a few refreshes restore relative accuracy.
    v = np.where(v > 0, v, LD(0))
    for refresh in range(n + 1):
        if np.all(v > 0):
            lo, hi = _collatz(W, v)
            if hi - lo <= tol * lo:
                return lam, lo, hi, v, its + refresh
        v = W @ v / lam
        v /= v.sum()
    v = np.where(v > 0, v, LD(1e-300))
    lam, lo, hi, v, its2 = _power_iteration(W, v, tol)
    return LD(lam), LD(lo), LD(hi), np.asarray(v, dtype=LD), its + its2


def _power_iteration(W, v, tol: float):
    v = np.asarray(v)
    v = v / v.sum()
    lo, hi = -np.inf, np.inf
    for it in range(1, MAX_ITER + 1):
        Wv = W @ v
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = Wv / v
        if np.all(v > 0):
            lo, hi = ratio.min(), ratio.max()
            if hi - lo <= tol * lo:
                return (lo + hi) / 2, lo, hi, v, it
        # iterate with I + W so that periodic W still converges
        v = v + Wv
        v = v / v.sum()
    raise ConvergenceError(
        f"power iteration did not certify within {MAX_ITER} steps",
        bracket=(float(np.log(max(lo, 1e-300))), float(np.log(hi))),
    )


def _estimate(data: PerronData, method: str, meta: dict) -> PressureEstimate:
    lo = float(data.log_lower)
    hi = float(data.log_upper)
    lo = math.nextafter(lo, -math.inf)
    hi = math.nextafter(hi, math.inf)
    val = min(max(float(data.log_root), lo), hi)
    return PressureEstimate(val, lo, hi, method, data.iterations, {**meta, "value_ld": data.log_root})


def pressure_spectral(space: ShiftSpace, phi: LocallyConstant, tol: float = EIG_TOL) -> PressureEstimate:
    """``log`` Perron root of the weighted block matrix of a table."""
    if not isinstance(phi, LocallyConstant):
        raise InputError("spectral pressure needs a locally constant potential; truncate first")
    g = block_graph(space, max(phi.range, 2))
    data = perron(g, phi.edge_values(g), tol=tol)
    return _estimate(data, "spectral", {"nodes": g.n_nodes})


def pressure(space: ShiftSpace, phi: Potential, truncation_range: int = TRUNCATION_RANGE,
             tol: float = EIG_TOL) -> PressureEstimate:
    """Spectral pressure, truncating sampled potentials and widening by the truncation error."""
    table = as_table(phi, truncation_range)
    est = pressure_spectral(space, table, tol)
    if table.error == 0.0:
        return est
    e = table.error
    return PressureEstimate(est.value, est.lower - e, est.upper + e, est.method, est.depth,
                            {**est.meta, "truncation_error": e, "truncation_range": table.range})


# -- partition sums -------------------------------------------------------------


def _tail_extreme(g: BlockGraph, ev: np.ndarray, steps: int, op) -> np.ndarray:
    """Best sum over ``steps`` edges leaving each node (op = max or min)."""
    fill = -np.inf if op is np.maximum else np.inf
    tail = np.zeros(g.n_nodes)
    for _ in range(steps):
        cand = ev + tail[g.dst]
        nt = np.full(g.n_nodes, fill)
        op.at(nt, g.src, cand)
        tail = nt
    return tail


def _propagate(g: BlockGraph, start: np.ndarray, ev: np.ndarray, steps: int):
    """Forward sums of ``exp(edge values)`` from rows of ``start``; returns (vectors, log scale)."""
    V = np.array(start, dtype=float, ndmin=2)
    m = float(ev.max())
    w = np.exp(ev - m)
    log_scale = 0.0
    for _ in range(steps):
        nv = np.zeros_like(V)
        contrib = V[:, g.src] * w
        for row in range(V.shape[0]):
            np.add.at(nv[row], g.dst, contrib[row])
        s = nv.max()
        if s <= 0:
            break
        V = nv / s
        log_scale += math.log(s) + m
    return V, log_scale


def _log_spectral_radius(logB: np.ndarray) -> float:
    finite = logB[np.isfinite(logB)]
    if finite.size == 0:
        return -math.inf
    m = finite.max()
    B = np.exp(logB - m)
    return m + math.log(max(abs(np.linalg.eigvals(B))))


def pressure_partition(space: ShiftSpace, phi: Potential, k: int,
                       budget: int = DEFAULT_ENUMERATION_BUDGET) -> PressureEstimate:
    """Bracket the pressure by depth-k partition sums.

    upper = (1/k) log sum_{|w|=k} exp(sup_[w] S_k phi);
    lower = (1/k) log rho(B_k), with ``B_k[i, j]`` the inf-weighted sum over
    k-blocks starting in state ``i`` whose last state may be followed by ``j``.
    Tables use a dynamic program over the block graph; other potentials
    enumerate words.
    """
    if k < 1:
        raise InputError("depth must be >= 1")
    if isinstance(phi, LocallyConstant) and k >= max(phi.range, 2) - 1:
        lo, hi = _partition_table(space, phi, k)
    else:
        lo, hi = _partition_enumerate(space, phi, k, budget)
    lo = math.nextafter(lo, -math.inf)
    hi = math.nextafter(hi, math.inf)
    return PressureEstimate((lo + hi) / 2, lo, hi, "partition_sum", k)


def _partition_table(space: ShiftSpace, phi: LocallyConstant, k: int) -> tuple[float, float]:
    R = max(phi.range, 2)
    g = block_graph(space, R)
    ev = phi.edge_values(g)
    steps = k - R + 1
    tmax = _tail_extreme(g, ev, R - 1, np.maximum)
    tmin = _tail_extreme(g, ev, R - 1, np.minimum)
    V, ls = _propagate(g, g.fresh_mask.astype(float), ev, steps)
    tm = tmax.max()
    upper = (ls + tm + math.log(float(V[0] @ np.exp(tmax - tm)))) / k
    S = len(space.states)
    start = np.zeros((S, g.n_nodes))
    start[g.first_state, np.arange(g.n_nodes)] = 1.0
    V, ls = _propagate(g, start, ev, steps)
    tn = tmin.max()
    end = V * np.exp(tmin - tn)
    by_last = np.zeros((S, S))
    for e in range(S):
        by_last[:, e] = end[:, g.last_state == e].sum(axis=1)
    B = by_last @ space.state_matrix.astype(float)
    with np.errstate(divide="ignore"):
        logB = np.log(B) + ls + tn
    lower = _log_spectral_radius(logB) / k
    return lower, upper


def _suffix_extrema(phi: Potential, space: ShiftSpace, m: int):
    """Arrays (inf, sup) of phi over depth-m cylinders, indexed by base-d code."""
    d = space.alphabet_size
    if isinstance(phi, Sampled):
        return phi.cylinder_extrema(m)
    if isinstance(phi, Combination):
        lo = np.zeros(d**m)
        hi = np.zeros(d**m)
        for c, p in phi.terms:
            a, b = _suffix_extrema(p, space, m)
            lo += c * (a if c >= 0 else b)
            hi += c * (b if c >= 0 else a)
        return lo, hi
    r = phi.range
    lo = np.full(d**m, np.inf)
    hi = np.full(d**m, -np.inf)
    for w, v in phi.table.items():
        if m >= r:
            # all extensions of w to length m share the value
            span = d ** (m - r)
            code = _code(w, d) * span
            lo[code : code + span] = np.minimum(lo[code : code + span], v)
            hi[code : code + span] = np.maximum(hi[code : code + span], v)
        else:
            code = _code(w[:m], d)
            lo[code] = min(lo[code], v)
            hi[code] = max(hi[code], v)
    return lo, hi


def _code(w, d):
    c = 0
    for a in w:
        c = c * d + a
    return c


def _paths_from(space: ShiftSpace, start_state: int, k: int):
    """Codes and final states of all k-symbol state paths from ``start_state``."""
    d = space.alphabet_size
    M = space.state_matrix
    syms = space.state_symbols
    codes = np.array([syms[start_state]], dtype=np.int64)
    states = np.array([start_state], dtype=np.int64)
    for _ in range(k - 1):
        src, dst = np.nonzero(M[states])
        codes = codes[src] * d + syms[dst]
        states = dst
    return codes, states


def _partition_enumerate(space: ShiftSpace, phi: Potential, k: int, budget: int):
    d = space.alphabet_size
    if d**k > budget:
        raise BudgetExceededError(f"{d}^{k} words exceeds the enumeration budget {budget}")
    if phi.space.transition != space.transition:
        raise InputError("potential lives on a different shift space")
    ext = {m: _suffix_extrema(phi, space, m) for m in range(1, k + 1)}

    def sums(codes):
        lo = np.zeros(len(codes))
        hi = np.zeros(len(codes))
        for j in range(k):
            m = k - j
            suffix = codes % d**m
            lo += ext[m][0][suffix]
            hi += ext[m][1][suffix]
        return lo, hi

    S = len(space.states)
    logB = np.full((S, S), -np.inf)
    up_terms = []
    fresh = set(int(i) for i in space.fresh_states)
    M = space.state_matrix
    for i in range(S):
        codes, last = _paths_from(space, i, k)
        lo, hi = sums(codes)
        if i in fresh:
            up_terms.append(hi)
        for j in range(S):
            sel = M[last, j]
            if sel.any():
                x = lo[sel]
                mx = x.max()
                logB[i, j] = mx + math.log(np.exp(x - mx).sum())
    allhi = np.concatenate(up_terms)
    mx = allhi.max()
    upper = (mx + math.log(np.exp(allhi - mx).sum())) / k
    lower = _log_spectral_radius(logB) / k
    return lower, upper


# -- restricted subshifts and shifted bounds ----------------------------------


def pressure_restricted(space: ShiftSpace, phi: Potential, n: int, symbol: int = 0,
                        truncation_range: int = TRUNCATION_RANGE) -> PressureEstimate:
    """Pressure on the subshift where ``symbol`` never repeats more than ``n`` times.

    ``meta["full_space_upper"]`` carries the comparison bound
    ``P_X <= P_{X_n} + (log 2 + sum_{l<=n} V_l) / n``.
    """
    sub = restrict_run(space, symbol, n)
    est = pressure(sub, phi, truncation_range)
    var = variation(phi, max(n, 1))
    vsum = var.partial_sum(n)
    bound = est.upper + (math.log(2) + vsum) / n
    meta = {**est.meta, "n": n, "symbol": symbol, "variation_sum": vsum,
            "variation_heuristic": var.heuristic, "full_space_upper": bound}
    return PressureEstimate(est.value, est.lower, est.upper, est.method, est.depth, meta)


def pressure_bound_shift(estimate: PressureEstimate, t: float, phi_bounds: tuple[float, float]):
    """``[P(eta) + a t, P(eta) + b t]`` containing ``P(eta + t phi)`` when ``a <= S_n phi / n <= b``."""
    a, b = phi_bounds
    if not t > 0:
        raise InputError("t must be positive; for t < 0 swap the roles of the bounds and negate")
    if a > b:
        raise InputError("phi_bounds must satisfy a <= b")
    return (estimate.lower + a * t, estimate.upper + b * t)
