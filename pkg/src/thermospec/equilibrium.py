"""Finite-order Markov measures: equilibrium states, entropy and integrals.

A measure lives on a block graph of some width ``w``; its order is ``w - 1``
(the number of states in a node). Edge masses ``pi_i P_ij`` are the measures
of the corresponding (w)-cylinders, so a potential of range ``r <= w`` is
integrated by one dot product. Longer potentials lift the measure first.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .errors import InputError
from .potentials import LocallyConstant, Potential
from .pressure import LD, perron
from .shift import BlockGraph, ShiftSpace, Word, block_graph

ROW_TOL = 1e-12
STATIONARY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class MarkovMeasure:
    graph: BlockGraph
    stochastic: np.ndarray
    stationary: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.stochastic, dtype=float)
        pi = np.asarray(self.stationary, dtype=float)
        n = self.graph.n_nodes
        if P.shape != (n, n) or pi.shape != (n,):
            raise InputError("stochastic matrix and stationary vector must match the graph")
        allowed = np.zeros((n, n), dtype=bool)
        allowed[self.graph.src, self.graph.dst] = True
        if np.any(P[~allowed] != 0) or np.any(P < 0):
            raise InputError("stochastic matrix puts mass outside the allowed transitions")
        if np.max(np.abs(P.sum(axis=1) - 1)) > ROW_TOL:
            raise InputError("rows of the stochastic matrix must sum to 1")
        if np.any(pi < -1e-15) or abs(pi.sum() - 1) > ROW_TOL:
            raise InputError("stationary vector must be a probability vector")
        if np.max(np.abs(pi @ P - pi)) > STATIONARY_TOL:
            raise InputError("stationary vector is not fixed by the stochastic matrix")
        P.setflags(write=False)
        pi = np.clip(pi, 0.0, None)
        pi.setflags(write=False)
        object.__setattr__(self, "stochastic", P)
        object.__setattr__(self, "stationary", pi)

    @property
    def order(self) -> int:
        return self.graph.width - 1

    @property
    def space(self) -> ShiftSpace:
        return self.graph.space

    def edge_masses(self) -> np.ndarray:
        g = self.graph
        return self.stationary[g.src] * self.stochastic[g.src, g.dst]

    def cylinder_mass(self, word) -> float:
        """Measure of the cylinder of ``word`` (any length)."""
        w = tuple(word)
        width = self.graph.width
        if len(w) < width - 1:
            return float(sum(self.cylinder_mass(w + (a,)) for a in range(self.space.alphabet_size)
                             if self.space.is_admissible(w + (a,))))
        path = self.space.state_path(w)
        if path is None:
            return 0.0
        # a word determines its state path only from a fresh start; sum over
        # the run states a cylinder can begin in
        total = 0.0
        for start in _start_states(self.space, w[0]):
            states = _path_from(self.space, start, w)
            if states is None:
                continue
            total += self._path_mass(states)
        return total

    def _path_mass(self, states) -> float:
        index = _node_index(self.graph)
        k = self.graph.width - 1
        node = index.get(tuple(states[:k]))
        if node is None:
            return 0.0
        m = self.stationary[node]
        for t in range(1, len(states) - k + 1):
            nxt = index[tuple(states[t : t + k])]
            m *= self.stochastic[node, nxt]
            node = nxt
        return float(m)


def _start_states(space: ShiftSpace, a: int):
    return [i for i, (s, _) in enumerate(space.states) if s == a]


def _path_from(space: ShiftSpace, start: int, w):
    st = space.states[start]
    out = [start]
    for b in w[1:]:
        st = space._next_state(st, b)
        if st is None:
            return None
        out.append(space.state_index[st])
    return out


_NODE_INDEX: dict = {}


def _node_index(graph: BlockGraph) -> dict:
    hit = _NODE_INDEX.get(id(graph))
    if hit is None or hit[0] is not graph:
        hit = (graph, {p: i for i, p in enumerate(graph.nodes)})
        _NODE_INDEX[id(graph)] = hit
    return hit[1]


def stationary_vector(P: np.ndarray) -> np.ndarray:
    """Stationary probability vector of an irreducible stochastic matrix."""
    n = P.shape[0]
    A = np.vstack([P.T - np.eye(n), np.ones((1, n))])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def markov_measure(graph: BlockGraph, stochastic, stationary=None) -> MarkovMeasure:
    P = np.asarray(stochastic, dtype=float)
    P = P / P.sum(axis=1, keepdims=True)
    pi = stationary_vector(P) if stationary is None else np.asarray(stationary, dtype=float)
    return MarkovMeasure(graph, P, pi)


def gibbs_measure(space: ShiftSpace, phi: LocallyConstant, width: int | None = None) -> MarkovMeasure:
    """Equilibrium state of a table: ``P_ij = W_ij h_j / (lambda h_i)``, ``pi ~ l * h``."""
    if not isinstance(phi, LocallyConstant):
        raise InputError("equilibrium states are built for locally constant potentials")
    g = block_graph(space, max(phi.range, 2, width or 2))
    ev = np.asarray(phi.edge_values(g), dtype=LD)
    data = perron(g, ev, want_left=True)
    return _measure_from_perron(g, ev, data)


def _measure_from_perron(g: BlockGraph, ev, data) -> MarkovMeasure:
    n = g.n_nodes
    m = ev.max()
    lam = np.exp(data.log_root - m)
    h, l = data.right, data.left
    P = np.zeros((n, n), dtype=LD)
    P[g.src, g.dst] = np.exp(ev - m) * h[g.dst] / (lam * h[g.src])
    P = P / P.sum(axis=1, keepdims=True)
    pi = l * h
    pi = pi / pi.sum()
    P64 = P.astype(float)
    P64 /= P64.sum(axis=1, keepdims=True)
    return MarkovMeasure(g, P64, pi.astype(float))


def entropy(mu: MarkovMeasure) -> float:
    """``-sum_i pi_i sum_j p_ij log p_ij`` with ``0 log 0 = 0``."""
    g = mu.graph
    p = mu.stochastic[g.src, g.dst]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(p), 0.0)
    return float(-(mu.stationary[g.src] * terms).sum())


def lift(mu: MarkovMeasure, width: int) -> MarkovMeasure:
    """The same measure presented on the width-``width`` block graph."""
    if width < mu.graph.width:
        raise InputError("lifting only goes to longer blocks")
    if width == mu.graph.width:
        return mu
    g = block_graph(mu.space, width)
    old = _node_index(mu.graph)
    k = mu.graph.width - 1
    n = g.n_nodes
    pi = np.zeros(n)
    for i, path in enumerate(g.nodes):
        node = old[path[:k]]
        m = mu.stationary[node]
        for t in range(1, len(path) - k + 1):
            nxt = old[path[t : t + k]]
            m *= mu.stochastic[node, nxt]
            node = nxt
        pi[i] = m
    P = np.zeros((n, n))
    for e in range(len(g.src)):
        i, j = g.src[e], g.dst[e]
        a = old[g.nodes[i][-k:]]
        b = old[g.nodes[j][-k:]]
        P[i, j] = mu.stochastic[a, b]
    # nodes of zero mass may miss rows; give them any admissible distribution
    rows = P.sum(axis=1)
    for i in np.flatnonzero(rows == 0):
        out = g.dst[g.src == i]
        P[i, out] = 1.0 / len(out)
    P /= P.sum(axis=1, keepdims=True)
    return MarkovMeasure(g, P, pi / pi.sum())


def integrate(mu: MarkovMeasure, phi: Potential) -> float:
    """``int phi dmu`` for a table; the measure is lifted when the range is longer."""
    if not isinstance(phi, LocallyConstant):
        raise InputError("integration needs a locally constant potential; truncate first")
    if phi.space.transition != mu.space.transition:
        raise InputError("potential and measure live on different shift spaces")
    if phi.range > mu.graph.width:
        mu = lift(mu, phi.range)
    return float(mu.edge_masses() @ phi.edge_values(mu.graph))


def random_markov_measure(space: ShiftSpace, rng: np.random.Generator, width: int = 2,
                          concentration: float = 1.0) -> MarkovMeasure:
    """Dirichlet-random transition probabilities on the allowed transitions."""
    g = block_graph(space, width)
    P = np.zeros((g.n_nodes, g.n_nodes))
    for i in range(g.n_nodes):
        out = g.dst[g.src == i]
        P[i, out] = rng.dirichlet(np.full(len(out), concentration))
    P = np.maximum(P, 0.0)
    return markov_measure(g, P)


def periodic_measure(space: ShiftSpace, word: Word) -> MarkovMeasure:
    """Invariant measure on the periodic orbit ``word^inf`` (zero entropy)."""
    w = tuple(word)
    if not space.is_admissible(w + w + w):
        raise InputError(f"{w} does not repeat admissibly")
    p = len(w)
    # nodes are windows of p states, so each rotation of the period has its
    # own node and a single successor
    g = block_graph(space, p + 1)
    full = w * (3 + (max(r for _, r in space.states) if space.max_run else 0))
    path = space.state_path(full)
    cycle = path[-2 * p:]
    P = np.zeros((g.n_nodes, g.n_nodes))
    pi = np.zeros(g.n_nodes)
    idx = _node_index(g)
    for t in range(p):
        i = idx[tuple(cycle[t: t + p])]
        j = idx[tuple(cycle[t + 1: t + 1 + p])]
        P[i, j] = 1.0
        pi[i] += 1.0 / p
    for i in range(g.n_nodes):
        if P[i].sum() == 0:
            out = g.dst[g.src == i]
            P[i, out] = 1.0 / len(out)
    return MarkovMeasure(g, P, pi)


def variational_gap(space: ShiftSpace, phi: LocallyConstant, mu: MarkovMeasure) -> float:
    """``h_mu + int phi dmu - P(phi)``; nonpositive by the variational principle."""
    g = block_graph(space, max(phi.range, 2))
    P = float(perron(g, phi.edge_values(g)).log_root)
    return entropy(mu) + integrate(mu, phi) - P


def ruelle_derivative_check(space: ShiftSpace, eta: LocallyConstant, phi: LocallyConstant,
                            h: float = 1e-4) -> tuple[float, float]:
    """Central difference of ``t -> P(eta + t phi)`` at 0 against ``int phi dnu_eta``."""
    for p in (eta, phi):
        if not isinstance(p, LocallyConstant):
            raise InputError("derivative check needs locally constant potentials")
    R = max(eta.range, phi.range, 2)
    g = block_graph(space, R)
    e = np.asarray(eta.edge_values(g), dtype=LD)
    f = np.asarray(phi.edge_values(g), dtype=LD)
    hp = LD(h)
    plus = perron(g, e + hp * f).log_root
    minus = perron(g, e - hp * f).log_root
    lhs = float((plus - minus) / (2 * hp))
    data = perron(g, e, want_left=True)
    rhs = float(data.edge_measure(g, e) @ f.astype(float))
    return lhs, rhs


def gibbs_constant(space: ShiftSpace, phi: LocallyConstant, depth: int = 12,
                   mu: MarkovMeasure | None = None) -> float:
    """Smallest C with ``mu[w] in [1/C, C] * exp(-k P + S_k phi(w))`` for all words up to ``depth``.

    ``S_k phi(w)`` ranges over its cylinder bounds, so the constant covers
    every point of each cylinder.
    """
    R = max(phi.range, 2)
    g = block_graph(space, R)
    mu = mu or gibbs_measure(space, phi)
    if mu.graph.width != R:
        mu = lift(mu, R)
    ev = phi.edge_values(g)
    P = float(perron(g, ev).log_root)
    tmax = np.zeros(g.n_nodes)
    tmin = np.zeros(g.n_nodes)
    for _ in range(R - 1):
        a, b = ev + tmax[g.dst], ev + tmin[g.dst]
        tmax, tmin = np.full(g.n_nodes, -np.inf), np.full(g.n_nodes, np.inf)
        np.maximum.at(tmax, g.src, a)
        np.minimum.at(tmin, g.src, b)
    with np.errstate(divide="ignore"):
        logP = np.log(mu.stochastic[g.src, g.dst])
    # every node path is a cylinder of the state presentation
    node = np.arange(g.n_nodes)
    with np.errstate(divide="ignore"):
        logmu = np.log(mu.stationary[node])
    head = np.zeros(len(node))
    worst = 0.0
    for k in range(R - 1, depth + 1):
        if k > R - 1:
            sel = np.searchsorted(g.src, node, side="left")
            counts = np.bincount(g.src, minlength=g.n_nodes)[node]
            rep = np.repeat(np.arange(len(node)), counts)
            edges = np.concatenate([np.arange(s, s + c) for s, c in zip(sel, counts)])
            logmu = logmu[rep] + logP[edges]
            head = head[rep] + ev[edges]
            node = g.dst[edges]
        lo = head + tmin[node]
        hi = head + tmax[node]
        r1 = logmu + k * P - lo
        r2 = logmu + k * P - hi
        ok = np.isfinite(logmu)
        if ok.any():
            worst = max(worst, float(np.abs(r1[ok]).max()), float(np.abs(r2[ok]).max()))
    return math.exp(worst)
