"""Subshifts of finite type, admissible words and block presentations.

Bowen balls are identified with cylinders throughout: with the metric
``d(x, y) = 2**-min{i : x_i != y_i}`` and any ``delta < 1/2`` the ball
``B(x, n, delta)`` is exactly the n-cylinder of ``x``, so every covering
quantity becomes a statement about words.

A run restriction ``max_run = (s, n)`` (no more than ``n`` consecutive copies
of ``s``) is realised by augmenting each symbol with its current run length.
The augmented state graph is an ordinary SFT presentation of the restricted
shift, and all matrix computations run on it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
import math

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import BudgetExceededError, InputError, NotTransitiveError

Word = tuple[int, ...]

DEFAULT_ENUMERATION_BUDGET = 2**24
DEFAULT_NODE_BUDGET = 4096


def _strongly_connected(adj: np.ndarray) -> bool:
    n_comp, _ = connected_components(adj.astype(np.int8), directed=True, connection="strong")
    return n_comp == 1


@dataclass(frozen=True)
class ShiftSpace:
    """One-sided topological Markov chain on ``{0, ..., d-1}``.

    ``transition[a][b]`` is True when ``b`` may follow ``a``. ``max_run`` is
    either one ``(symbol, n)`` pair or a sequence of them; it is stored as a
    sorted tuple of pairs. Construction checks that no symbol is dead and that
    the (possibly run-restricted) state graph is strongly connected.
    """

    transition: tuple[tuple[bool, ...], ...]
    max_run: tuple[tuple[int, int], ...] | None = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        A = np.asarray(self.transition, dtype=bool)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
            raise InputError("transition must be a non-empty square matrix")
        object.__setattr__(self, "transition", tuple(tuple(bool(v) for v in row) for row in A))
        if not (A.any(axis=1).all() and A.any(axis=0).all()):
            raise InputError("transition matrix has a dead symbol (empty row or column)")
        object.__setattr__(self, "max_run", _normalize_runs(self.max_run, A.shape[0]))
        if not _strongly_connected(self.state_matrix):
            raise NotTransitiveError("transition graph is not strongly connected")

    @classmethod
    def from_matrix(cls, A, max_run=None, name=""):
        return cls(tuple(tuple(bool(v) for v in row) for row in np.asarray(A)), max_run, name)

    @property
    def alphabet_size(self) -> int:
        return len(self.transition)

    @cached_property
    def matrix(self) -> np.ndarray:
        return np.asarray(self.transition, dtype=bool)

    @property
    def base(self) -> ShiftSpace:
        """The same chain with any run restriction dropped."""
        if self.max_run is None:
            return self
        return ShiftSpace(self.transition, None, self.name)

    # -- augmented state graph -------------------------------------------------

    @property
    def run_limits(self) -> dict[int, int]:
        return dict(self.max_run or ())

    @cached_property
    def states(self) -> tuple[tuple[int, int], ...]:
        """States ``(symbol, run)``; run counts trailing copies of a restricted symbol."""
        limits = self.run_limits
        out = []
        for a in range(self.alphabet_size):
            if a in limits:
                out += [(a, j) for j in range(1, limits[a] + 1)]
            else:
                out.append((a, 0))
        return tuple(out)

    @cached_property
    def state_index(self) -> dict[tuple[int, int], int]:
        return {st: i for i, st in enumerate(self.states)}

    @cached_property
    def state_symbols(self) -> np.ndarray:
        return np.array([a for a, _ in self.states], dtype=int)

    def _next_state(self, state, b):
        a, run = state
        if not self.transition[a][b]:
            return None
        n = self.run_limits.get(b)
        if n is None:
            return (b, 0)
        nxt = run + 1 if a == b else 1
        return (b, nxt) if nxt <= n else None

    @cached_property
    def state_matrix(self) -> np.ndarray:
        S = len(self.states)
        M = np.zeros((S, S), dtype=bool)
        for i, st in enumerate(self.states):
            for b in range(self.alphabet_size):
                nxt = self._next_state(st, b)
                if nxt is not None:
                    M[i, self.state_index[nxt]] = True
        return M

    def fresh_state(self, a: int) -> int:
        """State index for a word that starts with symbol ``a``."""
        if a in self.run_limits:
            return self.state_index[(a, 1)]
        return self.state_index[(a, 0)]

    @cached_property
    def fresh_states(self) -> np.ndarray:
        return np.array([self.fresh_state(a) for a in range(self.alphabet_size)], dtype=int)

    def state_path(self, word) -> list[int] | None:
        """State path of ``word`` from its fresh start, or None if inadmissible."""
        if len(word) == 0:
            return []
        if not 0 <= word[0] < self.alphabet_size:
            return None
        st = self.states[self.fresh_state(word[0])]
        path = [self.state_index[st]]
        for b in word[1:]:
            if not 0 <= b < self.alphabet_size:
                return None
            st = self._next_state(st, b)
            if st is None:
                return None
            path.append(self.state_index[st])
        return path

    def is_admissible(self, word) -> bool:
        return self.state_path(word) is not None

    @cached_property
    def topological_entropy(self) -> float:
        return float(np.log(max(abs(np.linalg.eigvals(self.state_matrix.astype(float))))))


def _normalize_runs(max_run, d):
    if max_run is None or len(max_run) == 0:
        return None
    pairs = [max_run] if np.ndim(max_run) == 1 else list(max_run)
    limits: dict[int, int] = {}
    for pair in pairs:
        if len(pair) != 2:
            raise InputError("max_run entries must be (symbol, n) pairs")
        s, n = int(pair[0]), int(pair[1])
        if not 0 <= s < d:
            raise InputError(f"max_run symbol {s} not in alphabet")
        if n < 1:
            raise InputError("max_run length must be >= 1")
        limits[s] = min(n, limits.get(s, n))
    return tuple(sorted(limits.items()))


def full_shift(d: int) -> ShiftSpace:
    return ShiftSpace.from_matrix(np.ones((d, d), dtype=bool), name=f"full-{d}-shift")


def golden_mean_shift() -> ShiftSpace:
    """Binary shift forbidding the word 11."""
    return ShiftSpace.from_matrix([[1, 1], [1, 0]], name="golden-mean")


def restrict_run(space: ShiftSpace, symbol: int, n: int) -> ShiftSpace:
    """The subshift X_n in which ``symbol`` never appears more than ``n`` times in a row."""
    if not 0 <= symbol < space.alphabet_size:
        raise InputError(f"symbol {symbol} not in alphabet")
    if n < 1:
        raise InputError("run bound must be >= 1")
    limits = space.run_limits
    limits[symbol] = min(n, limits.get(symbol, n))
    name = f"{space.name}|run({symbol})<={n}" if space.name else ""
    return ShiftSpace(space.transition, tuple(limits.items()), name)


def enumerate_words(space: ShiftSpace, k: int, budget: int = DEFAULT_ENUMERATION_BUDGET) -> list[Word]:
    """All admissible words of length ``k`` in lexicographic order."""
    if k < 1:
        raise InputError("word length must be >= 1")
    if space.alphabet_size**k > budget:
        raise BudgetExceededError(
            f"{space.alphabet_size}^{k} words exceeds the enumeration budget {budget}"
        )
    out: list[Word] = []
    d = space.alphabet_size

    def extend(prefix, st):
        if len(prefix) == k:
            out.append(tuple(prefix))
            return
        for b in range(d):
            nxt = space._next_state(st, b)
            if nxt is not None:
                prefix.append(b)
                extend(prefix, nxt)
                prefix.pop()

    for a in range(d):
        extend([a], space.states[space.fresh_state(a)])
    return out


def count_words(space: ShiftSpace, k: int) -> int:
    """Exact number of admissible k-words (arbitrary-precision integers)."""
    if k < 1:
        raise InputError("word length must be >= 1")
    M = space.state_matrix.astype(object)
    v = np.zeros(len(space.states), dtype=object)
    for i in space.fresh_states:
        v[i] += 1
    for _ in range(k - 1):
        v = v.dot(M)
    return int(sum(v))


def log_count_words(space: ShiftSpace, k: int) -> float:
    """``log count_words(space, k)`` in floating point, for lengths beyond exact use."""
    M = space.state_matrix.astype(float)
    v = np.zeros(len(space.states))
    v[space.fresh_states] = 1.0
    acc = 0.0
    for _ in range(k - 1):
        v = v @ M
        s = v.sum()
        acc += math.log(s)
        v /= s
    return acc + math.log(v.sum())


# -- block presentations ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BlockGraph:
    """Edge graph of state paths: nodes are paths of ``width - 1`` states, edges of ``width``.

    ``windows[e]`` is the symbol word carried by edge ``e``; a locally constant
    potential of range ``r <= width`` is evaluated on an edge through the
    first ``r`` symbols of its window.
    """

    space: ShiftSpace
    width: int
    nodes: tuple[tuple[int, ...], ...]
    src: np.ndarray
    dst: np.ndarray
    windows: tuple[Word, ...]
    node_symbols: tuple[Word, ...]
    lumped: bool = False

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @cached_property
    def fresh_mask(self) -> np.ndarray:
        """Nodes whose first state is a fresh start (each admissible word counted once)."""
        fresh = set(int(i) for i in self.space.fresh_states)
        return np.array([p[0] in fresh for p in self.nodes])

    @cached_property
    def last_state(self) -> np.ndarray:
        return np.array([p[-1] for p in self.nodes], dtype=int)

    @cached_property
    def first_state(self) -> np.ndarray:
        return np.array([p[0] for p in self.nodes], dtype=int)

    def dense(self, edge_values: np.ndarray, fill: float = -np.inf) -> np.ndarray:
        """Node-by-node matrix with ``edge_values`` on edges and ``fill`` elsewhere."""
        M = np.full((self.n_nodes, self.n_nodes), fill, dtype=float)
        M[self.src, self.dst] = edge_values
        return M


def _state_paths(space: ShiftSpace, length: int, budget: int) -> list[tuple[int, ...]]:
    M = space.state_matrix
    succ = [np.flatnonzero(M[i]).tolist() for i in range(M.shape[0])]
    paths = [(i,) for i in range(M.shape[0])]
    for _ in range(length - 1):
        paths = [p + (j,) for p in paths for j in succ[p[-1]]]
        if len(paths) > budget:
            raise BudgetExceededError(f"block presentation exceeds node budget {budget}")
    return paths


@lru_cache(maxsize=256)
def block_graph(space: ShiftSpace, width: int, budget: int = DEFAULT_NODE_BUDGET) -> BlockGraph:
    """Block presentation carrying windows of ``width >= 2`` symbols on its edges."""
    if width < 2:
        raise InputError("block width must be >= 2")
    nodes = _state_paths(space, width - 1, budget)
    index = {p: i for i, p in enumerate(nodes)}
    syms = space.state_symbols
    M = space.state_matrix
    src, dst, windows = [], [], []
    for i, p in enumerate(nodes):
        for j in np.flatnonzero(M[p[-1]]):
            q = p[1:] + (int(j),)
            src.append(i)
            dst.append(index[q])
            windows.append(tuple(int(syms[s]) for s in p) + (int(syms[j]),))
    if len(windows) > 8 * budget:
        raise BudgetExceededError(f"block presentation exceeds edge budget {8 * budget}")
    return BlockGraph(
        space=space,
        width=width,
        nodes=tuple(nodes),
        src=np.array(src, dtype=int),
        dst=np.array(dst, dtype=int),
        windows=tuple(windows),
        node_symbols=tuple(tuple(int(syms[s]) for s in p) for p in nodes),
    )


_LUMPED: dict[int, tuple[BlockGraph, BlockGraph]] = {}


def lumped_graph(graph: BlockGraph) -> BlockGraph:
    """Quotient of ``graph`` merging nodes with equal symbols and equal last state.

    Merged nodes have the same windows and the same futures, so the quotient
    is exactly lumpable: Perron roots and equilibrium integrals of window
    functions agree with the full graph. Node paths no longer identify a
    start state, so word counts and cylinder masses need the full graph.
    """
    hit = _LUMPED.get(id(graph))
    if hit is not None and hit[0] is graph:
        return hit[1]
    out = _lump(graph)
    _LUMPED[id(graph)] = (graph, out)
    return out


def _lump(graph: BlockGraph) -> BlockGraph:
    key_of = [(graph.node_symbols[i], p[-1]) for i, p in enumerate(graph.nodes)]
    classes: dict = {}
    rep = []
    for i, k in enumerate(key_of):
        if k not in classes:
            classes[k] = len(rep)
            rep.append(i)
    if len(rep) == graph.n_nodes:
        return graph
    cls = np.array([classes[k] for k in key_of])
    keep = np.isin(graph.src, rep)
    return BlockGraph(
        space=graph.space,
        width=graph.width,
        nodes=tuple(graph.nodes[i] for i in rep),
        src=cls[graph.src[keep]],
        dst=cls[graph.dst[keep]],
        windows=tuple(w for w, k in zip(graph.windows, keep) if k),
        node_symbols=tuple(graph.node_symbols[i] for i in rep),
        lumped=True,
    )


def cycle_mean_extrema(graph: BlockGraph, edge_values: np.ndarray) -> tuple[float, float]:
    """(min, max) mean edge value over cycles, by Karp's algorithm.

    For a locally constant potential these are the extreme values of its
    integral over invariant measures.
    """
    return (-_karp_max(graph, -np.asarray(edge_values, float)), _karp_max(graph, edge_values))


def _karp_max(graph: BlockGraph, w: np.ndarray) -> float:
    n = graph.n_nodes
    D = np.full((n + 1, n), -np.inf)
    D[0, :] = 0.0
    src, dst = graph.src, graph.dst
    for k in range(1, n + 1):
        cand = D[k - 1, src] + w
        row = np.full(n, -np.inf)
        np.maximum.at(row, dst, cand)
        D[k] = row
    best = -np.inf
    for v in range(n):
        if not np.isfinite(D[n, v]):
            continue
        ks = np.arange(n)
        fin = np.isfinite(D[:n, v])
        vals = (D[n, v] - D[:n, v][fin]) / (n - ks[fin])
        best = max(best, float(vals.min()))
    return best
