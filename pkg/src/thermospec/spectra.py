"""Predicted multifractal spectra through pressure roots.

For potentials ``phi, psi, u`` the function ``T_alpha(q)`` is the root in
``t`` of ``P(q (phi - alpha psi) - t u) = 0`` and the predicted spectrum is
``S(alpha) = inf_q T_alpha(q)``. Everything here runs on range-``r`` tables
(sampled potentials are truncated first) laid out on one common block graph,
so each pressure call is a single Perron root in extended precision.

Root finding in ``t`` uses Newton steps: ``t -> P(.. - t u)`` is convex and
decreasing with slope ``-int u dnu``, so Newton converges from any start.
The minimization in ``q`` solves ``T_alpha'(q) = 0`` where the derivative
``int (phi - alpha psi) dnu / int u dnu`` comes with the root for free.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import itertools
import math
import warnings
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq
from scipy.sparse.csgraph import connected_components

from .coding import IntervalCoding
from .equilibrium import entropy, gibbs_measure, integrate
from .errors import (
    BracketError,
    ConvergenceError,
    InfeasibleConstraintError,
    InputError,
    NumericalError,
    ThermospecError,
)
from .parallel import ordered_map
from .potentials import (
    TRUNCATION_RANGE,
    LocallyConstant,
    Potential,
    as_table,
    constant,
    geometric_potential,
    linear_combination,
    truncate,
)
from .pressure import LD, perron, pressure_spectral
from .shift import (
    BlockGraph,
    ShiftSpace,
    block_graph,
    cycle_mean_extrema,
    lumped_graph,
    restrict_run,
)

Q_MAX = 50.0
T_GUARD = 1e4
DEGENERATE_TOL = 1e-12
ROOT_TOL = 1e-8
NEG_INF = -math.inf
KINDS = ("birkhoff_entropy", "lyapunov_entropy", "lyapunov_dimension", "pointwise_dimension",
         "general_mixed")
LEGENDRE_STEPS = (1e-2, 1e-3, 1e-4)
TRANSITION_THRESHOLD = 1e-3
EXHAUSTION_N = (3, 6, 9, 12)


# -- the shared engine ----------------------------------------------------------


@dataclass(frozen=True)
class Root:
    """Root of ``t -> P(q (phi - alpha psi) - t u)`` with its equilibrium data.

    ``slope`` is ``d T_alpha / d q`` at ``q`` (None unless requested).
    """

    t: np.longdouble
    residual: float
    slope: float | None = None
    u_integral: float | None = None
    iterations: int = 0

    @property
    def finite(self) -> bool:
        return bool(np.isfinite(self.t))


@dataclass(frozen=True, eq=False)
class SpectralSystem:
    """Tables ``phi, psi, u`` on one block graph, with the bounds root finding needs."""

    space: ShiftSpace
    phi: LocallyConstant
    psi: LocallyConstant
    u: LocallyConstant
    graph: BlockGraph
    e_phi: np.ndarray
    e_psi: np.ndarray
    e_u: np.ndarray
    u_constant: float | None
    u_cycle_min: float
    htop: float
    domain: tuple[float, float] | None
    meta: Mapping = field(default_factory=dict)

    @property
    def degenerate(self) -> bool:
        return self.u_constant is None and self.u_cycle_min <= DEGENERATE_TOL

    def weights(self, q, alpha, t) -> np.ndarray:
        q, alpha, t = LD(q), LD(alpha), LD(t)
        return q * (self.e_phi - alpha * self.e_psi) - t * self.e_u

    def log_pressure(self, q, alpha, t) -> np.longdouble:
        return perron(self.graph, self.weights(q, alpha, t)).log_root

    def bracket_radius(self, q, alpha) -> float:
        eps = self.u_constant if self.u_constant is not None else self.u_cycle_min
        num = abs(q) * (self.phi.sup_norm + abs(alpha) * self.psi.sup_norm) + self.htop
        return num / max(eps, DEGENERATE_TOL) + 1.0

    def root(self, q: float, alpha: float, want_slope: bool = False) -> Root:
        if self.u_constant is not None:
            return self._constant_root(q, alpha, want_slope)
        if self.degenerate and self.limit_pressure(q, alpha) >= -1e-14:
            return Root(LD(np.inf), 0.0)
        return self._newton_root(q, alpha, want_slope)

    def limit_pressure(self, q, alpha) -> float:
        """``lim_{t -> inf} P(q (phi - alpha psi) - t u)``.

        With ``u >= 0`` edgewise the limit is the pressure on the subgraph of
        edges where ``u`` vanishes (largest over its strongly connected
        pieces), or ``-inf`` when that subgraph has no cycle. Otherwise the
        pressure is evaluated at the divergence guard.
        """
        e_u = self.e_u.astype(float)
        if e_u.min() < -DEGENERATE_TOL:
            return float(self.log_pressure(q, alpha, T_GUARD))
        x = self.weights(q, alpha, 0.0)
        return _subgraph_pressure(self.graph, x, e_u <= DEGENERATE_TOL)

    def _slope(self, nu, alpha, u_int) -> float:
        num = float(nu @ (self.e_phi - LD(alpha) * self.e_psi).astype(float))
        return num / u_int

    def _constant_root(self, q, alpha, want_slope) -> Root:
        c = LD(self.u_constant)
        x = self.weights(q, alpha, 0.0)
        data = perron(self.graph, x, want_left=want_slope)
        t = data.log_root / c
        res = float(abs(data.log_root - t * c))
        slope = None
        if want_slope:
            slope = self._slope(data.edge_measure(self.graph, x), alpha, float(c))
        return Root(t, res, slope, float(c), data.iterations)

    def _newton_root(self, q, alpha, want_slope) -> Root:
        x = self.weights(q, alpha, 0.0)
        scale = 1.0 + float(np.abs(x).max()) + float(np.abs(self.e_u).max())
        t = LD(0)
        best = None
        for it in range(1, 81):
            w = x - t * self.e_u
            data = perron(self.graph, w, want_left=True)
            P = data.log_root
            nu = data.edge_measure(self.graph, w)
            U = float(nu @ self.e_u.astype(float))
            best = (t, P, nu, U)
            if abs(float(P)) <= 1e-16 * scale * max(1.0, abs(float(t))):
                break
            if not U > DEGENERATE_TOL:
                return self._bracket_root(q, alpha, want_slope)
            step = P / LD(U)
            t = t + step
            if abs(float(step)) <= 1e-18 * max(1.0, abs(float(t))):
                w = x - t * self.e_u
                data = perron(self.graph, w, want_left=True)
                nu = data.edge_measure(self.graph, w)
                best = (t, data.log_root, nu, float(nu @ self.e_u.astype(float)))
                break
        else:
            return self._bracket_root(q, alpha, want_slope)
        t, P, nu, U = best
        slope = self._slope(nu, alpha, U) if want_slope else None
        return Root(t, float(abs(P)), slope, U, it)

    def _bracket_root(self, q, alpha, want_slope) -> Root:
        B = self.bracket_radius(q, alpha)
        lo, hi = -B, min(B, T_GUARD)

        def f(t):
            return float(self.log_pressure(q, alpha, t))

        flo, fhi = f(lo), f(hi)
        if not (flo > 0 > fhi):
            raise BracketError(
                f"pressure root in t does not straddle [{lo:.4g}, {hi:.4g}] at q={q}, alpha={alpha} "
                "(int u dmu is close to 0; use the exhaustion path)"
            )
        t = LD(brentq(f, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps))
        w = self.weights(q, alpha, t)
        data = perron(self.graph, w, want_left=True)
        nu = data.edge_measure(self.graph, w)
        U = float(nu @ self.e_u.astype(float))
        slope = self._slope(nu, alpha, U) if want_slope and U > 0 else None
        return Root(t, float(abs(data.log_root)), slope, U, 0)


def _subgraph_pressure(g: BlockGraph, log_weights, mask) -> float:
    """Largest log Perron root over strongly connected pieces of the masked edges."""
    src, dst, lw = g.src[mask], g.dst[mask], np.asarray(log_weights, dtype=LD)[mask]
    if len(src) == 0:
        return -math.inf
    n = g.n_nodes
    adj = sp.csr_matrix((np.ones(len(src)), (src, dst)), shape=(n, n))
    _, labels = connected_components(adj, directed=True, connection="strong")
    best = -math.inf
    for c in np.unique(labels):
        inside = (labels[src] == c) & (labels[dst] == c)
        if not inside.any():
            continue
        nodes = np.flatnonzero(labels == c)
        index = {int(v): i for i, v in enumerate(nodes)}
        m = lw[inside].max()
        W = np.zeros((len(nodes), len(nodes)), dtype=LD)
        for a, b, w in zip(src[inside], dst[inside], lw[inside]):
            W[index[int(a)], index[int(b)]] += np.exp(w - m)
        lam = max(abs(np.linalg.eigvals(W.astype(float))))
        best = max(best, float(m) + math.log(lam))
    return best


def _ratio_extrema(g: BlockGraph, num: np.ndarray, den: np.ndarray) -> tuple[float, float]:
    """Extreme cycle ratios ``sum num / sum den`` for ``den`` positive on cycles."""
    dmin, _ = cycle_mean_extrema(g, den)
    nmin, nmax = cycle_mean_extrema(g, num)
    if den.max() - den.min() <= 1e-15:
        return nmin / den[0], nmax / den[0]
    M = (max(abs(nmin), abs(nmax)) + 1.0) / dmin + 1.0

    def top(c):
        return cycle_mean_extrema(g, num - c * den)[1]

    def bottom(c):
        return cycle_mean_extrema(g, num - c * den)[0]

    hi = brentq(top, -M, M, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    lo = brentq(bottom, -M, M, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return lo, hi


def spectral_system(space: ShiftSpace, phi: Potential, psi: Potential, u: Potential,
                    truncation_range: int = TRUNCATION_RANGE, rule: str = "mid") -> SpectralSystem:
    """Truncate, tabulate and bound the potentials once for a whole sweep."""
    tabs = [as_table(p, truncation_range, rule) for p in (phi, psi, u)]
    for t in tabs:
        if t.space.transition != space.transition:
            raise InputError("potentials and computation space use different transition matrices")
    R = max(t.range for t in tabs)
    g = lumped_graph(block_graph(space, max(R, 2)))
    e_phi, e_psi, e_u = (np.asarray(t.edge_values(g), dtype=float) for t in tabs)
    u_const = float(e_u[0]) if e_u.max() - e_u.min() <= 1e-15 * max(1.0, abs(e_u[0])) else None
    if u_const is not None and not u_const > 0:
        raise InputError("constant u must be positive")
    u_min, _ = cycle_mean_extrema(g, e_u)
    if u_min < -DEGENERATE_TOL:
        raise InputError(f"u has a cycle of negative mean ({u_min:.3g}); the covering "
                         "condition on u fails")
    htop = float(perron(g, np.zeros(len(e_u))).log_root)
    psi_min, _ = cycle_mean_extrema(g, e_psi)
    domain = _ratio_extrema(g, e_phi, e_psi) if psi_min > DEGENERATE_TOL else None
    errors = {"phi": tabs[0].error, "psi": tabs[1].error, "u": tabs[2].error}
    return SpectralSystem(space, tabs[0], tabs[1], tabs[2], g,
                          e_phi.astype(LD), e_psi.astype(LD), e_u.astype(LD),
                          u_const, float(u_min), htop, domain,
                          {"truncation_errors": errors, "truncation_range": R, "rule": rule})


def degenerate_symbols(u: Potential, tol: float = 1e-9, depth: int = 12) -> tuple[int, ...]:
    """Symbols whose fixed point carries ``u <= tol`` (parabolic points of a coding)."""
    tab = as_table(u, depth, "inf")
    out = []
    for a in range(tab.space.alphabet_size):
        w = (a,) * tab.range
        if w in tab.table and tab.table[w] <= tol:
            out.append(a)
    return tuple(out)


# -- T_alpha and its minimization -------------------------------------------------


def t_alpha(space: ShiftSpace, phi: Potential, psi: Potential, u: Potential, alpha: float, q: float,
            truncation_range: int = TRUNCATION_RANGE, system: SpectralSystem | None = None) -> float:
    """``T_alpha(q)``; ``+inf`` when the pressure stays positive up to the divergence guard."""
    system = system or spectral_system(space, phi, psi, u, truncation_range)
    return float(system.root(q, alpha).t)


@dataclass(frozen=True)
class SpectrumPoint:
    alpha: float
    value: float
    q_star: float
    residual: float
    flags: tuple[str, ...] = ()


def _golden_section(f, a, b, tol=1e-10, max_iter=200):
    invphi = (math.sqrt(5) - 1) / 2
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (a + b) / 2


def minimize_t_alpha(system: SpectralSystem, alpha: float, q_max: float = Q_MAX,
                     tol: float = ROOT_TOL) -> SpectrumPoint:
    """``inf_q T_alpha(q)`` with the minimizing ``q`` (smallest ``|q|`` on plateaus)."""
    alpha = float(alpha)
    flags: list[str] = []
    if system.domain is not None:
        lo, hi = system.domain
        if alpha < lo - 1e-9 or alpha > hi + 1e-9:
            return SpectrumPoint(alpha, NEG_INF, math.nan, math.nan, ("outside_domain",))
    cache: dict[float, Root] = {}

    def root(q):
        r = cache.get(q)
        if r is None:
            r = cache[q] = system.root(q, alpha, want_slope=True)
        return r

    def slope(q):
        return root(q).slope

    r0 = root(0.0)
    if not r0.finite or r0.slope is None:
        return _minimize_golden(system, alpha, q_max, tol)
    if abs(r0.slope) <= 1e-13:
        q_star = 0.0
    else:
        sign = 1.0 if r0.slope < 0 else -1.0
        a, b = 0.0, 1.0
        found = False
        while True:
            qb = sign * min(b, q_max)
            try:
                rb = root(qb)
            except ConvergenceError:
                if a == 0.0:
                    raise
                # the weights become numerically reducible before q_max; stop at
                # the last certified q
                qb = sign * a
                rb = root(qb)
                flags.append("ill_conditioned")
                break
            if not rb.finite or rb.slope is None:
                return _minimize_golden(system, alpha, q_max, tol)
            if sign * rb.slope >= 0:
                found = True
                break
            if b >= q_max:
                break
            a, b = b, 2 * b
        if found:
            lo, hi = sorted((sign * a, qb))
            try:
                if abs(rb.slope) <= 1e-13:
                    q_star = qb
                else:
                    q_star = brentq(slope, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps)
                q_star = _smallest_on_plateau(slope, sign * a, q_star)
            except ConvergenceError:
                # near-reducible weights: the slope is not resolvable inside the
                # bracket, so keep the last q whose root was certified
                q_star = qb
                flags.append("ill_conditioned")
        else:
            q_star = qb
            if "ill_conditioned" not in flags:
                flags.append("boundary")
    r = root(q_star)
    value = float(r.t)
    if value < -1e-7:
        return SpectrumPoint(alpha, NEG_INF, q_star, r.residual, tuple(flags + ["outside_domain"]))
    if r.residual > tol:
        flags.append("residual")
    return SpectrumPoint(alpha, value, float(q_star), r.residual, tuple(flags))


def _smallest_on_plateau(slope, q_in, q_star, flat=1e-12):
    """Move toward ``q_in`` (closer to 0) while the derivative stays flat."""
    if q_in == q_star or abs(slope(q_in)) > flat:
        return q_star
    a, b = q_in, q_star
    for _ in range(60):
        m = (a + b) / 2
        if abs(slope(m)) <= flat:
            b = m
        else:
            a = m
    return b


def _minimize_golden(system: SpectralSystem, alpha: float, q_max: float, tol: float) -> SpectrumPoint:
    """Fallback when ``T_alpha = +inf`` on part of the line: golden-section on the finite region."""
    grid = np.linspace(-q_max, q_max, 101)
    vals = np.array([float(system.root(q, alpha).t) for q in grid])
    finite = np.isfinite(vals)
    if not finite.any():
        return SpectrumPoint(alpha, math.inf, math.nan, math.nan, ("infinite",))
    k = int(np.argmin(np.where(finite, vals, np.inf)))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]

    def f(q):
        v = float(system.root(q, alpha).t)
        return v if math.isfinite(v) else 1e300

    q_star = _golden_section(f, a, b)
    r = system.root(q_star, alpha)
    value = float(r.t)
    flags = ["golden_section"]
    if abs(q_star) >= q_max - 1e-9:
        flags.append("boundary")
    if value < -1e-7:
        return SpectrumPoint(alpha, NEG_INF, q_star, r.residual, tuple(flags + ["outside_domain"]))
    return SpectrumPoint(alpha, value, q_star, r.residual, tuple(flags))


# -- spectrum curves ---------------------------------------------------------------


@dataclass(frozen=True)
class SpectrumCurve:
    """``S(alpha)`` on a grid; ``-inf`` marks points outside the domain."""

    alphas: np.ndarray
    values: np.ndarray
    q_star: np.ndarray
    t_root_residual: np.ndarray
    domain: tuple[float, float] | None
    kind: str
    flags: tuple[tuple[str, ...], ...] = ()
    meta: Mapping = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown spectrum kind {self.kind!r}")

    @property
    def max_value(self) -> float:
        v = self.values[np.isfinite(self.values)]
        return float(v.max()) if v.size else NEG_INF

    def rows(self):
        for i, a in enumerate(self.alphas):
            yield (float(a), float(self.values[i]), float(self.q_star[i]),
                   float(self.t_root_residual[i]), "|".join(self.flags[i]) if self.flags else "")


def _curve(points: Sequence[SpectrumPoint], domain, kind, meta) -> SpectrumCurve:
    return SpectrumCurve(
        alphas=np.array([p.alpha for p in points]),
        values=np.array([p.value for p in points]),
        q_star=np.array([p.q_star for p in points]),
        t_root_residual=np.array([p.residual for p in points]),
        domain=domain,
        kind=kind,
        flags=tuple(p.flags for p in points),
        meta=meta,
    )


def _safe_point(system, alpha, q_max):
    try:
        return minimize_t_alpha(system, alpha, q_max)
    except ThermospecError as exc:
        return SpectrumPoint(float(alpha), math.nan, math.nan, math.nan, (f"error:{type(exc).__name__}",))


def predicted_spectrum(space: ShiftSpace, phi: Potential, psi: Potential, u: Potential, alpha_grid,
                       q_max: float = Q_MAX, truncation_range: int = TRUNCATION_RANGE,
                       kind: str = "general_mixed", workers: int | None = None,
                       exhaustion: bool = True, exhaustion_n=EXHAUSTION_N) -> SpectrumCurve:
    """``S(alpha) = inf_q T_alpha(q)`` over ``alpha_grid``.

    When ``u`` vanishes at a fixed point the computation goes through the
    run-restricted subshifts instead (see :func:`exhaustion_spectrum`).
    Per-point failures are recorded in the flags and leave ``nan`` behind.
    """
    symbols = degenerate_symbols(u) if exhaustion else ()
    if symbols:
        return exhaustion_spectrum(space, phi, psi, u, alpha_grid, exhaustion_n, symbols,
                                   q_max=q_max, truncation_range=truncation_range, kind=kind,
                                   workers=workers)
    system = spectral_system(space, phi, psi, u, truncation_range)
    points = ordered_map(lambda a: _safe_point(system, a, q_max), alpha_grid, workers)
    return _curve(points, system.domain, kind, dict(system.meta, q_max=q_max))


def exhaustion_spectrum(space: ShiftSpace, phi: Potential, psi: Potential, u: Potential, alpha_grid,
                        n_list=EXHAUSTION_N, symbols=(0,), q_max: float = Q_MAX,
                        truncation_range: int = TRUNCATION_RANGE, kind: str = "general_mixed",
                        workers: int | None = None) -> SpectrumCurve:
    """Spectra on subshifts capping runs of ``symbols`` at ``n``; the answer is the envelope in ``n``.

    The restricted subshifts increase with ``n``, so their spectra do too and
    the running maximum is the reported value. ``meta["by_n"]`` keeps the
    per-``n`` curves.
    """
    if not n_list:
        raise InputError("exhaustion needs at least one run length")
    by_n = {}
    domains = []
    for n in sorted(n_list):
        sub = space
        for s in symbols:
            sub = restrict_run(sub, s, n)
        system = spectral_system(sub, phi, psi, u, truncation_range)
        if system.degenerate:
            raise NumericalError(f"u stays degenerate after capping runs at n={n}")
        pts = ordered_map(lambda a: _safe_point(system, a, q_max), alpha_grid, workers)
        by_n[n] = _curve(pts, system.domain, kind, dict(system.meta))
        domains.append(system.domain)
    ns = sorted(by_n)
    vals = np.stack([by_n[n].values for n in ns])
    with np.errstate(invalid="ignore"):
        best = np.argmax(np.where(np.isnan(vals), -np.inf, vals), axis=0)
    cols = np.arange(vals.shape[1])
    last = by_n[ns[-1]]
    pick = lambda attr: np.stack([getattr(by_n[n], attr) for n in ns])[best, cols]
    flags = tuple(tuple(by_n[ns[b]].flags[i]) + (f"n={ns[b]}",) for i, b in enumerate(best))
    doms = [d for d in domains if d is not None]
    domain = (min(d[0] for d in doms), max(d[1] for d in doms)) if doms else None
    meta = dict(last.meta, by_n=by_n, symbols=tuple(symbols), exhaustion=True, q_max=q_max)
    return SpectrumCurve(last.alphas, vals[best, cols], pick("q_star"), pick("t_root_residual"),
                         domain, kind, flags, meta)


def birkhoff_spectrum(space: ShiftSpace, phi: Potential, alpha_grid, **kw) -> SpectrumCurve:
    """Entropy spectrum of Birkhoff averages (``psi = u = 1``)."""
    one = constant(space if phi.space is None else phi.space, 1.0)
    return predicted_spectrum(space, phi, one, one, alpha_grid, kind="birkhoff_entropy", **kw)


def _geometric_table(space: ShiftSpace, coding: IntervalCoding, truncation_range: int) -> LocallyConstant:
    if all(b.family == "affine" for b in coding.branches):
        vals = [-math.log(abs(b.params[0])) for b in coding.branches]
        from .potentials import table_potential

        return table_potential(coding.space, vals, name="log_derivative")
    return as_table(geometric_potential(coding), truncation_range)


def lyapunov_spectrum(space: ShiftSpace, coding: IntervalCoding, alpha_grid, kind: str = "entropy",
                      truncation_range: int = TRUNCATION_RANGE, **kw) -> SpectrumCurve:
    """Spectra of the Lyapunov exponent ``lim S_n log f' / n``.

    ``entropy``: Birkhoff spectrum of ``log f'``. ``dimension``: the mixed
    spectrum with ``phi = u = log f'`` and ``psi = 1``, whose value at
    ``alpha`` is the entropy value divided by ``alpha``.
    """
    geo = geometric_potential(coding)
    degenerate = degenerate_symbols(geo)
    u = geo if degenerate else _geometric_table(space, coding, truncation_range)
    one = constant(coding.space, 1.0)
    grid = np.asarray(alpha_grid, dtype=float)
    if kind == "entropy":
        return predicted_spectrum(space, u, one, one, grid, kind="lyapunov_entropy",
                                  truncation_range=truncation_range, **kw)
    if kind == "dimension":
        if np.any(grid <= 0):
            raise InputError("the dimension spectrum of Lyapunov exponents needs alpha > 0")
        return predicted_spectrum(space, u, one, u, grid, kind="lyapunov_dimension",
                                  truncation_range=truncation_range, **kw)
    raise InputError(f"unknown Lyapunov spectrum kind {kind!r}; use 'entropy' or 'dimension'")


def pointwise_dimension_spectrum(space: ShiftSpace, coding: IntervalCoding, phi: Potential, alpha_grid,
                                 truncation_range: int = TRUNCATION_RANGE, **kw) -> SpectrumCurve:
    """Spectrum of local dimensions of the Gibbs measure of ``phi``.

    Runs the predicted spectrum with ``psi = u = log f'`` and numerator
    ``P(phi) - phi``.
    """
    geo = geometric_potential(coding)
    lo, _ = geo.cylinder_extrema(1)
    if lo.min() < -1e-12:
        raise InputError("pointwise dimensions need a non-contracting coding (f' >= 1)")
    degenerate = degenerate_symbols(geo)
    u = geo if degenerate else _geometric_table(space, coding, truncation_range)
    tab = as_table(phi, truncation_range)
    P = pressure_spectral(space, tab).value
    phibar = linear_combination([(-1.0, tab), (P, constant(tab.space, 1.0))])
    curve = predicted_spectrum(space, phibar, u, u, alpha_grid, kind="pointwise_dimension",
                               truncation_range=truncation_range, **kw)
    return SpectrumCurve(curve.alphas, curve.values, curve.q_star, curve.t_root_residual,
                         curve.domain, curve.kind, curve.flags, dict(curve.meta, pressure_phi=P))


def bowen_dimension(space: ShiftSpace, u: Potential, truncation_range: int = TRUNCATION_RANGE) -> float:
    """Root ``t`` of ``P(-t u) = 0``: the ``u``-dimension of the space."""
    zero = constant(u.space if u.space is not None else space, 0.0)
    system = spectral_system(space, zero, zero, u, truncation_range)
    r = system.root(0.0, 0.0)
    if not r.finite:
        raise BracketError("P(-t u) stays positive up to the divergence guard; u is degenerate")
    return float(r.t)


# -- Legendre data -----------------------------------------------------------------


@dataclass(frozen=True)
class LegendreData:
    """``T_0`` on a grid with one-sided slopes extrapolated to zero step.

    ``richardson`` is the disagreement between extrapolations from the two
    coarser and the two finer steps; ``asymptotic`` holds the last slope
    estimates ``T0(-q_max+k+1) - T0(-q_max+k)`` and ``T0(q_max-k) - T0(q_max-k-1)``
    for k = 0, 1 (None when not computed).
    """

    q_grid: np.ndarray
    T0: np.ndarray
    d_minus: np.ndarray
    d_plus: np.ndarray
    transitions: tuple[float, ...]
    threshold: float = TRANSITION_THRESHOLD
    richardson: np.ndarray | None = None
    asymptotic: tuple[tuple[float, float], tuple[float, float]] | None = None
    exact_domain: tuple[float, float] | None = None
    meta: Mapping = field(default_factory=dict, repr=False)

    @property
    def gap(self) -> np.ndarray:
        return self.d_plus - self.d_minus

    @property
    def max_gap(self) -> tuple[float, float]:
        """(largest gap, its q)."""
        k = int(np.argmax(self.gap))
        return float(self.gap[k]), float(self.q_grid[k])


def _extrapolate(d1, d2, h1, h2):
    """Linear extrapolation to h = 0 from step sizes ``h1 > h2``."""
    return d2 - h2 * (d1 - d2) / (h1 - h2)


def _one_sided(system: SpectralSystem, q: float, steps):
    T = lambda s: system.root(s, 0.0).t
    t0 = T(q)
    dp, dm, hs = [], [], []
    for h in steps:
        hp = (q + h) - q
        hm = q - (q - h)
        dp.append((T(q + hp) - t0) / LD(hp))
        dm.append((t0 - T(q - hm)) / LD(hm))
        hs.append((hp, hm))
    return t0, dp, dm, hs


def _legendre_point(system, q, steps):
    t0, dp, dm, hs = _one_sided(system, q, steps)
    if len(steps) == 1:
        return t0, dm[0], dp[0], 0.0
    ex_p = _extrapolate(dp[-2], dp[-1], LD(hs[-2][0]), LD(hs[-1][0]))
    ex_m = _extrapolate(dm[-2], dm[-1], LD(hs[-2][1]), LD(hs[-1][1]))
    rich = 0.0
    if len(steps) >= 3:
        cp = _extrapolate(dp[-3], dp[-2], LD(hs[-3][0]), LD(hs[-2][0]))
        cm = _extrapolate(dm[-3], dm[-2], LD(hs[-3][1]), LD(hs[-2][1]))
        rich = float(max(abs(cp - ex_p), abs(cm - ex_m)))
    return t0, ex_m, ex_p, rich


def legendre_profile(space: ShiftSpace, phi: Potential, u: Potential, q_grid,
                     steps=LEGENDRE_STEPS, threshold: float = TRANSITION_THRESHOLD,
                     q_max: float | None = Q_MAX, truncation_range: int = TRUNCATION_RANGE,
                     rule: str = "mid", workers: int | None = None,
                     system: SpectralSystem | None = None) -> LegendreData:
    """``T_0(q)``, the root of ``P(q phi - t u) = 0``, with ``D^-`` and ``D^+`` estimates."""
    system = system or spectral_system(space, phi, u, u, truncation_range, rule)
    steps = tuple(sorted(steps, reverse=True))
    q_grid = np.asarray(q_grid, dtype=float)
    pts = ordered_map(lambda q: _legendre_point(system, float(q), steps), q_grid, workers)
    T0 = np.array([float(p[0]) for p in pts])
    dm = np.array([float(p[1]) for p in pts])
    dp = np.array([float(p[2]) for p in pts])
    rich = np.array([p[3] for p in pts])
    gaps = dp - dm
    transitions = tuple(float(q) for q, g in zip(q_grid, gaps) if g > threshold)
    asym = None
    if q_max is not None:
        T = lambda s: system.root(s, 0.0).t
        right = [T(q_max - k) for k in range(3)]
        left = [T(-q_max + k) for k in range(3)]
        asym = ((float(left[1] - left[0]), float(left[2] - left[1])),
                (float(right[0] - right[1]), float(right[1] - right[2])))
    exact = None
    if system.domain is not None:
        exact = system.domain
    elif system.u_constant is not None or system.u_cycle_min > DEGENERATE_TOL:
        exact = _ratio_extrema(system.graph, system.e_phi.astype(float), system.e_u.astype(float))
    return LegendreData(q_grid, T0, dm, dp, transitions, threshold, rich, asym, exact,
                        dict(system.meta, steps=steps, q_max=q_max))


def domain_endpoints(data: LegendreData) -> tuple[float, float]:
    """Asymptotic slopes of ``T_0`` at ``-q_max`` and ``q_max``.

    Warns when the last two slope estimates differ by more than ``1e-4`` or
    when they disagree with the extreme cycle ratios of the tables.
    """
    if data.asymptotic is None:
        raise InputError("Legendre data was computed without q_max; no asymptotic slopes")
    (lo, lo_prev), (hi, hi_prev) = data.asymptotic
    if abs(lo - lo_prev) > 1e-4 or abs(hi - hi_prev) > 1e-4:
        warnings.warn("domain endpoint slopes have not converged at q_max", RuntimeWarning, stacklevel=2)
    if data.exact_domain is not None:
        elo, ehi = data.exact_domain
        if abs(elo - lo) > 1e-6 or abs(ehi - hi) > 1e-6:
            warnings.warn(f"slope endpoints ({lo:.8g}, {hi:.8g}) differ from the extreme cycle "
                          f"ratios ({elo:.8g}, {ehi:.8g})", RuntimeWarning, stacklevel=2)
    return lo, hi


# -- full measures -----------------------------------------------------------------


@dataclass(frozen=True)
class FullMeasureReport:
    """Gibbs measure of ``q* (phi - alpha psi) - S(alpha) u`` and its two identities."""

    alpha: float
    value: float
    q_star: float
    constraint: float
    entropy: float
    u_integral: float

    @property
    def dimension_residual(self) -> float:
        return self.entropy / self.u_integral - self.value


def full_measure_check(space: ShiftSpace, phi: Potential, psi: Potential, u: Potential, alphas,
                       q_max: float = Q_MAX, truncation_range: int = TRUNCATION_RANGE) -> list[FullMeasureReport]:
    """Build the candidate full measure at each ``alpha`` and evaluate its identities."""
    system = spectral_system(space, phi, psi, u, truncation_range)
    out = []
    for a in alphas:
        pt = minimize_t_alpha(system, a, q_max)
        if not math.isfinite(pt.value):
            raise InputError(f"alpha={a} lies outside the domain")
        pot = linear_combination([(pt.q_star, system.phi), (-pt.q_star * a, system.psi),
                                  (-pt.value, system.u)])
        nu = gibbs_measure(space, pot)
        c = integrate(nu, system.phi) - a * integrate(nu, system.psi)
        out.append(FullMeasureReport(float(a), pt.value, pt.q_star, c, entropy(nu), integrate(nu, system.u)))
    return out


# -- conditional variational oracle ----------------------------------------------


class _MarkovFamily:
    """Markov measures on a block graph, parametrized by per-node logits."""

    def __init__(self, g: BlockGraph, c_edge: np.ndarray, u_edge: np.ndarray):
        self.g = g
        self.c = c_edge
        self.u = u_edge
        self.out = [np.flatnonzero(g.src == i) for i in range(g.n_nodes)]
        self.free = [(i, e) for i, es in enumerate(self.out) for e in es[1:]]
        self.dim = len(self.free)

    def edge_probs(self, theta):
        logits = np.zeros(len(self.g.src))
        for (_, e), v in zip(self.free, theta):
            logits[e] = v
        p = np.empty_like(logits)
        for es in self.out:
            z = logits[es] - logits[es].max()
            w = np.exp(z)
            p[es] = w / w.sum()
        return p

    def evaluate(self, theta):
        """(h / int u, int c) for the measure with logits ``theta``."""
        p = self.edge_probs(theta)
        n = self.g.n_nodes
        P = np.zeros((n, n))
        P[self.g.src, self.g.dst] = p
        A = np.vstack([P.T - np.eye(n), np.ones(n)])
        b = np.zeros(n + 1)
        b[-1] = 1.0
        pi = np.linalg.lstsq(A, b, rcond=None)[0]
        pi = np.clip(pi, 0.0, None)
        pi /= pi.sum()
        mass = pi[self.g.src] * p
        with np.errstate(divide="ignore", invalid="ignore"):
            h = -float(np.sum(np.where(p > 0, mass * np.log(p), 0.0)))
        U = float(mass @ self.u)
        obj = h / U if U > 0 else -math.inf
        return obj, float(mass @ self.c)


def _project(fam: _MarkovFamily, theta, band, reach=64.0):
    """Move along the constraint gradient onto ``|int c| <= band``; None if out of reach."""
    obj, c = fam.evaluate(theta)
    if abs(c) <= min(band, 1e-12):
        return theta, obj
    eps = 1e-6
    grad = np.array([(fam.evaluate(theta + eps * e)[1] - fam.evaluate(theta - eps * e)[1]) / (2 * eps)
                     for e in np.eye(fam.dim)])
    norm = np.linalg.norm(grad)
    if norm == 0:
        return None
    d = -np.sign(c) * grad / norm
    f = lambda s: fam.evaluate(theta + s * d)[1]
    s_prev, c_prev, best = 0.0, c, (abs(c), 0.0)
    s = 0.25
    while s <= reach:
        cs = f(s)
        if abs(cs) < best[0]:
            best = (abs(cs), s)
        if np.sign(cs) != np.sign(c_prev):
            root = brentq(f, s_prev, s, xtol=1e-12)
            th = theta + root * d
            o, cc = fam.evaluate(th)
            if abs(cc) <= band:
                return th, o
            break
        s_prev, c_prev = s, cs
        s *= 2
    if best[0] <= band:
        th = theta + best[1] * d
        return th, fam.evaluate(th)[0]
    return None


def cvp_oracle(space: ShiftSpace, phi: LocallyConstant, psi: LocallyConstant, u: LocallyConstant,
               alpha: float, order: int = 1, grid: int = 7, max_points: int = 400, starts: int = 3,
               band: float = 1e-6, seed: int = 0) -> float:
    """Lower-bound oracle for ``sup h_mu / int u dmu`` subject to ``int (phi - alpha psi) dmu = 0``.

    Searches Markov measures of the given order (raised to the longest
    potential range minus one): a logit grid, projection onto the
    constraint band, then coordinate descent with projection.
    """
    tabs = (phi, psi, u)
    if not all(isinstance(p, LocallyConstant) for p in tabs):
        raise InputError("the variational oracle takes locally constant potentials")
    width = max(order + 1, 2, *(p.range for p in tabs))
    g = block_graph(space, width)
    c = np.asarray(phi.edge_values(g)) - alpha * np.asarray(psi.edge_values(g))
    fam = _MarkovFamily(g, c, np.asarray(u.edge_values(g), dtype=float))
    if fam.dim == 0:
        obj, cval = fam.evaluate(np.zeros(0))
        if abs(cval) > band:
            raise InfeasibleConstraintError("the unique Markov measure misses the constraint")
        return obj
    axis = np.linspace(-3.0, 3.0, grid)
    if grid**fam.dim <= max_points:
        cands = [np.array(p) for p in itertools.product(axis, repeat=fam.dim)]
    else:
        rng = np.random.default_rng(seed)
        cands = list(rng.uniform(-3.0, 3.0, size=(max_points, fam.dim)))
    feasible = []
    for th in cands:
        pr = _project(fam, th, band)
        if pr is not None and math.isfinite(pr[1]):
            feasible.append(pr)
    if not feasible:
        raise InfeasibleConstraintError(f"no Markov measure of order {width - 1} meets the constraint "
                                        f"at alpha={alpha}")
    feasible.sort(key=lambda p: -p[1])
    best = -math.inf
    for th, obj in feasible[:starts]:
        th, obj = _coordinate_descent(fam, th, obj, band)
        best = max(best, obj)
    return best


def _coordinate_descent(fam, theta, obj, band, step=1.0, min_step=1e-5, max_sweeps=400):
    sweeps = 0
    while step >= min_step and sweeps < max_sweeps:
        sweeps += 1
        improved = False
        for i in range(fam.dim):
            for sgn in (1.0, -1.0):
                cand = theta.copy()
                cand[i] += sgn * step
                pr = _project(fam, cand, band)
                if pr is not None and pr[1] > obj + 1e-15:
                    theta, obj = pr
                    improved = True
        if not improved:
            step /= 2
    return theta, obj


# -- phase transitions -----------------------------------------------------------


@dataclass(frozen=True)
class ProbeRow:
    truncation_range: int
    restriction: int | None
    max_gap: float
    q_at_max: float
    data: LegendreData = field(repr=False, compare=False)


@dataclass(frozen=True)
class PhaseProbeReport:
    """Largest slope gaps of ``T_0`` per truncation range and run restriction.

    A transition is indicated when the full-space gap is nondecreasing over
    the three largest ranges and each of those gaps is above the noise floor.
    """

    rows: tuple[ProbeRow, ...]
    gaps_by_range: tuple[tuple[int, float], ...]
    trend: str
    indicated: bool
    noise_floor: float

    @property
    def message(self) -> str:
        parts = ", ".join(f"r={r}: {g:.3e}" for r, g in self.gaps_by_range)
        verdict = "transition indicated" if self.indicated else "no transition indicated"
        return f"{verdict} (gap trend {self.trend}; {parts})"


def phase_transition_probe(space: ShiftSpace, phi: Potential, q_window=(0.0, 10.0), q_step: float = 0.1,
                           ranges=(4, 6, 8), restrictions=(), symbol: int = 0, rule: str = "sup",
                           steps=LEGENDRE_STEPS, noise_floor: float = 1e-11,
                           workers: int | None = None) -> PhaseProbeReport:
    """Track the largest slope gap of ``T_0(q) = P(q phi)`` as the truncation sharpens.

    The "sup" truncation keeps the maximum of ``phi`` in place; a transition
    driven by a fixed point at the maximum then shows as a gap that grows
    with the range.
    """
    lo, hi = q_window
    q_grid = np.round(np.arange(lo, hi + q_step / 2, q_step), 12)
    one = constant(space if phi.space is None else phi.space, 1.0)
    rows = []
    for r in sorted(ranges):
        for n in (None, *restrictions):
            sub = space if n is None else restrict_run(space, symbol, n)
            # tables are lifted to range r too, so every range runs on the same graph
            system = spectral_system(sub, truncate(phi, r, rule), one, one, r, rule)
            data = legendre_profile(sub, phi, one, q_grid, steps=steps, q_max=None, system=system,
                                    workers=workers)
            g, q = data.max_gap
            rows.append(ProbeRow(r, n, g, q, data))
    full = [(row.truncation_range, row.max_gap) for row in rows if row.restriction is None]
    top = [g for _, g in full[-3:]]
    nondecreasing = all(b >= a for a, b in zip(top, top[1:]))
    trend = "nondecreasing" if nondecreasing else "inconclusive"
    indicated = nondecreasing and len(top) >= 2 and all(g > noise_floor for g in top)
    return PhaseProbeReport(tuple(rows), tuple(full), trend, indicated, noise_floor)
