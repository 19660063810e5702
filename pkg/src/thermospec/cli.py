"""Command-line entry point: ``thermospec <subcommand> <system> [flags]``.

Every subcommand writes one CSV (header row, fixed column order, floats at
12 significant digits, ``-inf``/``inf``/``nan`` for non-finite values) and
one JSON run manifest. The CSV goes to ``--out`` (default standard output);
the manifest goes to ``<out>.manifest``, or to standard error when the CSV
goes to standard output.

Exit codes: 0 success, 1 bad input (flags, system file, parameters),
2 numerical failure. On exit 2 the rows computed before the failure are
already written.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .coarse import LATTICE_BUDGET, MAX_DENOMINATOR, chain_check, coarse_count
from .config import SystemConfig, bundled_names, load_system
from .equilibrium import entropy, gibbs_measure, integrate
from .errors import BudgetExceededError, InputError, NumericalError
from .parallel import THREADS_ENV, thread_count
from .potentials import as_table, constant, geometric_potential, linear_combination
from .pressure import EIG_TOL, pressure, pressure_partition, pressure_spectral
from .selftest import run_selftest
from .spectra import (
    DEGENERATE_TOL,
    EXHAUSTION_N,
    LEGENDRE_STEPS,
    Q_MAX,
    ROOT_TOL,
    TRANSITION_THRESHOLD,
    birkhoff_spectrum,
    cvp_oracle,
    legendre_profile,
    lyapunov_spectrum,
    pointwise_dimension_spectrum,
    predicted_spectrum,
    spectral_system,
)

COLUMNS = {
    "pressure": ("q", "value", "lower", "upper", "method", "depth"),
    "equilibrium": ("quantity", "index", "value"),
    "spectrum": ("alpha", "S_alpha", "q_star", "residual", "flags"),
    "legendre": ("q", "T0", "d_minus", "d_plus", "transition_flag"),
    "coarse": ("alpha", "n", "count", "rate"),
    "cvp-check": ("alpha", "S_alpha", "oracle", "difference", "status"),
    "selftest": ("check", "status", "detail", "seconds"),
}
SPECTRUM_KINDS = ("birkhoff", "lyapunov-entropy", "lyapunov-dim", "pointwise-dim", "mixed")


class UsageError(InputError):
    """Bad command line."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# -- formatting ---------------------------------------------------------------------


def format_value(v) -> str:
    """CSV token: ints as-is, floats at 12 significant digits, non-finite as inf/-inf/nan."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        f = float(v)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return format(f, ".12g")
    return str(v)


def parse_grid(text: str) -> np.ndarray:
    """``a:b:n`` (n evenly spaced points) or a comma-separated list."""
    try:
        if ":" in text:
            a, b, n = text.split(":")
            n = int(n)
            if n < 1:
                raise ValueError
            return np.linspace(float(a), float(b), n)
        vals = [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"grid {text!r} is neither 'start:stop:count' nor a comma list") from None
    if not vals:
        raise UsageError("empty grid")
    return np.array(vals)


def parse_ints(text: str) -> tuple[int, ...]:
    try:
        out = tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None
    if not out:
        raise UsageError("empty integer list")
    return out


class _Writer:
    """Writes and flushes CSV rows one at a time so partial output survives a failure."""

    def __init__(self, stream, columns):
        self.stream = stream
        self.writer = csv.writer(stream, lineterminator="\n")
        self.writer.writerow(columns)
        self.rows = 0

    def write(self, row):
        self.writer.writerow([format_value(v) for v in row])
        self.stream.flush()
        self.rows += 1


# -- subcommands ----------------------------------------------------------------------
#
# Each command is a generator of rows; ``info`` collects tolerances and results
# for the manifest.


def _truncation(args, cfg: SystemConfig) -> int:
    return args.truncation_range if getattr(args, "truncation_range", None) else cfg.truncation_range


def _pick(cfg: SystemConfig, name: str):
    return {"phi": cfg.phi, "psi": cfg.psi, "u": cfg.u}[name]


def cmd_pressure(args, cfg: SystemConfig, info):
    trange = _truncation(args, cfg)
    pot = _pick(cfg, args.potential)
    info["tolerances"] = {"eigen_tol": EIG_TOL, "truncation_range": trange}
    for q in parse_grid(args.q):
        scaled = linear_combination([(float(q), pot)])
        if args.partition_depth:
            est = pressure_partition(cfg.space, scaled, args.partition_depth)
        else:
            est = pressure(cfg.space, scaled, trange)
        yield float(q), est.value, est.lower, est.upper, est.method, est.depth


def _node_label(graph, i) -> str:
    return "".join(str(s) for s in graph.node_symbols[i])


def cmd_equilibrium(args, cfg: SystemConfig, info):
    trange = _truncation(args, cfg)
    tab = as_table(linear_combination([(args.q, cfg.phi)]), trange)
    mu = gibbs_measure(cfg.space, tab)
    info["tolerances"] = {"eigen_tol": EIG_TOL, "truncation_range": trange}
    g = mu.graph
    for i in range(g.n_nodes):
        yield "stationary", _node_label(g, i), float(mu.stationary[i])
    for a, b in zip(g.src, g.dst):
        yield "transition", f"{_node_label(g, a)}>{_node_label(g, b)}", float(mu.stochastic[a, b])
    h = entropy(mu)
    yield "entropy", "", h
    for name in ("phi", "psi", "u"):
        yield "integral", name, integrate(mu, as_table(_pick(cfg, name), trange))
    info["results"] = {"entropy": h, "order": mu.order, "nodes": g.n_nodes}


def _spectrum_parts(cfg: SystemConfig, kind: str, trange: int):
    """Numerator, denominator and dimension potential that the spectrum of ``kind`` uses."""
    space = cfg.space
    one = constant(space.base, 1.0)
    if kind == "birkhoff":
        return cfg.phi, one, one
    if kind == "mixed":
        return cfg.phi, cfg.psi, cfg.u
    geo = geometric_potential(cfg.require_coding())
    if kind == "lyapunov-entropy":
        return geo, one, one
    if kind == "lyapunov-dim":
        return geo, one, geo
    tab = as_table(cfg.phi, trange)
    P = pressure_spectral(space, tab).value
    return linear_combination([(-1.0, tab), (P, constant(tab.space, 1.0))]), geo, geo


def _default_alpha_grid(args, cfg, trange) -> np.ndarray:
    lo, hi = args.alpha_min, args.alpha_max
    if lo is None or hi is None:
        num, den, _ = _spectrum_parts(cfg, args.kind, trange)
        one = constant(cfg.space.base, 1.0)
        domain = spectral_system(cfg.space, num, den, one, trange).domain
        if domain is None:
            raise UsageError("the denominator potential vanishes on a cycle; give --alpha-min and --alpha-max")
        lo = domain[0] if lo is None else lo
        hi = domain[1] if hi is None else hi
        if args.kind == "lyapunov-dim" and lo <= 0:
            lo = hi / max(args.alpha_steps, 2)
    if args.alpha_steps < 1:
        raise UsageError("--alpha-steps must be >= 1")
    return np.linspace(lo, hi, args.alpha_steps)


def cmd_spectrum(args, cfg: SystemConfig, info):
    trange = _truncation(args, cfg)
    grid = _default_alpha_grid(args, cfg, trange)
    kw = dict(q_max=args.q_max, truncation_range=trange, exhaustion_n=parse_ints(args.exhaustion_n))
    if args.kind == "birkhoff":
        curve = birkhoff_spectrum(cfg.space, cfg.phi, grid, **kw)
    elif args.kind == "mixed":
        curve = predicted_spectrum(cfg.space, cfg.phi, cfg.psi, cfg.u, grid, **kw)
    elif args.kind in ("lyapunov-entropy", "lyapunov-dim"):
        kind = "entropy" if args.kind == "lyapunov-entropy" else "dimension"
        curve = lyapunov_spectrum(cfg.space, cfg.require_coding(), grid, kind=kind, **kw)
    else:
        curve = pointwise_dimension_spectrum(cfg.space, cfg.require_coding(), cfg.phi, grid, **kw)
    info["tolerances"] = {"root_tol": ROOT_TOL, "q_max": args.q_max, "truncation_range": trange,
                          "degenerate_tol": DEGENERATE_TOL, "exhaustion_n": list(kw["exhaustion_n"])}
    info["results"] = {"kind": curve.kind, "domain": list(curve.domain) if curve.domain else None,
                       "max_value": curve.max_value, "exhaustion": "by_n" in curve.meta}
    failed = []
    for row in curve.rows():
        yield row
        if "error:" in row[4]:
            failed.append((row[0], row[4]))
    if failed:
        a, flag = failed[0]
        raise NumericalError(f"{len(failed)} grid points failed; first at alpha={a:.12g} ({flag})")


def cmd_legendre(args, cfg: SystemConfig, info):
    trange = _truncation(args, cfg)
    q_grid = parse_grid(args.q_grid)
    data = legendre_profile(cfg.space, cfg.phi, cfg.u, q_grid, threshold=args.threshold,
                            q_max=args.q_max, truncation_range=trange)
    info["tolerances"] = {"root_tol": ROOT_TOL, "steps": list(LEGENDRE_STEPS), "threshold": args.threshold,
                          "q_max": args.q_max, "truncation_range": trange}
    gap, q_gap = data.max_gap
    info["results"] = {"transitions": list(data.transitions), "max_gap": gap, "max_gap_q": q_gap,
                       "asymptotic_slopes": [data.asymptotic[0][0], data.asymptotic[1][0]]
                       if data.asymptotic else None,
                       "exact_domain": list(data.exact_domain) if data.exact_domain else None}
    for i, q in enumerate(data.q_grid):
        flag = int(data.d_plus[i] - data.d_minus[i] > data.threshold)
        yield float(q), float(data.T0[i]), float(data.d_minus[i]), float(data.d_plus[i]), flag


def cmd_coarse(args, cfg: SystemConfig, info):
    crange = args.coarse_range or cfg.coarse_range
    tab = as_table(cfg.phi, crange)
    grid = parse_grid(args.alpha_grid) if args.alpha_grid else np.round(np.linspace(tab.min, tab.max, 11), 12)
    ns = parse_ints(args.n_list)
    info["tolerances"] = {"max_denominator": MAX_DENOMINATOR, "lattice_budget": LATTICE_BUDGET,
                          "radius": args.radius, "coarse_range": crange}
    perturbation = 0.0
    for n in ns:
        for a in grid:
            c = coarse_count(cfg.space, tab, n, (a - args.radius, a + args.radius))
            perturbation = max(perturbation, c.meta["perturbation"])
            yield float(a), n, c.count, c.rate
    results = {"lattice_perturbation": perturbation, "estimate": "finite-n"}
    if args.chain:
        report = chain_check(cfg.space, cfg.phi, grid, ns, args.radius, crange)
        results["chain"] = {"cells": len(report.cells), "violations": len(report.violations),
                            "max_violation": report.max_violation}
    info["results"] = results


def cmd_cvp_check(args, cfg: SystemConfig, info):
    trange = _truncation(args, cfg)
    phi, psi, u = (as_table(p, trange) for p in (cfg.phi, cfg.psi, cfg.u))
    system = spectral_system(cfg.space, phi, psi, u, trange)
    if args.alpha_grid:
        grid = parse_grid(args.alpha_grid)
    else:
        if system.domain is None:
            raise UsageError("the denominator potential vanishes on a cycle; give --alpha-grid")
        lo, hi = system.domain
        grid = np.linspace(lo, hi, 7)[1:-1]
    curve = predicted_spectrum(cfg.space, phi, psi, u, grid, truncation_range=trange, exhaustion=False)
    info["tolerances"] = {"agreement_tol": args.tol, "order": args.order, "truncation_range": trange}
    # the comparison is a pass/fail check only when psi is uniformly positive
    informational = system.domain is None
    bad = 0
    for a, s in zip(grid, curve.values):
        oracle = cvp_oracle(cfg.space, phi, psi, u, float(a), order=args.order)
        diff = abs(float(s) - oracle) if math.isfinite(s) and math.isfinite(oracle) else math.inf
        ok = diff <= args.tol or (s == oracle)
        if informational:
            status = "info"
        else:
            status = "ok" if ok else "fail"
            bad += not ok
        yield float(a), float(s), oracle, diff, status
    info["results"] = {"failed": bad, "informational": informational}
    if bad:
        raise NumericalError(f"{bad} grid points disagree with the variational oracle beyond {args.tol}")


def cmd_selftest(args, cfg, info):
    info["tolerances"] = {"seed": args.seed}
    failed = 0
    for r in run_selftest(args.seed):
        failed += not r.passed
        yield r.name, "pass" if r.passed else "fail", r.detail, round(r.seconds, 3)
    if args.configs:
        from .bundled import check_bundled

        for r in check_bundled():
            failed += not r.passed
            yield r.name, "pass" if r.passed else "fail", r.detail, round(r.seconds, 3)
    info["results"] = {"failed": failed}
    if failed:
        raise NumericalError(f"{failed} invariant checks failed")


COMMANDS = {
    "pressure": cmd_pressure,
    "equilibrium": cmd_equilibrium,
    "spectrum": cmd_spectrum,
    "legendre": cmd_legendre,
    "coarse": cmd_coarse,
    "cvp-check": cmd_cvp_check,
    "selftest": cmd_selftest,
}


# -- argument parsing -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="thermospec", description="Thermodynamic-formalism spectra of symbolic systems.")
    p.add_argument("--version", action="version", version=f"thermospec {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def system_cmd(name, help):
        s = sub.add_parser(name, help=help)
        s.add_argument("system", help=f"system file or bundled name ({', '.join(bundled_names())})")
        s.add_argument("--out", default="-", help="CSV path (default: standard output)")
        s.add_argument("--manifest", help="manifest path (default: <out>.manifest, or stderr)")
        return s

    s = system_cmd("pressure", "topological pressure of q * potential")
    s.add_argument("--q", default="1", help="q values: 'a:b:n' or comma list (default 1)")
    s.add_argument("--potential", choices=("phi", "psi", "u"), default="phi")
    s.add_argument("--partition-depth", type=int, help="bracket by depth-k partition sums instead")
    s.add_argument("--truncation-range", type=int)

    s = system_cmd("equilibrium", "Markov equilibrium state of q * phi")
    s.add_argument("--q", type=float, default=1.0)
    s.add_argument("--truncation-range", type=int)

    s = system_cmd("spectrum", "predicted multifractal spectrum S(alpha)")
    s.add_argument("--kind", choices=SPECTRUM_KINDS, default="mixed")
    s.add_argument("--alpha-min", type=float)
    s.add_argument("--alpha-max", type=float)
    s.add_argument("--alpha-steps", type=int, default=101)
    s.add_argument("--q-max", type=float, default=Q_MAX)
    s.add_argument("--exhaustion-n", default=",".join(map(str, EXHAUSTION_N)))
    s.add_argument("--truncation-range", type=int)

    s = system_cmd("legendre", "T0(q) with one-sided slopes and transition flags")
    s.add_argument("--q-grid", default="-10:10:81")
    s.add_argument("--q-max", type=float, default=Q_MAX, help="where asymptotic slopes are read")
    s.add_argument("--threshold", type=float, default=TRANSITION_THRESHOLD)
    s.add_argument("--truncation-range", type=int)

    s = system_cmd("coarse", "exact coarse counts of Birkhoff averages")
    s.add_argument("--alpha-grid", help="'a:b:n' or comma list (default: 11 points over [min phi, max phi])")
    s.add_argument("--radius", type=float, default=0.05)
    s.add_argument("--n-list", default="12,16,20")
    s.add_argument("--coarse-range", type=int)
    s.add_argument("--chain", action="store_true", help="also check counts against the predicted spectrum")

    s = system_cmd("cvp-check", "compare S(alpha) with a search over Markov measures")
    s.add_argument("--alpha-grid", help="default: 5 interior points of the domain")
    s.add_argument("--order", type=int, default=1)
    s.add_argument("--tol", type=float, default=1e-3)
    s.add_argument("--truncation-range", type=int)

    s = sub.add_parser("selftest", help="randomized invariant suite")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--configs", action="store_true", help="also validate bundled configs against expected CSVs")
    s.add_argument("--out", default="-")
    s.add_argument("--manifest")
    return p


def _emit_manifest(args, manifest: dict, stderr):
    text = json.dumps(manifest, indent=2, sort_keys=True, default=_json_default) + "\n"
    target = args.manifest or (None if args.out == "-" else f"{args.out}.manifest")
    if target is None:
        stderr.write(text)
    else:
        Path(target).write_text(text)


def _json_default(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    return str(v)


def _finite(obj):
    """Replace non-finite floats by their CSV tokens so the manifest stays strict JSON."""
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, (float, np.floating)) and not math.isfinite(obj):
        return format_value(obj)
    return obj


def run(argv=None, stdout=None, stderr=None) -> int:
    """Run one command; returns the exit code instead of exiting."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    t0 = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        stderr.write(f"error: {exc}\n")
        return 1
    cfg = None
    info: dict = {}
    manifest = {"subcommand": args.command, "argv": list(argv if argv is not None else sys.argv[1:]),
                "flags": {k: v for k, v in vars(args).items() if k not in ("command",)},
                "version": __version__, "threads": thread_count(), "threads_env": THREADS_ENV}
    out_stream = None
    writer = None
    code = 0
    try:
        if args.command != "selftest":
            try:
                cfg = load_system(args.system)
            except InputError as exc:
                raise InputError(f"{args.system}: {exc}") from None
            manifest["system"] = {"name": cfg.name, "path": cfg.path, "digest": cfg.digest}
        out_stream = stdout if args.out == "-" else open(args.out, "w", newline="")
        writer = _Writer(out_stream, COLUMNS[args.command])
        for row in COMMANDS[args.command](args, cfg, info):
            writer.write(row)
    except (InputError, BudgetExceededError) as exc:
        stderr.write(f"error: {exc}\n")
        manifest["error"] = str(exc)
        code = 1
    except NumericalError as exc:
        stderr.write(f"numerical failure: {exc}\n")
        manifest["error"] = str(exc)
        code = 2
    finally:
        if out_stream is not None and out_stream is not stdout:
            out_stream.close()
    manifest.update(_finite(info))
    manifest["rows"] = writer.rows if writer else 0
    manifest["exit_code"] = code
    manifest["duration_seconds"] = round(time.perf_counter() - t0, 6)
    if writer is not None:
        _emit_manifest(args, _finite(manifest), stderr)
    return code


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
