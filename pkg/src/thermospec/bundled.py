"""Round-trip validation of the bundled configs against their expected CSVs.

Each bundled ``<name>.cfg`` carries a ``selfcheck`` command line. Running it
must reproduce ``<name>.expected.csv``: every column present in the expected
file is compared, numbers within ``selfcheck_tol`` and other tokens exactly.
"""

from __future__ import annotations

import csv
import io
import math
import time

from .config import BUNDLED_DIR, bundled_names, load_system
from .selftest import CheckResult


def selfcheck_argv(name: str) -> list[str]:
    cfg = load_system(name)
    if not cfg.selfcheck:
        raise ValueError(f"bundled config {name!r} has no selfcheck line")
    argv = list(cfg.selfcheck)
    return [argv[0], name, *argv[1:]]


def run_selfcheck(name: str) -> tuple[int, list[dict]]:
    from .cli import run

    out, err = io.StringIO(), io.StringIO()
    code = run(selfcheck_argv(name), stdout=out, stderr=err)
    return code, list(csv.DictReader(io.StringIO(out.getvalue())))


def read_expected(name: str) -> list[dict]:
    with open(BUNDLED_DIR / f"{name}.expected.csv", newline="") as fh:
        return list(csv.DictReader(fh))


def _number(token: str):
    try:
        return float(token)
    except ValueError:
        return None


def compare_rows(got: list[dict], expected: list[dict], tol: float) -> tuple[float, str]:
    """Largest numeric deviation and a description of the first mismatch ('' if none)."""
    if len(got) != len(expected):
        return math.inf, f"{len(got)} rows, expected {len(expected)}"
    worst = 0.0
    for i, (g, e) in enumerate(zip(got, expected)):
        for col, want in e.items():
            have = g.get(col)
            if have is None:
                return math.inf, f"missing column {col!r}"
            a, b = _number(have), _number(want)
            if a is None or b is None:
                if have != want:
                    return math.inf, f"row {i} column {col}: {have!r} != {want!r}"
                continue
            if math.isinf(a) or math.isinf(b) or math.isnan(a) or math.isnan(b):
                if have != want:
                    return math.inf, f"row {i} column {col}: {have} != {want}"
                continue
            d = abs(a - b)
            worst = max(worst, d)
            if d > tol:
                return d, f"row {i} column {col}: {have} vs {want}"
    return worst, ""


def check_bundled(names=None) -> list[CheckResult]:
    out = []
    for name in names or bundled_names():
        t0 = time.perf_counter()
        cfg = load_system(name)
        try:
            code, got = run_selfcheck(name)
            worst, problem = compare_rows(got, read_expected(name), cfg.selfcheck_tol)
            passed = code == 0 and not problem
            detail = problem or f"max deviation {worst:.2e} (tol {cfg.selfcheck_tol:g})"
            if code:
                detail = f"exit {code}; {detail}"
        except (OSError, ValueError) as exc:
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(f"bundled config {name}", passed, detail, time.perf_counter() - t0))
    return out
