"""Regenerate the expected-output CSVs of the bundled configs.

Configs with a closed-form answer get oracle values evaluated on the grid
that the selfcheck command uses; the rest (parabolic, pesin_zhang) freeze
the current output as a regression reference.

    python scripts/make_expected.py
"""

import csv
import math

from thermospec.bundled import run_selfcheck
from thermospec.config import BUNDLED_DIR, bundled_names

LOG2, LOG3 = math.log(2), math.log(3)


def H(x):
    """Binary entropy in nats, 0 at the endpoints."""
    x = min(max(x, 0.0), 1.0)
    return -sum(p * math.log(p) for p in (x, 1 - x) if p > 0)


def binomial_dimension(a, p=0.25):
    # frequency x of the symbol of mass p at local dimension a
    x = (a * LOG2 + math.log(1 - p)) / (math.log(1 - p) - math.log(p))
    return H(x) / LOG2


ORACLES = {
    "full2_indicator": lambda a: H(a),
    "golden_indicator": lambda a: (1 - a) * H(a / (1 - a)) if a < 1 else 0.0,
    "binomial": binomial_dimension,
    "mixed": lambda a: H(a) / ((1 - a) * LOG2 + a * LOG3),
    "linear24": lambda a: H(a / LOG2 - 1) / a,
}
GOLDEN = math.log((1 + math.sqrt(5)) / 2)
REGRESSION_COLUMNS = {"spectrum": ("alpha", "S_alpha"), "pressure": ("q", "value", "lower", "upper")}


def fmt(v):
    return format(v, ".12g")


def expected_rows(name):
    code, rows = run_selfcheck(name)
    if code:
        raise SystemExit(f"selfcheck of {name} exited {code}")
    if name == "golden_mean":
        return ("q", "value"), [(r["q"], fmt(GOLDEN)) for r in rows]
    if name in ORACLES:
        f = ORACLES[name]
        return ("alpha", "S_alpha"), [(r["alpha"], fmt(f(float(r["alpha"])))) for r in rows]
    cols = REGRESSION_COLUMNS["pressure" if "value" in rows[0] else "spectrum"]
    return cols, [tuple(r[c] for c in cols) for r in rows]


def main():
    for name in bundled_names():
        cols, rows = expected_rows(name)
        with open(BUNDLED_DIR / f"{name}.expected.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            w.writerows(rows)
        print(f"{name}: {len(rows)} rows ({'oracle' if name in ORACLES or name == 'golden_mean' else 'regression'})")


if __name__ == "__main__":
    main()
