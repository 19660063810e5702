"""Slope gaps of T0(q) = root of P(q phi - t) = 0 as the truncation range grows.

Compares the Pesin-Zhang potential against the smooth control indicator(1)
on the full 2-shift, and optionally on run-restricted subshifts.

    python scripts/phase_probe.py --ranges 4,6,8 --restrictions 4,8
"""

import argparse

from thermospec.potentials import indicator, pesin_zhang_potential
from thermospec.shift import full_shift
from thermospec.spectra import phase_transition_probe


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--beta", type=float, default=0.5)
    ap.add_argument("--ranges", default="4,6,8")
    ap.add_argument("--restrictions", default="")
    ap.add_argument("--q-max", type=float, default=10.0)
    args = ap.parse_args()
    ranges = tuple(int(s) for s in args.ranges.split(","))
    restrictions = tuple(int(s) for s in args.restrictions.split(",") if s)
    space = full_shift(2)
    for label, phi in (("pesin_zhang", pesin_zhang_potential(args.beta)), ("control", indicator(space, 1))):
        report = phase_transition_probe(space, phi, (0.0, args.q_max), ranges=ranges,
                                        restrictions=restrictions)
        print(f"{label}: {report.message}")
        for row in report.rows:
            where = "full shift" if row.restriction is None else f"runs of 0 <= {row.restriction}"
            print(f"  r={row.truncation_range:2d}  {where:>16}  max gap {row.max_gap:.3e} at q={row.q_at_max:.1f}")


if __name__ == "__main__":
    main()
