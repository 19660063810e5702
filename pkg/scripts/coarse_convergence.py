"""Coarse rates of the symbol-1 frequency on the full 2-shift against the binary entropy.

As n grows the rate on the window [alpha - r, alpha + r] approaches the
largest binary entropy H over that window, printed in the last column.

    python scripts/coarse_convergence.py --n-list 20,80,320 --radius 0.01
"""

import argparse
import math

import numpy as np

from thermospec.coarse import coarse_spectrum
from thermospec.potentials import indicator
from thermospec.shift import full_shift


def H(x):
    return -sum(p * math.log(p) for p in (x, 1 - x) if p > 0)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-list", default="20,80,320")
    ap.add_argument("--radius", type=float, default=0.01)
    args = ap.parse_args()
    ns = tuple(int(s) for s in args.n_list.split(","))
    space = full_shift(2)
    alphas = np.round(np.linspace(0.1, 0.9, 9), 12)
    cs = coarse_spectrum(space, indicator(space, 1), alphas, args.radius, ns)
    print("alpha  " + "  ".join(f"n={n:>5}" for n in ns) + "   sup H")
    for i, a in enumerate(alphas):
        a_best = min(max(0.5, a - args.radius), a + args.radius)
        print(f"{a:5.2f}  " + "  ".join(f"{r:7.4f}" for r in cs.rates[i]) + f"   {H(a_best):.4f}")


if __name__ == "__main__":
    main()
