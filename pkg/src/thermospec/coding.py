"""Symbolic coding of piecewise-monotone Markov interval maps.

A coding is given by its inverse branches ``g_a : [0, 1] -> [0, 1]``, one per
symbol, drawn from a small builtin family with closed-form derivatives. The
cylinder of a word ``w`` is ``g_{w_0}(g_{w_1}(... g_{w_{k-1}}([0, 1])))``.

The forward map on the image of ``g_a`` is ``f = g_a^{-1}`` and
``log f'(x) = -log |g_a'(f(x))|``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
import math

import numpy as np

from .errors import InputError
from .shift import ShiftSpace, Word, full_shift

FAMILIES = ("affine", "mobius", "power")


@dataclass(frozen=True)
class Branch:
    """Monotone inverse branch.

    affine(slope, offset):       y -> offset + slope * y
    mobius(a, b, c, d):          y -> (a y + b) / (c y + d)
    power(offset, scale, p):     y -> offset + scale * y**p
    """

    family: str
    params: tuple[float, ...]

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InputError(f"unknown branch family {self.family!r}; expected one of {FAMILIES}")
        expected = {"affine": 2, "mobius": 4, "power": 3}[self.family]
        if len(self.params) != expected:
            raise InputError(f"{self.family} branch takes {expected} parameters")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if self.family == "mobius":
            a, b, c, d = self.params
            if a * d - b * c == 0:
                raise InputError("degenerate mobius branch (ad - bc = 0)")
            if c != 0 and 0 <= -d / c <= 1:
                raise InputError("mobius branch has a pole in [0, 1]")
        if self.family == "power" and self.params[2] <= 0:
            raise InputError("power branch exponent must be positive")
        if self.family == "affine" and self.params[0] == 0:
            raise InputError("affine branch slope must be nonzero")

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        if self.family == "affine":
            m, o = self.params
            return o + m * y
        if self.family == "mobius":
            a, b, c, d = self.params
            return (a * y + b) / (c * y + d)
        o, s, p = self.params
        return o + s * np.power(y, p)

    def derivative(self, y):
        y = np.asarray(y, dtype=float)
        if self.family == "affine":
            return np.full_like(y, self.params[0])
        if self.family == "mobius":
            a, b, c, d = self.params
            return (a * d - b * c) / (c * y + d) ** 2
        o, s, p = self.params
        return s * p * np.power(y, p - 1)

    def forward(self, x):
        """The map f restricted to this branch's image."""
        x = np.asarray(x, dtype=float)
        if self.family == "affine":
            m, o = self.params
            return (x - o) / m
        if self.family == "mobius":
            a, b, c, d = self.params
            return (d * x - b) / (a - c * x)
        o, s, p = self.params
        return np.power(np.clip((x - o) / s, 0.0, None), 1.0 / p)

    def log_fprime(self, x):
        """log f'(x) for x in this branch's image."""
        x = np.asarray(x, dtype=float)
        if self.family == "affine":
            return np.full_like(x, -math.log(abs(self.params[0])))
        if self.family == "mobius":
            a, b, c, d = self.params
            return math.log(abs(a * d - b * c)) - 2.0 * np.log(np.abs(a - c * x))
        with np.errstate(divide="ignore"):
            return -np.log(np.abs(self.derivative(self.forward(x))))

    def log_fprime_lipschitz(self) -> float:
        """Lipschitz constant of log f' on the branch image (inf when unbounded)."""
        if self.family == "affine":
            return 0.0
        if self.family == "mobius":
            a, b, c, d = self.params
            if c == 0:
                return 0.0
            lo, hi = sorted(self.image)
            # |d/dx 2 log|a - c x|| = 2|c| / |a - c x|, maximal where |a - c x| is smallest
            dist = min(abs(a - c * lo), abs(a - c * hi))
            if (a - c * lo) * (a - c * hi) <= 0:
                return math.inf
            return 2 * abs(c) / dist
        return math.inf

    @cached_property
    def image(self) -> tuple[float, float]:
        lo, hi = float(self(0.0)), float(self(1.0))
        return (min(lo, hi), max(lo, hi))


@dataclass(frozen=True)
class IntervalCoding:
    """Full-branched coding by inverse branches.

    ``tiling=True`` requires the branch images to tile [0, 1]; with
    ``tiling=False`` the images need only have disjoint interiors (a
    cookie-cutter repeller).
    """

    branches: tuple[Branch, ...]
    tiling: bool = True
    name: str = ""
    check_depth: int = 10

    def __post_init__(self):
        if len(self.branches) < 2:
            raise InputError("a coding needs at least two branches")
        imgs = sorted(b.image for b in self.branches)
        tol = 1e-12
        for lo, hi in imgs:
            if lo < -tol or hi > 1 + tol or hi - lo <= 0:
                raise InputError("branch images must be non-degenerate subintervals of [0, 1]")
        for (_, h0), (l1, _) in zip(imgs, imgs[1:]):
            if l1 < h0 - tol:
                raise InputError("branch images overlap")
            if self.tiling and abs(l1 - h0) > tol:
                raise InputError("branch images do not tile [0, 1]")
        if self.tiling and (abs(imgs[0][0]) > tol or abs(imgs[-1][1] - 1) > tol):
            raise InputError("branch images do not tile [0, 1]")
        diams = self.max_diameters(self.check_depth)
        if np.any(np.diff(diams) > 1e-12) or not diams[-1] < diams[0]:
            raise InputError("inverse branches do not contract cylinders")

    @property
    def branch_count(self) -> int:
        return len(self.branches)

    @cached_property
    def partition_endpoints(self) -> tuple[float, ...]:
        pts = sorted({round(v, 15) for b in self.branches for v in b.image})
        return tuple(pts)

    @cached_property
    def space(self) -> ShiftSpace:
        return full_shift(self.branch_count)

    def branch_of(self, x: float) -> int:
        """Symbol whose partition element contains ``x`` (left-closed convention)."""
        for a, b in enumerate(self.branches):
            lo, hi = b.image
            if lo <= x < hi or (x == hi == 1.0):
                return a
        raise InputError(f"point {x} not covered by any branch")

    def cylinder(self, word) -> tuple[float, float]:
        e0, e1 = self.images(word)
        return (e0, e1) if e0 <= e1 else (e1, e0)

    def images(self, word) -> tuple[float, float]:
        """``(G_w(0), G_w(1))`` for the composed inverse branch ``G_w``.

        Unlike :meth:`cylinder` the pair is not sorted, so the forward orbit
        of either endpoint runs through the matching endpoints of the suffix
        cylinders: ``f^j(G_w(y)) = G_{w[j:]}(y)``.
        """
        e0, e1 = 0.0, 1.0
        for a in reversed(word):
            g = self.branches[a]
            e0, e1 = float(g(e0)), float(g(e1))
        return e0, e1

    def cylinder_images(self, depth: int) -> tuple[np.ndarray, np.ndarray]:
        """Endpoint images of all ``d**depth`` cylinders.

        Index ``c`` encodes the word in base d with the first symbol most
        significant, matching lexicographic order.
        """
        e0 = np.zeros(1)
        e1 = np.ones(1)
        for _ in range(depth):
            # prepending symbol a sends code c to a * d**j + c
            e0 = np.concatenate([g(e0) for g in self.branches])
            e1 = np.concatenate([g(e1) for g in self.branches])
        return e0, e1

    def cylinders(self, depth: int) -> tuple[np.ndarray, np.ndarray]:
        """Sorted endpoints ``(lo, hi)`` of all depth-``depth`` cylinders."""
        e0, e1 = self.cylinder_images(depth)
        return np.minimum(e0, e1), np.maximum(e0, e1)

    def max_diameters(self, depth: int) -> np.ndarray:
        """Largest cylinder diameter at depths 0..depth."""
        out = [1.0]
        lo, hi = np.zeros(1), np.ones(1)
        for _ in range(depth):
            los, his = [], []
            for g in self.branches:
                u, v = g(lo), g(hi)
                los.append(np.minimum(u, v))
                his.append(np.maximum(u, v))
            lo, hi = np.concatenate(los), np.concatenate(his)
            out.append(float((hi - lo).max()))
        return np.array(out)


def cylinder_interval(coding: IntervalCoding, w: Word) -> tuple[float, float]:
    """Closed interval of points whose itinerary begins with ``w``."""
    if any(not 0 <= a < coding.branch_count for a in w):
        raise InputError(f"word {w} uses symbols outside the coding alphabet")
    return coding.cylinder(w)


def linear_coding(slopes, name="") -> IntervalCoding:
    """Affine branches with the given expansion rates, packed left to right."""
    branches, left = [], 0.0
    for s in slopes:
        branches.append(Branch("affine", (1.0 / s, left)))
        left += 1.0 / s
    tiling = abs(left - 1.0) < 1e-12
    if left > 1 + 1e-12:
        raise InputError("slopes too small: images exceed [0, 1]")
    return IntervalCoding(tuple(branches), tiling=tiling, name=name or f"linear{tuple(slopes)}")


def doubling_coding() -> IntervalCoding:
    """x -> 2x mod 1 with the binary partition."""
    return linear_coding([2.0, 2.0], name="doubling")


def parabolic_coding() -> IntervalCoding:
    """x/(1-x) on [0, 1/2] and (2x-1)/x on (1/2, 1]; parabolic fixed point at 0."""
    return IntervalCoding(
        (Branch("mobius", (1.0, 0.0, 1.0, 1.0)), Branch("mobius", (0.0, 1.0, -1.0, 2.0))),
        name="parabolic",
    )
