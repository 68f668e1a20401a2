"""Build exact piecewise-linear maps realizing a prescribed direction code.

The canonical orbit representative of a code (1/k with the sign chosen by
the k-th label, 0 once a finite code runs out) becomes the breakpoint set of
an interpolated map: each orbit value maps to its successor, the tail maps
to 0, and 0 stays fixed.  Because the representative magnitudes 1/k shrink
strictly, every value moves strictly closer to 0 in absolute value, which is
exactly the property ``verify_f1_pwl`` certifies; such a map has no periodic
point besides the fixed point 0.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional, Tuple

from .codes import LRCode, canonical_representative
from .maps import PiecewiseLinearMap, pwl_map

__all__ = ["synthesize_map", "verify_f1_pwl"]


def synthesize_map(code: LRCode, truncation: int = 40) -> Tuple[PiecewiseLinearMap, Fraction]:
    """A piecewise-linear self-map of [-1, 1] whose orbit from the returned
    start point reproduces the code exactly.

    Finite codes are realized in full: the orbit walks every label and then
    lands on 0.  Codes with a periodic tail are truncated to ``truncation``
    orbit values, whose last value is sent to 0; re-encoding the orbit then
    recovers the first truncation - 1 labels.
    """
    if code.kind == "stream":
        raise ValueError("synthesis needs a finite or eventually-periodic code")
    if truncation < 2:
        raise ValueError("truncation must be >= 2")
    if code.length is not None:
        if truncation < code.length + 1:
            raise ValueError(
                f"truncation {truncation} too small for a finite code of "
                f"length {code.length}")
        n = code.length + 1
    else:
        n = truncation

    xs = canonical_representative(code, n)
    mapping = {}
    for k in range(n - 1):
        mapping[xs[k]] = xs[k + 1]
    mapping[xs[n - 1]] = Fraction(0)  # truncated tail collapses onto the fixed point
    mapping[Fraction(0)] = Fraction(0)
    m = pwl_map(sorted(mapping.items()), domain=(-1, 1))
    return m, xs[0]


def verify_f1_pwl(m: PiecewiseLinearMap) -> Tuple[bool, Optional[Fraction]]:
    """Check |f(x)| < |x| for every x != 0 of the domain, reporting the first
    violating breakpoint (left to right) as witness.

    The bound is linear on each segment, so checking segment endpoints is
    exhaustive once no segment straddles 0.  A segment crossing 0 is accepted
    only when it passes exactly through (0, 0), where it is split in two;
    otherwise the map cannot fix 0 and the check refuses it.  Success implies
    every forward orbit converges to the fixed point 0, so the map has no
    cycle of length 2 (or any other nontrivial periodic orbit).
    """
    zero = Fraction(0)
    if m.lo > zero or m.hi < zero:
        raise ValueError("0 must belong to the domain")

    endpoints = []
    for (x0, y0), (x1, y1) in zip(m.points, m.points[1:]):
        if x0 < zero < x1:
            s = (y1 - y0) / (x1 - x0)
            at0 = y0 + s * (zero - x0)
            if at0 != 0:
                raise ValueError(
                    "a segment crosses 0 with f(0) != 0; add a breakpoint (0, 0)")
            endpoints += [(x0, y0), (x1, y1)]
        else:
            endpoints += [(x0, y0), (x1, y1)]
    # 0 must actually be fixed
    i = None
    for x, y in m.points:
        if x == zero:
            i = (x, y)
            break
    if i is not None and i[1] != 0:
        raise ValueError("f(0) != 0")

    seen = set()
    for x, y in endpoints:
        if x == zero or x in seen:
            continue
        seen.add(x)
        if not abs(y) < abs(x):
            return False, x
    return True, None
