"""Interval self-maps: exact piecewise-linear interpolants and a small
analytic catalog built around x*sin(1/x)-type oscillation.

Two representations coexist:

* ``PiecewiseLinearMap`` stores rational breakpoints and evaluates by linear
  interpolation in exact ``Fraction`` arithmetic.  Everything downstream of
  it (roots, ranges, fixed points) is exact.
* ``AnalyticMap`` covers three families: ``r*x*sin(1/x)`` with ``0 < r <= 1``,
  ``(x**3/5)*sin(1/x)``, and ``a*x + b``.  These evaluate in double precision
  (or under mpmath when fed ``mpf`` values), and their infinitely many
  oscillations near 0 are handled through envelope bounds and closed forms,
  never by enumeration to 0.

All maps are checked to be self-maps of their closed domain at construction.
"""

from __future__ import annotations

import math
import re
from bisect import bisect_right
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import cached_property, lru_cache
from itertools import pairwise
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import mpmath
import numpy as np

from .codes import OrbitSample

__all__ = [
    "IntervalMap",
    "PiecewiseLinearMap",
    "AnalyticMap",
    "Family",
    "Direction",
    "MonotonePiece",
    "RangeResult",
    "TwoCycle",
    "DomainError",
    "MapSpecError",
    "pwl_map",
    "scaled_sin_map",
    "cubic_fifth_sin_map",
    "linear_map",
    "evaluate",
    "iterate",
    "monotone_pieces",
    "range_on",
    "fixed_points",
    "preimages_of",
    "two_cycle_scan",
    "lipschitz_estimate",
    "envelope_bound",
    "parse_map_spec",
    "serialize_map_spec",
]


class DomainError(ValueError):
    """An argument fell outside the map's domain."""


class MapSpecError(ValueError):
    """Malformed map spec text."""


class Family(Enum):
    SCALED_SIN = "scaled-sin"
    CUBIC_FIFTH_SIN = "cubic-fifth-sin"
    LINEAR = "linear"


class Direction(Enum):
    INCREASING = "increasing"
    DECREASING = "decreasing"
    CONSTANT = "constant"
    #: Residual piece of an oscillating map next to 0; the caller must treat
    #: it through envelope bounds instead of monotonicity.
    UNRESOLVED = "unresolved"


@dataclass(frozen=True)
class MonotonePiece:
    lo: object
    hi: object
    direction: Direction


class RangeResult(NamedTuple):
    inf: object
    sup: object
    arg_inf: object
    arg_sup: object


@dataclass(frozen=True)
class TwoCycle:
    p: float
    q: float


RealLike = Union[int, float, Fraction]

# hard stop for oscillation-branch enumeration; regions needing more are
# rejected with a pointer at scale_cutoff
_PIECE_ENUM_CAP = 100_000


def _to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"not a finite real: {x!r}")
        return Fraction(x)
    if isinstance(x, mpmath.mpf):
        return _mpf_to_fraction(x)
    raise TypeError(f"cannot interpret {x!r} as an exact rational")


def _mpf_to_fraction(x) -> Fraction:
    sign, man, exp, _ = x._mpf_
    if man == 0:
        if x == 0:
            return Fraction(0)
        raise ValueError(f"not a finite real: {x!r}")
    val = Fraction(man << exp) if exp >= 0 else Fraction(man, 1 << -exp)
    return -val if sign else val


# ---------------------------------------------------------------------------
# Map types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PiecewiseLinearMap:
    """Exact piecewise-linear self-map given by rational breakpoints.

    Breakpoints are normalized to strictly increasing x and extended
    constantly so that the first and last x coincide with the domain
    endpoints.  Evaluation between breakpoints is linear interpolation,
    done in exact rational arithmetic.
    """

    points: Tuple[Tuple[Fraction, Fraction], ...]
    lo: Fraction = Fraction(-1)
    hi: Fraction = Fraction(1)

    def __post_init__(self):
        lo = _to_fraction(self.lo)
        hi = _to_fraction(self.hi)
        if not lo < hi:
            raise ValueError("domain must satisfy lo < hi")
        pts = sorted((_to_fraction(x), _to_fraction(y)) for x, y in self.points)
        if not pts:
            raise ValueError("at least one breakpoint required")
        dedup: List[Tuple[Fraction, Fraction]] = []
        for x, y in pts:
            if dedup and dedup[-1][0] == x:
                if dedup[-1][1] != y:
                    raise ValueError(f"conflicting values at x={x}")
                continue
            dedup.append((x, y))
        if dedup[0][0] < lo or dedup[-1][0] > hi:
            raise DomainError("breakpoints exceed the domain")
        # constant extension out to the domain endpoints
        if dedup[0][0] > lo:
            dedup.insert(0, (lo, dedup[0][1]))
        if dedup[-1][0] < hi:
            dedup.append((hi, dedup[-1][1]))
        for _, y in dedup:
            if y < lo or y > hi:
                raise DomainError(f"value {y} escapes the domain; not a self-map")
        object.__setattr__(self, "points", tuple(dedup))
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @cached_property
    def _xs(self) -> List[Fraction]:
        return [x for x, _ in self.points]

    @cached_property
    def _float_arrays(self):
        xs = np.array([float(x) for x, _ in self.points])
        ys = np.array([float(y) for _, y in self.points])
        return xs, ys

    @property
    def domain(self) -> Tuple[Fraction, Fraction]:
        return (self.lo, self.hi)


@dataclass(frozen=True)
class AnalyticMap:
    """Member of the analytic catalog on a closed interval.

    scaled-sin:       f(x) = r*x*sin(1/x), f(0) = 0, 0 < r <= 1
    cubic-fifth-sin:  f(x) = (x**3/5)*sin(1/x), f(0) = 0
    linear:           f(x) = a*x + b

    The self-map property is certified at construction: for the oscillating
    families via the envelopes |f| <= r*|x| and |f| <= |x|**3/5, for linear
    by endpoint evaluation.
    """

    family: Family
    lo: float = -1.0
    hi: float = 1.0
    r: Optional[float] = None
    a: Optional[float] = None
    b: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        if not self.lo < self.hi:
            raise ValueError("domain must satisfy lo < hi")
        m = max(abs(self.lo), abs(self.hi))
        if self.family is Family.SCALED_SIN:
            if self.r is None or not 0 < self.r <= 1:
                raise ValueError("scaled-sin needs a parameter r in (0, 1]")
            object.__setattr__(self, "r", float(self.r))
            env = self.r * m
            if -env < self.lo or env > self.hi:
                raise DomainError("envelope r*|x| escapes the domain")
        elif self.family is Family.CUBIC_FIFTH_SIN:
            if self.r is not None or self.a is not None or self.b is not None:
                raise ValueError("cubic-fifth-sin takes no parameters")
            env = m ** 3 / 5.0
            if -env < self.lo or env > self.hi:
                raise DomainError("envelope |x|^3/5 escapes the domain")
        elif self.family is Family.LINEAR:
            if self.a is None or self.b is None:
                raise ValueError("linear needs parameters a and b")
            object.__setattr__(self, "a", float(self.a))
            object.__setattr__(self, "b", float(self.b))
            for e in (self.lo, self.hi):
                v = self.a * e + self.b
                if v < self.lo or v > self.hi:
                    raise DomainError(f"f({e}) = {v} escapes the domain")
        else:  # pragma: no cover
            raise ValueError(f"unknown family {self.family}")

    @property
    def domain(self) -> Tuple[float, float]:
        return (self.lo, self.hi)


IntervalMap = Union[PiecewiseLinearMap, AnalyticMap]


def pwl_map(points: Sequence[Tuple[RealLike, RealLike]],
            domain: Tuple[RealLike, RealLike] = (-1, 1)) -> PiecewiseLinearMap:
    lo, hi = domain
    return PiecewiseLinearMap(tuple(points), _to_fraction(lo), _to_fraction(hi))


def scaled_sin_map(r: float, domain: Tuple[float, float] = (-1.0, 1.0)) -> AnalyticMap:
    return AnalyticMap(Family.SCALED_SIN, domain[0], domain[1], r=r)


def cubic_fifth_sin_map(domain: Tuple[float, float] = (-1.0, 1.0)) -> AnalyticMap:
    return AnalyticMap(Family.CUBIC_FIFTH_SIN, domain[0], domain[1])


def linear_map(a: float, b: float = 0.0,
               domain: Tuple[float, float] = (-1.0, 1.0)) -> AnalyticMap:
    return AnalyticMap(Family.LINEAR, domain[0], domain[1], a=a, b=b)


# ---------------------------------------------------------------------------
# Evaluation and iteration
# ---------------------------------------------------------------------------

def _pwl_eval(m: PiecewiseLinearMap, xf: Fraction) -> Fraction:
    xs = m._xs
    i = bisect_right(xs, xf) - 1
    if i >= len(xs) - 1:
        i = len(xs) - 2
    (x0, y0), (x1, y1) = m.points[i], m.points[i + 1]
    if xf == x0:
        return y0
    if xf == x1:
        return y1
    return y0 + (y1 - y0) * (xf - x0) / (x1 - x0)


def evaluate(m: IntervalMap, x):
    """f(x).  Exact for piecewise-linear with exact input; the analytic
    catalog computes in double precision, or at the ambient mpmath precision
    when x is an ``mpf``.  Raises DomainError outside the domain."""
    if isinstance(m, PiecewiseLinearMap):
        xf = _to_fraction(x)
        if xf < m.lo or xf > m.hi:
            raise DomainError(f"{x!r} outside domain [{m.lo}, {m.hi}]")
        y = _pwl_eval(m, xf)
        if isinstance(x, float):
            return float(y)
        if isinstance(x, mpmath.mpf):
            return mpmath.mpf(y.numerator) / y.denominator
        return y

    if isinstance(x, mpmath.mpf):
        if x < m.lo or x > m.hi:
            raise DomainError(f"{x!r} outside domain [{m.lo}, {m.hi}]")
        if m.family is Family.LINEAR:
            return m.a * x + m.b
        if x == 0:
            return mpmath.mpf(0)
        s = mpmath.sin(1 / x)
        if m.family is Family.SCALED_SIN:
            return m.r * x * s
        return (x ** 3 / 5) * s

    xv = float(x)
    if xv < m.lo or xv > m.hi:
        raise DomainError(f"{x!r} outside domain [{m.lo}, {m.hi}]")
    if m.family is Family.LINEAR:
        return m.a * xv + m.b
    if xv == 0.0:
        return 0.0
    s = math.sin(1.0 / xv)
    if m.family is Family.SCALED_SIN:
        return m.r * xv * s
    return (xv * xv * xv / 5.0) * s


def iterate(m: IntervalMap, x0, n: int) -> OrbitSample:
    """The orbit (x0, f(x0), ..., f^n(x0)) as an OrbitSample of n+1 terms."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    lo, hi = m.domain
    if isinstance(m, PiecewiseLinearMap):
        xf = _to_fraction(x0)
        if xf < lo or xf > hi:
            raise DomainError(f"start {x0!r} outside domain")
    elif not (lo <= float(x0) <= hi):
        raise DomainError(f"start {x0!r} outside domain")
    terms = [x0]
    x = x0
    for k in range(1, n + 1):
        try:
            x = evaluate(m, x)
        except DomainError as e:
            raise DomainError(f"orbit left the domain at step {k}: {e}") from e
        terms.append(x)
    return OrbitSample(tuple(terms))


# ---------------------------------------------------------------------------
# Oscillating-family structure helpers
# ---------------------------------------------------------------------------

def _osc_c(m: AnalyticMap) -> int:
    # stationary points of both sin families solve t*cos(t) = c*sin(t),
    # t = 1/x, with c = 1 (scaled-sin) or c = 3 (cubic-fifth-sin)
    return 1 if m.family is Family.SCALED_SIN else 3


@lru_cache(maxsize=None)
def _crit_t(c: int, k: int) -> float:
    """The unique root of t*cos(t) = c*sin(t) in (k*pi, k*pi + pi/2), k >= 1.

    Bisection to 1e-15 relative; the bracket signs are (-1)^k * k*pi at the
    left end and -(-1)^k * c at the right end, so a sign change is certain.
    """
    if k < 1:
        raise ValueError("branch index must be >= 1")
    lo = k * math.pi
    hi = lo + math.pi / 2

    def h(t: float) -> float:
        return t * math.cos(t) - c * math.sin(t)

    flo = h(lo)
    for _ in range(200):
        if hi - lo <= 1e-15 * lo:
            break
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        fm = h(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _sin_derivative(m: AnalyticMap, x: float) -> float:
    t = 1.0 / x
    if m.family is Family.SCALED_SIN:
        return m.r * (math.sin(t) - t * math.cos(t))
    return (3.0 * x * x * math.sin(t) - x * math.cos(t)) / 5.0


def _is_sin_family(m: IntervalMap) -> bool:
    return isinstance(m, AnalyticMap) and m.family in (
        Family.SCALED_SIN, Family.CUBIC_FIFTH_SIN)


def envelope_bound(m: IntervalMap, radius: float) -> Optional[float]:
    """Upper bound for |f(x)| over |x| <= radius (clipped to the domain).

    Closed form for the analytic families, exact range computation for
    piecewise-linear maps.  Used to bound behavior near 0 where oscillating
    maps cannot be enumerated.
    """
    radius = float(radius)
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    if isinstance(m, AnalyticMap):
        if m.family is Family.SCALED_SIN:
            return m.r * radius
        if m.family is Family.CUBIC_FIFTH_SIN:
            return radius ** 3 / 5.0
        return abs(m.a) * radius + abs(m.b)
    lo = max(m.lo, _to_fraction(-radius))
    hi = min(m.hi, _to_fraction(radius))
    if lo > hi:
        return None
    rng = range_on(m, (lo, hi))
    return float(max(abs(rng.inf), abs(rng.sup)))


# ---------------------------------------------------------------------------
# Monotone pieces
# ---------------------------------------------------------------------------

def _as_region(region) -> Tuple:
    lo, hi = region
    if not lo <= hi:
        raise ValueError(f"bad region {region!r}")
    return lo, hi


def _check_subregion(m: IntervalMap, lo, hi):
    dlo, dhi = m.domain
    if isinstance(m, PiecewiseLinearMap):
        if _to_fraction(lo) < dlo or _to_fraction(hi) > dhi:
            raise DomainError(f"region [{lo}, {hi}] exceeds domain [{dlo}, {dhi}]")
    elif float(lo) < dlo or float(hi) > dhi:
        raise DomainError(f"region [{lo}, {hi}] exceeds domain [{dlo}, {dhi}]")


def _pwl_pieces(m: PiecewiseLinearMap, lo: Fraction, hi: Fraction) -> List[MonotonePiece]:
    cuts = [lo] + [x for x in m._xs if lo < x < hi] + [hi]
    classes = []
    for u, v in pairwise(cuts):
        i = bisect_right(m._xs, u) - 1
        if i >= len(m._xs) - 1:
            i = len(m._xs) - 2
        (x0, y0), (x1, y1) = m.points[i], m.points[i + 1]
        slope = (y1 - y0) / (x1 - x0)
        d = (Direction.CONSTANT if slope == 0
             else Direction.INCREASING if slope > 0 else Direction.DECREASING)
        classes.append((u, v, d))
    merged: List[MonotonePiece] = []
    for u, v, d in classes:
        if merged and merged[-1].direction is d:
            merged[-1] = MonotonePiece(merged[-1].lo, v, d)
        else:
            merged.append(MonotonePiece(u, v, d))
    return merged


def _sin_pieces_positive(m: AnalyticMap, a: float, b: float) -> List[MonotonePiece]:
    """Pieces of an oscillating family on [a, b] with 0 < a < b."""
    c = _osc_c(m)
    t_lo, t_hi = 1.0 / b, 1.0 / a
    if (t_hi - t_lo) / math.pi > _PIECE_ENUM_CAP:
        raise ValueError(
            f"region [{a}, {b}] spans too many oscillation branches; "
            "keep dist(region, 0) above scale_cutoff or shrink the region")
    k_first = max(1, int(t_lo / math.pi) - 1)
    k_last = int(t_hi / math.pi) + 1
    crits = []
    for k in range(k_first, k_last + 1):
        t = _crit_t(c, k)
        if t_lo < t < t_hi:
            crits.append(1.0 / t)
    crits.sort()
    bounds = [a] + crits + [b]
    out = []
    for u, v in pairwise(bounds):
        if u == v:
            continue
        d = _sin_derivative(m, math.sqrt(u * v))  # geometric mean: branch interior
        out.append(MonotonePiece(u, v, Direction.INCREASING if d > 0
                                 else Direction.DECREASING))
    return out


def _mirror_pieces(pieces: List[MonotonePiece]) -> List[MonotonePiece]:
    # the families are even, so x -> -x flips direction
    flip = {Direction.INCREASING: Direction.DECREASING,
            Direction.DECREASING: Direction.INCREASING,
            Direction.CONSTANT: Direction.CONSTANT,
            Direction.UNRESOLVED: Direction.UNRESOLVED}
    return [MonotonePiece(-p.hi, -p.lo, flip[p.direction]) for p in reversed(pieces)]


def monotone_pieces(m: IntervalMap, region, scale_cutoff: float = 1e-3) -> List[MonotonePiece]:
    """Split a region into maximal intervals of strict monotonicity.

    Piecewise-linear maps split at breakpoints and merge runs of equal
    direction.  The oscillating families split at their stationary points
    1/t with t*cos(t) = c*sin(t); a region with endpoint 0 gets a residual
    piece [0, scale_cutoff] flagged ``UNRESOLVED`` because the branches
    accumulate there.  A region strictly containing 0 is rejected.
    """
    if scale_cutoff <= 0:
        raise ValueError("scale_cutoff must be positive")
    lo, hi = _as_region(region)
    _check_subregion(m, lo, hi)
    if isinstance(m, PiecewiseLinearMap):
        return _pwl_pieces(m, _to_fraction(lo), _to_fraction(hi))
    if m.family is Family.LINEAR:
        d = (Direction.CONSTANT if m.a == 0
             else Direction.INCREASING if m.a > 0 else Direction.DECREASING)
        return [MonotonePiece(float(lo), float(hi), d)]

    a, b = float(lo), float(hi)
    if a < 0 < b:
        raise ValueError(
            "region strictly contains 0; split it at 0 first (the oscillation "
            "branches accumulate there)")
    if a >= 0:
        if a == 0:
            if b <= scale_cutoff:
                return [MonotonePiece(0.0, b, Direction.UNRESOLVED)]
            return ([MonotonePiece(0.0, scale_cutoff, Direction.UNRESOLVED)]
                    + _sin_pieces_positive(m, scale_cutoff, b))
        return _sin_pieces_positive(m, a, b)
    # mirrored side
    if b == 0:
        if -a <= scale_cutoff:
            return [MonotonePiece(a, 0.0, Direction.UNRESOLVED)]
        mirrored = _sin_pieces_positive(m, scale_cutoff, -a)
        return _mirror_pieces(mirrored) + [
            MonotonePiece(-scale_cutoff, 0.0, Direction.UNRESOLVED)]
    return _mirror_pieces(_sin_pieces_positive(m, -b, -a))


# ---------------------------------------------------------------------------
# Range
# ---------------------------------------------------------------------------

def _sin_range_candidates_positive(m: AnalyticMap, b: float) -> List[Tuple[float, float]]:
    """Extremum candidates of an oscillating family over (0, b], b > 0.

    The peak magnitudes strictly decrease branch by branch, so only the two
    outermost peaks inside the region, the region endpoint, and a zero
    matter; everything deeper is dominated.
    """
    c = _osc_c(m)
    k_hi = max(1, math.ceil(1.0 / (math.pi * b)))
    k1 = None
    for k in (k_hi - 1, k_hi, k_hi + 1):
        if k >= 1 and 1.0 / _crit_t(c, k) <= b:
            k1 = k
            break
    if k1 is None:  # pragma: no cover - k_hi+1 always qualifies
        k1 = k_hi + 2
    cands = [(b, float(evaluate(m, b)))]
    for k in (k1, k1 + 1):
        xk = 1.0 / _crit_t(c, k)
        cands.append((xk, float(evaluate(m, xk))))
    z = 1.0 / ((k1 + 1) * math.pi)  # a genuine zero inside (0, b]
    cands.append((z, float(evaluate(m, z))))
    return cands


def range_on(m: IntervalMap, region, tol: float = 1e-12) -> RangeResult:
    """inf and sup of f over a region, with witness arguments.

    Exact for piecewise-linear maps.  For the oscillating families a region
    touching 0 is resolved through the peak structure (peak magnitudes
    decrease monotonically, so the extrema are attained among the outermost
    peaks, the endpoints, and 0); other regions go through monotone pieces.
    """
    lo, hi = _as_region(region)
    _check_subregion(m, lo, hi)

    if isinstance(m, PiecewiseLinearMap):
        flo, fhi = _to_fraction(lo), _to_fraction(hi)
        xs = [flo] + [x for x in m._xs if flo < x < fhi] + ([fhi] if fhi != flo else [])
        cands = [(x, _pwl_eval(m, x)) for x in xs]
    elif m.family is Family.LINEAR:
        xs = [float(lo)] + ([float(hi)] if hi != lo else [])
        cands = [(x, evaluate(m, x)) for x in xs]
    else:
        a, b = float(lo), float(hi)
        if a <= 0.0 <= b:
            cands = [(0.0, 0.0)]
            if b > 0:
                cands += _sin_range_candidates_positive(m, b)
            if a < 0:
                cands += [(-x, v) for x, v in _sin_range_candidates_positive(m, -a)]
        else:
            pieces = monotone_pieces(m, (a, b),
                                     scale_cutoff=min(1e-3, min(abs(a), abs(b)) / 2))
            xs = sorted({p.lo for p in pieces} | {p.hi for p in pieces})
            cands = [(x, float(evaluate(m, x))) for x in xs]

    cands.sort(key=lambda p: (p[0] if not isinstance(p[0], Fraction) else p[0]))
    inf_x, inf_v = cands[0]
    sup_x, sup_v = cands[0]
    for x, v in cands[1:]:
        if v < inf_v:
            inf_x, inf_v = x, v
        if v > sup_v:
            sup_x, sup_v = x, v
    return RangeResult(inf_v, sup_v, inf_x, sup_x)


# ---------------------------------------------------------------------------
# Fixed points and preimages
# ---------------------------------------------------------------------------

def fixed_points(m: IntervalMap, tol: float = 1e-12) -> List:
    """All isolated solutions of f(x) = x, exact for piecewise-linear maps.

    For the oscillating families the nonzero fixed points are ruled out in
    closed form where possible (|f| < |x| off 0 when r < 1, and always for
    cubic-fifth-sin on domains inside [-sqrt(5), sqrt(5)]); the r = 1 case
    adds the tangential points 1/t with sin(t) = 1 down to scale 1e-3.
    Tangential fixed points of general maps are not reliably found.
    """
    if isinstance(m, PiecewiseLinearMap):
        roots: List[Fraction] = []
        for (x0, y0), (x1, y1) in pairwise(m.points):
            s = (y1 - y0) / (x1 - x0)
            if s == 1:
                if y0 == x0:
                    # identity segment: a continuum; report its endpoints
                    roots += [x0, x1]
                continue
            x_star = (y0 - s * x0) / (1 - s)
            if x0 <= x_star <= x1:
                roots.append(x_star)
        out: List[Fraction] = []
        for x in sorted(roots):
            if not out or out[-1] != x:
                out.append(x)
        return out

    if m.family is Family.LINEAR:
        if m.a == 1.0:
            if m.b == 0.0:
                raise ValueError("identity map: every point is fixed")
            return []
        x_star = m.b / (1.0 - m.a)
        return [x_star] if m.lo <= x_star <= m.hi else []

    out = [0.0] if m.lo <= 0.0 <= m.hi else []
    if m.family is Family.CUBIC_FIFTH_SIN:
        if max(abs(m.lo), abs(m.hi)) <= math.sqrt(5.0):
            return out
    elif m.r < 1.0:
        return out
    else:
        # r = 1: sin(1/x) = 1 gives tangential fixed points accumulating at 0
        k = 0
        while True:
            x = 1.0 / (math.pi / 2 + 2 * k * math.pi)
            if x < 1e-3:
                break
            if m.lo <= x <= m.hi:
                out.append(x)
            k += 1
        k = 1
        while True:
            x = 1.0 / (math.pi / 2 - 2 * k * math.pi)
            if -x < 1e-3:
                break
            if m.lo <= x <= m.hi:
                out.append(x)
            k += 1
        return sorted(out)
    # generic sign-change scan away from 0 (only reachable for exotic domains)
    sides = [(max(m.lo, 1e-3), m.hi), (m.lo, min(m.hi, -1e-3))]
    for a, b in sides:
        if a >= b:
            continue
        xs = np.linspace(a, b, 4096)
        g = _eval_array(m, xs) - xs
        sgn = np.sign(g)
        for i in np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]:
            out.append(_bisect_root(lambda x: evaluate(m, x) - x,
                                    float(xs[i]), float(xs[i + 1]), tol))
    return sorted(set(out))


def _bisect_root(g, lo: float, hi: float, tol: float) -> float:
    glo = g(lo)
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        gm = g(mid)
        if gm == 0.0:
            return mid
        if (gm > 0) == (glo > 0):
            lo, glo = mid, gm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def preimages_of(m: IntervalMap, y, region, tol: float = 1e-12) -> List:
    """All x in the region with f(x) = y, sorted; exact for piecewise-linear.

    A constant segment sitting exactly at y contributes its endpoints.  For
    the oscillating families, y = 0 is answered in closed form (x = 1/(k*pi));
    a region touching 0 is truncated at scale 1e-3, where solutions start
    accumulating.  Other y go through monotone pieces and bisection.
    """
    lo, hi = _as_region(region)
    _check_subregion(m, lo, hi)

    if isinstance(m, PiecewiseLinearMap):
        yf, rlo, rhi = _to_fraction(y), _to_fraction(lo), _to_fraction(hi)
        found: List[Fraction] = []
        for (x0, y0), (x1, y1) in pairwise(m.points):
            if x1 < rlo or x0 > rhi:
                continue
            s = (y1 - y0) / (x1 - x0)
            if s == 0:
                if y0 == yf:
                    found += [max(x0, rlo), min(x1, rhi)]
                continue
            x_star = x0 + (yf - y0) / s
            if x0 <= x_star <= x1 and rlo <= x_star <= rhi:
                found.append(x_star)
        out: List[Fraction] = []
        for x in sorted(found):
            if not out or out[-1] != x:
                out.append(x)
        return out

    if m.family is Family.LINEAR:
        if m.a == 0.0:
            return [float(lo), float(hi)] if m.b == y else []
        x_star = (float(y) - m.b) / m.a
        return [x_star] if lo <= x_star <= hi else []

    a, b = float(lo), float(hi)
    if float(y) == 0.0:
        out = []
        if a <= 0.0 <= b:
            out.append(0.0)
        for sgn, alo, ahi in ((1.0, max(a, 0.0), b), (-1.0, max(-b, 0.0), -a)):
            if ahi <= 0 or alo >= ahi:
                continue
            floor = max(alo, 1e-3) if alo == 0.0 else alo
            if alo == 0.0 and ahi <= floor:
                continue
            k_min = max(1, math.ceil(1.0 / (math.pi * ahi)))
            k_max = math.floor(1.0 / (math.pi * floor))
            if k_max - k_min > _PIECE_ENUM_CAP:
                raise ValueError("too many zeros in region; shrink it")
            for k in range(k_min, k_max + 1):
                x = 1.0 / (k * math.pi)
                if floor <= x <= ahi:
                    out.append(sgn * x)
        return sorted(out)

    pieces = monotone_pieces(m, (a, b))
    out = []
    yv = float(y)
    for p in pieces:
        if p.direction is Direction.UNRESOLVED:
            cap = envelope_bound(m, max(abs(p.lo), abs(p.hi)))
            if cap is not None and abs(yv) > cap + tol:
                continue
            raise ValueError(
                f"cannot resolve preimages of {y} inside the unresolved piece "
                f"[{p.lo}, {p.hi}]; pass a region bounded away from 0")
        ulo, uhi = float(evaluate(m, p.lo)), float(evaluate(m, p.hi))
        if min(ulo, uhi) - tol <= yv <= max(ulo, uhi) + tol:
            if ulo == yv:
                out.append(float(p.lo))
            elif uhi == yv:
                out.append(float(p.hi))
            else:
                if (ulo < yv < uhi) or (uhi < yv < ulo):
                    out.append(_bisect_root(lambda x: evaluate(m, x) - yv,
                                            float(p.lo), float(p.hi), tol * 1e-3))
    out.sort()
    dedup = []
    for x in out:
        if not dedup or abs(x - dedup[-1]) > 2 * tol:
            dedup.append(x)
    return dedup


# ---------------------------------------------------------------------------
# Two-cycles and Lipschitz
# ---------------------------------------------------------------------------

def _eval_array(m: IntervalMap, xs: np.ndarray) -> np.ndarray:
    if isinstance(m, PiecewiseLinearMap):
        bx, by = m._float_arrays
        return np.interp(xs, bx, by)
    if m.family is Family.LINEAR:
        return m.a * xs + m.b
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.sin(1.0 / xs)
    if m.family is Family.SCALED_SIN:
        vals = m.r * xs * s
    else:
        vals = (xs ** 3 / 5.0) * s
    return np.where(xs == 0.0, 0.0, vals)


def two_cycle_scan(m: IntervalMap, grid: int = 10_000, tol: float = 1e-9) -> List[TwoCycle]:
    """Scan f(f(x)) = x for 2-cycles on a uniform grid, bisecting each
    bracket and discarding fixed points.  An empty result means no 2-cycle
    was found at this resolution (tangential cycles can be missed)."""
    if grid < 2:
        raise ValueError("grid must be >= 2")
    lo, hi = (float(m.domain[0]), float(m.domain[1]))
    xs = np.linspace(lo, hi, grid)
    f1 = np.clip(_eval_array(m, xs), lo, hi)
    h = _eval_array(m, f1) - xs

    cand: List[float] = [float(xs[i]) for i in np.nonzero(h == 0.0)[0]]
    sgn = np.sign(h)
    width = max(tol * 1e-3, 5e-16 * max(abs(lo), abs(hi), 1.0))

    def h_scalar(x: float) -> float:
        fx = float(evaluate(m, x))
        fx = min(max(fx, lo), hi)
        return float(evaluate(m, fx)) - x

    for i in np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]:
        cand.append(_bisect_root(h_scalar, float(xs[i]), float(xs[i + 1]), width))

    fixed_thresh = max(10 * tol, 1e-9)
    cycles: List[TwoCycle] = []
    for x in sorted(cand):
        fx = float(evaluate(m, x))
        if abs(fx - x) <= fixed_thresh * (1.0 + abs(x)):
            continue  # fixed point, not a cycle
        back = float(evaluate(m, min(max(fx, lo), hi)))
        if abs(back - x) > tol * (1.0 + abs(x)):
            continue  # spurious bracket
        p, q = (x, fx) if x <= fx else (fx, x)
        if any(abs(c.p - p) <= 10 * tol and abs(c.q - q) <= 10 * tol for c in cycles):
            continue
        cycles.append(TwoCycle(p, q))
    cycles.sort(key=lambda c: c.p)
    return cycles


def lipschitz_estimate(m: IntervalMap, grid: int = 200_001):
    """Estimate of sup |f'|.

    Exact (max segment slope) for piecewise-linear maps and |a| for linear.
    cubic-fifth-sin returns the certified closed-form envelope
    max (3x^2 + |x|)/5 when it dominates the sampled slopes.  scaled-sin has
    unbounded derivative near 0 and returns inf.
    """
    if isinstance(m, PiecewiseLinearMap):
        return max(abs((y1 - y0) / (x1 - x0))
                   for (x0, y0), (x1, y1) in pairwise(m.points))
    if m.family is Family.LINEAR:
        return abs(m.a)
    if m.family is Family.SCALED_SIN:
        return math.inf
    if grid < 2:
        raise ValueError("grid must be >= 2")
    xs = np.linspace(m.lo, m.hi, grid)
    xs = xs[np.abs(xs) >= 1e-6]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = 1.0 / xs
        deriv = (3.0 * xs * xs * np.sin(t) - xs * np.cos(t)) / 5.0
    sampled = float(np.max(np.abs(deriv)))
    mm = max(abs(m.lo), abs(m.hi))
    env = (3.0 * mm * mm + mm) / 5.0
    return max(sampled, env)


# ---------------------------------------------------------------------------
# Map spec text format
# ---------------------------------------------------------------------------

_DOMAIN_RE = r"domain=\[([^,\]]+),([^\]]+)\]"
_SCALED_RE = re.compile(r"^builtin\s+scaled-sin\s+r=(\S+)\s+" + _DOMAIN_RE + r"$")
_CUBIC_RE = re.compile(r"^builtin\s+cubic-fifth-sin\s+" + _DOMAIN_RE + r"$")
_LINEAR_RE = re.compile(r"^builtin\s+linear\s+a=(\S+)\s+b=(\S+)\s+" + _DOMAIN_RE + r"$")
_PWL_RE = re.compile(r"^pwl\s+" + _DOMAIN_RE + r"\s+points=(.+)$")
_POINT_RE = re.compile(r"\(([^:()]+):([^:()]+)\)")


def _parse_rational(text: str) -> Fraction:
    text = text.strip()
    try:
        if "/" in text:
            num, den = text.split("/")
            return Fraction(int(num), int(den))
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as e:
        raise MapSpecError(f"bad rational {text!r}") from e


def _parse_decimal(text: str) -> float:
    try:
        return float(text)
    except ValueError as e:
        raise MapSpecError(f"bad number {text!r}") from e


def parse_map_spec(text: str) -> IntervalMap:
    """Parse the one-line map spec format.

    ``builtin scaled-sin r=<decimal> domain=[<lo>,<hi>]``
    ``builtin cubic-fifth-sin domain=[<lo>,<hi>]``
    ``builtin linear a=<decimal> b=<decimal> domain=[<lo>,<hi>]``
    ``pwl domain=[<lo>,<hi>] points=(<x>:<y>),(<x>:<y>),...``

    pwl coordinates accept rationals ``p/q`` or decimal literals (parsed
    exactly in base 10).
    """
    s = text.strip()
    if mt := _SCALED_RE.match(s):
        r, lo, hi = mt.groups()
        try:
            return scaled_sin_map(_parse_decimal(r),
                                  (_parse_decimal(lo), _parse_decimal(hi)))
        except (ValueError, DomainError) as e:
            raise MapSpecError(str(e)) from e
    if mt := _CUBIC_RE.match(s):
        lo, hi = mt.groups()
        try:
            return cubic_fifth_sin_map((_parse_decimal(lo), _parse_decimal(hi)))
        except (ValueError, DomainError) as e:
            raise MapSpecError(str(e)) from e
    if mt := _LINEAR_RE.match(s):
        a, b, lo, hi = mt.groups()
        try:
            return linear_map(_parse_decimal(a), _parse_decimal(b),
                              (_parse_decimal(lo), _parse_decimal(hi)))
        except (ValueError, DomainError) as e:
            raise MapSpecError(str(e)) from e
    if mt := _PWL_RE.match(s):
        lo, hi, pts_text = mt.groups()
        pts = _POINT_RE.findall(pts_text)
        leftover = _POINT_RE.sub("", pts_text).replace(",", "").strip()
        if not pts or leftover:
            raise MapSpecError(f"bad points list {pts_text!r}")
        try:
            return pwl_map([(_parse_rational(x), _parse_rational(y)) for x, y in pts],
                           (_parse_rational(lo), _parse_rational(hi)))
        except (ValueError, DomainError) as e:
            raise MapSpecError(str(e)) from e
    raise MapSpecError(f"unrecognized map spec: {text!r}")


def _fmt_rational(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _fmt_real(x: float) -> str:
    return "%.17g" % float(x)


def serialize_map_spec(m: IntervalMap) -> str:
    """Inverse of parse_map_spec (canonical form; round-trips exactly)."""
    if isinstance(m, PiecewiseLinearMap):
        pts = ",".join(f"({_fmt_rational(x)}:{_fmt_rational(y)})" for x, y in m.points)
        return f"pwl domain=[{_fmt_rational(m.lo)},{_fmt_rational(m.hi)}] points={pts}"
    if m.family is Family.SCALED_SIN:
        return (f"builtin scaled-sin r={_fmt_real(m.r)} "
                f"domain=[{_fmt_real(m.lo)},{_fmt_real(m.hi)}]")
    if m.family is Family.CUBIC_FIFTH_SIN:
        return f"builtin cubic-fifth-sin domain=[{_fmt_real(m.lo)},{_fmt_real(m.hi)}]"
    return (f"builtin linear a={_fmt_real(m.a)} b={_fmt_real(m.b)} "
            f"domain=[{_fmt_real(m.lo)},{_fmt_real(m.hi)}]")
