"""L/R codes for orbits of interval maps that have no 2-cycles.

For a continuous self-map of an interval with no periodic orbit of period
two, every orbit converges to a fixed point, and it does so in a very rigid
way: each orbit term is a *wall*, meaning all later terms lie strictly on
one side of it.  Recording, for each term, whether the next term lies to the
left (``L``) or to the right (``R``) produces a word over ``{L, R}`` -- the
code of the orbit.  The code stops as soon as the orbit lands exactly on the
fixed point.  Remarkably, the code determines the complete order pattern of
the orbit: for positions ``m < n``, the ``m``-th label alone decides whether
the ``m``-th term is above, below, or equal to the ``n``-th term.

This module implements the codes themselves (finite words, eventually
periodic words stored canonically, and pull-based label streams), encoding
of numeric orbit samples, the two equivalent wall conditions, the induced
pairwise comparison, and the canonical representative orbit whose terms are
drawn from ``{1/n, -1/n, 0}``.

Everything here is pure and immutable; no function mutates its arguments.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, IntEnum
from fractions import Fraction
from itertools import pairwise
from typing import Iterable, Optional, Tuple, Union

__all__ = [
    "Label",
    "Cmp",
    "LRCode",
    "LabelStream",
    "OrbitSample",
    "OrderPattern",
    "CodeParseError",
    "StreamExhaustedError",
    "StreamEqualityError",
    "parse_code",
    "encode_orbit",
    "wall_check",
    "wall_check_distance",
    "cmp_from_code",
    "same_pattern",
    "canonical_representative",
    "DEFAULT_ENCODE_TOL",
]

#: Default relative equality tolerance for floating-point orbit samples.
#: Exact (int/Fraction) samples use 0 instead.
DEFAULT_ENCODE_TOL = 1e-12


class Label(Enum):
    """One movement label: L = next term is smaller, R = next term is larger."""

    L = "L"
    R = "R"

    def __str__(self) -> str:
        return self.value


class Cmp(IntEnum):
    """Three-way comparison outcome."""

    LT = -1
    EQ = 0
    GT = 1


class CodeParseError(ValueError):
    """Malformed code text.  ``offset`` is the first offending byte (0-based)."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte {offset})")
        self.offset = offset


class StreamExhaustedError(LookupError):
    """A stream code ended before the requested label position."""


class StreamEqualityError(ValueError):
    """Pattern equality involving stream codes is undecidable; we refuse it."""


def _as_label(x) -> Label:
    if isinstance(x, Label):
        return x
    if x in ("L", "R"):
        return Label(x)
    raise ValueError(f"not an L/R label: {x!r}")


class LabelStream:
    """Single-consumer, pull-based label supplier with memoization.

    Labels already pulled stay available for re-reading, so position-based
    access is stable even though the underlying iterator is consumed once.
    """

    def __init__(self, source: Iterable):
        self._it = iter(source)
        self._buf: list[Label] = []

    def label_at(self, i: int) -> Label:
        """1-based access; raises StreamExhaustedError past the end."""
        if i < 1:
            raise ValueError("label positions are 1-based")
        while len(self._buf) < i:
            try:
                self._buf.append(_as_label(next(self._it)))
            except StopIteration:
                raise StreamExhaustedError(
                    f"stream ended before label {i}"
                ) from None
        return self._buf[i - 1]


def _primitive_root(word: Tuple[Label, ...]) -> Tuple[Label, ...]:
    # Smallest u with word == u repeated; classic failure-function argument.
    n = len(word)
    if n <= 1:
        return word
    fail = [0] * n
    k = 0
    for i in range(1, n):
        while k and word[i] != word[k]:
            k = fail[k - 1]
        if word[i] == word[k]:
            k += 1
        fail[i] = k
    p = n - fail[-1]
    return word[:p] if n % p == 0 else word


@dataclass(frozen=True)
class LRCode:
    """A finite word, an eventually periodic word, or a label stream.

    Eventually periodic codes are stored in the unique normal form with a
    primitive (minimal-length) period and the shortest possible prefix: while
    the prefix ends with the same label as the period, the boundary shifts
    left and the period rotates.  Two eventually periodic codes therefore
    denote the same label sequence iff their fields compare equal.
    """

    prefix: Tuple[Label, ...] = ()
    period: Tuple[Label, ...] = ()
    stream: Optional[LabelStream] = None

    def __post_init__(self):
        if self.stream is not None:
            if self.prefix or self.period:
                raise ValueError("a stream code carries no prefix or period")
            return
        prefix = tuple(_as_label(x) for x in self.prefix)
        period = _primitive_root(tuple(_as_label(x) for x in self.period))
        while prefix and period and prefix[-1] == period[-1]:
            prefix = prefix[:-1]
            period = (period[-1],) + period[:-1]
        object.__setattr__(self, "prefix", prefix)
        object.__setattr__(self, "period", period)

    # -- structure ---------------------------------------------------------

    @property
    def kind(self) -> str:
        if self.stream is not None:
            return "stream"
        return "eventually-periodic" if self.period else "finite"

    @property
    def length(self) -> Optional[int]:
        """Number of labels for finite codes, None otherwise."""
        return len(self.prefix) if self.kind == "finite" else None

    def label_at(self, i: int) -> Optional[Label]:
        """1-based label access; None when a finite code has fewer labels."""
        if i < 1:
            raise ValueError("label positions are 1-based")
        if self.stream is not None:
            return self.stream.label_at(i)
        if i <= len(self.prefix):
            return self.prefix[i - 1]
        if self.period:
            return self.period[(i - len(self.prefix) - 1) % len(self.period)]
        return None

    def labels(self, n: int) -> Tuple[Label, ...]:
        """The first min(n, length) labels.

        For stream codes this pulls from the stream and propagates
        StreamExhaustedError if the stream is too short.
        """
        out = []
        for i in range(1, n + 1):
            lab = self.label_at(i)
            if lab is None:
                break
            out.append(lab)
        return tuple(out)

    # -- text form ---------------------------------------------------------

    def text(self) -> str:
        if self.stream is not None:
            raise TypeError("stream codes have no closed text form")
        body = "".join(str(a) for a in self.prefix)
        if self.period:
            body += "(" + "".join(str(a) for a in self.period) + ")*"
        return body

    def __str__(self) -> str:
        return self.text() if self.stream is None else "<stream code>"

    @classmethod
    def from_labels(cls, labels: Iterable, period: Iterable = ()) -> "LRCode":
        return cls(tuple(_as_label(x) for x in labels),
                   tuple(_as_label(x) for x in period))

    @classmethod
    def from_stream(cls, source: Iterable) -> "LRCode":
        return cls(stream=LabelStream(source))


def parse_code(text: str) -> LRCode:
    """Parse ``word`` or ``word(word)*`` over the letters L, R.

    Raises CodeParseError with the byte offset of the first bad character.
    The result is canonicalized, so e.g. ``(RLRL)*`` parses equal to
    ``(RL)*``.
    """
    i = 0
    n = len(text)
    while i < n and text[i] in "LR":
        i += 1
    prefix = tuple(Label(ch) for ch in text[:i])
    if i == n:
        return LRCode(prefix)
    if text[i] != "(":
        raise CodeParseError("expected 'L', 'R' or '('", i)
    j = i + 1
    while j < n and text[j] in "LR":
        j += 1
    if j == i + 1:
        raise CodeParseError("period must contain at least one label", j)
    if j >= n:
        raise CodeParseError("unterminated period (missing ')')", j)
    if text[j] != ")":
        raise CodeParseError("expected 'L', 'R' or ')'", j)
    if j + 1 >= n or text[j + 1] != "*":
        raise CodeParseError("expected '*' after ')'", j + 1)
    if j + 2 != n:
        raise CodeParseError("trailing characters after period", j + 2)
    period = tuple(Label(ch) for ch in text[i + 1:j])
    return LRCode(prefix, period)


# ---------------------------------------------------------------------------
# Orbit samples and encoding
# ---------------------------------------------------------------------------

RealLike = Union[int, float, Fraction]


@dataclass(frozen=True)
class OrbitSample:
    """A finite run of orbit terms, optionally with a limit hint.

    ``tol`` is the relative equality tolerance used by the encoder and the
    wall checks: two consecutive terms closer than ``tol * max(1, |earlier|)``
    count as equal.  ``tol=None`` selects 0 when every term is exact
    (int/Fraction) and 1e-12 otherwise.
    """

    terms: Tuple[RealLike, ...]
    limit_hint: Optional[RealLike] = None
    tol: Optional[float] = None

    def __post_init__(self):
        terms = tuple(self.terms)
        if not terms:
            raise ValueError("an orbit sample needs at least one term")
        object.__setattr__(self, "terms", terms)

    @property
    def effective_tol(self):
        if self.tol is not None:
            return self.tol
        if all(isinstance(t, (int, Fraction)) for t in self.terms):
            return 0
        return DEFAULT_ENCODE_TOL


def _cmp3(a, b, tol):
    """Sign of b - a, with a dead zone of tol * max(1, |a|)."""
    if tol:
        thresh = tol * max(1, abs(a))
        d = b - a
        if d > thresh:
            return 1
        if d < -thresh:
            return -1
        return 0
    if b > a:
        return 1
    if b < a:
        return -1
    return 0


def encode_orbit(sample: OrbitSample) -> Tuple[LRCode, bool]:
    """Label each transition of the sample; stop at the first repeat.

    Returns ``(code, terminated)`` where ``code`` is finite and
    ``terminated`` is True exactly when some transition compared equal
    (the orbit visibly reached its limit).
    """
    tol = sample.effective_tol
    labels = []
    for a, b in pairwise(sample.terms):
        s = _cmp3(a, b, tol)
        if s == 0:
            return LRCode(tuple(labels)), True
        labels.append(Label.R if s > 0 else Label.L)
    return LRCode(tuple(labels)), False


def wall_check(sample: OrbitSample) -> Tuple[bool, Optional[Tuple[int, int]]]:
    """Every term is a wall: all later terms lie on the side it moved to.

    Returns ``(True, None)`` or ``(False, (n, m))`` with the lexicographically
    first violating pair of 1-based positions: the transition out of position
    ``n`` disagrees with the position of term ``m``.
    """
    t = sample.terms
    tol = sample.effective_tol
    for n in range(len(t) - 1):
        d = _cmp3(t[n], t[n + 1], tol)
        for m in range(n + 1, len(t)):
            if _cmp3(t[n], t[m], tol) != d:
                return False, (n + 1, m + 1)
    return True, None


def wall_check_distance(sample: OrbitSample, p: RealLike) -> bool:
    """Distance form of the wall condition relative to the limit ``p``.

    True iff for every pair m > n with both terms strictly on the same side
    of ``p``, the later term is strictly nearer to ``p``.  For convergent
    distinct-term samples this agrees with wall_check.
    """
    t = sample.terms
    tol = sample.effective_tol

    def side(v):
        return _cmp3(p, v, tol)

    for n in range(len(t)):
        sn = side(t[n])
        if not sn:
            continue
        for m in range(n + 1, len(t)):
            if side(t[m]) == sn and not (abs(t[m] - p) < abs(t[n] - p)):
                return False
    return True


# ---------------------------------------------------------------------------
# Order pattern induced by a code
# ---------------------------------------------------------------------------

def cmp_from_code(code: LRCode, m: int, n: int) -> Cmp:
    """Compare orbit terms at 1-based positions m and n using only the code.

    For m < n: label L at position m means term m is the larger (GT), label R
    means it is the smaller (LT), and no label -- the finite code is shorter
    than m -- means both terms already sit on the fixed point (EQ).
    """
    if m == n:
        raise ValueError("positions must differ")
    if m > n:
        return Cmp(-cmp_from_code(code, n, m))
    lab = code.label_at(m)
    if lab is None:
        return Cmp.EQ
    return Cmp.GT if lab is Label.L else Cmp.LT


@dataclass(frozen=True)
class OrderPattern:
    """The full pairwise comparison oracle induced by a code."""

    code: LRCode

    def cmp(self, m: int, n: int) -> Cmp:
        return cmp_from_code(self.code, m, n)


def same_pattern(a: LRCode, b: LRCode) -> bool:
    """Whether two codes induce identical order patterns.

    Finite and eventually periodic codes compare by canonical form; any
    stream code makes the question undecidable and raises.
    """
    if a.stream is not None or b.stream is not None:
        raise StreamEqualityError("cannot decide equality for stream codes")
    return (a.prefix, a.period) == (b.prefix, b.period)


def canonical_representative(code: LRCode, length: int) -> Tuple[Fraction, ...]:
    """The first ``length`` terms of the model orbit realizing ``code``.

    Term k is 1/k for label L, -1/k for label R, and 0 once a finite code has
    run out of labels.  (So the all-alternating code ``(RL)*`` yields
    -1, 1/2, -1/3, 1/4, ...)
    """
    if length < 1:
        raise ValueError("length must be at least 1")
    out = []
    for k in range(1, length + 1):
        lab = code.label_at(k)
        if lab is None:
            out.append(Fraction(0))
        elif lab is Label.L:
            out.append(Fraction(1, k))
        else:
            out.append(Fraction(-1, k))
    return tuple(out)
