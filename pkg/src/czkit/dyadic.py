"""Intervals, dyadic grids and the lagom (well-placed) interval families.

An interval is stored by center and length.  Dyadic intervals are indexed by
level ``j`` and position ``k`` and cover ``2**-j * [k, k+1]``.  All endpoint
arithmetic for dyadic intervals is exact in binary floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence


class WindowTooLarge(RuntimeError):
    """Raised when an enumeration would exceed the configured interval cap."""


DEFAULT_CAP = 200_000


@dataclass(frozen=True)
class Interval:
    center: float
    length: float

    def __post_init__(self):
        if not (self.length > 0 and math.isfinite(self.length)):
            raise ValueError(f"interval length must be positive and finite, got {self.length}")
        if not math.isfinite(self.center):
            raise ValueError("interval center must be finite")

    @classmethod
    def from_endpoints(cls, left: float, right: float) -> "Interval":
        if not right > left:
            raise ValueError(f"degenerate interval [{left}, {right}]")
        return cls(0.5 * (left + right), right - left)

    @property
    def left(self) -> float:
        return self.center - 0.5 * self.length

    @property
    def right(self) -> float:
        return self.center + 0.5 * self.length

    def scaled(self, factor: float) -> "Interval":
        """Same center, length multiplied by ``factor``."""
        return Interval(self.center, self.length * factor)

    def moved_to(self, center: float) -> "Interval":
        return Interval(center, self.length)

    def contains(self, other: "Interval") -> bool:
        return self.left <= other.left and other.right <= self.right


@dataclass(frozen=True, order=True)
class DyadicInterval:
    """The interval ``2**-j * [k, k+1]``."""

    j: int
    k: int

    @property
    def length(self) -> float:
        return math.ldexp(1.0, -self.j)

    @property
    def left(self) -> float:
        return math.ldexp(float(self.k), -self.j)

    @property
    def right(self) -> float:
        return math.ldexp(float(self.k + 1), -self.j)

    @property
    def center(self) -> float:
        return math.ldexp(2.0 * self.k + 1.0, -self.j - 1)

    @property
    def interval(self) -> Interval:
        return Interval(self.center, self.length)

    def parent(self) -> "DyadicInterval":
        return DyadicInterval(self.j - 1, self.k >> 1)

    def children(self) -> tuple["DyadicInterval", "DyadicInterval"]:
        return DyadicInterval(self.j + 1, 2 * self.k), DyadicInterval(self.j + 1, 2 * self.k + 1)

    def contains(self, other: "DyadicInterval") -> bool:
        """Dyadic inclusion ``other ⊂ self``."""
        if other.j < self.j:
            return False
        return (other.k >> (other.j - self.j)) == self.k

    def __str__(self) -> str:
        return f"D({self.j},{self.k})"


def as_interval(I) -> Interval:
    if isinstance(I, Interval):
        return I
    if isinstance(I, DyadicInterval):
        return I.interval
    raise TypeError(f"expected an interval, got {type(I).__name__}")


def ball(radius_length: float) -> Interval:
    """The centered interval ``[-λ/2, λ/2]`` of length ``λ``."""
    return Interval(0.0, float(radius_length))


def diam_union(intervals: Iterable) -> float:
    """Diameter of the convex hull of a finite family of intervals."""
    ivs = [as_interval(I) for I in intervals]
    if not ivs:
        raise ValueError("empty family")
    return max(I.right for I in ivs) - min(I.left for I in ivs)


def hull(I, J) -> Interval:
    """Smallest interval containing both."""
    I, J = as_interval(I), as_interval(J)
    return Interval.from_endpoints(min(I.left, J.left), max(I.right, J.right))


def rdist(I, J) -> float:
    """Relative distance: hull diameter over the larger length (always ≥ 1)."""
    I, J = as_interval(I), as_interval(J)
    return diam_union((I, J)) / max(I.length, J.length)


def ec(I, J) -> float:
    """Eccentricity: smaller length over larger length, in (0, 1]."""
    I, J = as_interval(I), as_interval(J)
    return min(I.length, J.length) / max(I.length, J.length)


def is_lagom(I, M: int) -> bool:
    """Membership in the family of intervals of moderate size near the origin.

    ``2**-M <= |I| <= 2**M`` and ``rdist(I, [-2**(M-1), 2**(M-1)]) <= M``.
    """
    if M < 1:
        raise ValueError("M must be a positive integer")
    iv = as_interval(I)
    big = math.ldexp(1.0, M)
    if not (1.0 / big <= iv.length <= big):
        return False
    return rdist(iv, ball(big)) <= M


@dataclass(frozen=True)
class LagomWindow:
    """A finite search window: level range plus spatial radius.

    A dyadic interval belongs to the window when its level lies in
    ``[j_min, j_max]`` and it meets the open set ``(-R, R)``.
    """

    M: int = 4
    R: float = 8.0
    j_min: int = -3
    j_max: int = 3

    def __post_init__(self):
        if self.j_min > self.j_max:
            raise ValueError("j_min must not exceed j_max")
        if not self.R > 0:
            raise ValueError("R must be positive")


def window_intervals(R: float, j_min: int, j_max: int, cap: int = DEFAULT_CAP) -> list[DyadicInterval]:
    """All dyadic intervals of level in [j_min, j_max] meeting (-R, R), sorted by (j, k)."""
    out: list[DyadicInterval] = []
    for j in range(j_min, j_max + 1):
        scale = math.ldexp(1.0, j)
        k_lo = math.floor(-R * scale)          # right endpoint (k+1)/2^j > -R
        k_hi = math.ceil(R * scale) - 1         # left endpoint k/2^j < R
        if len(out) + (k_hi - k_lo + 1) > cap:
            raise WindowTooLarge(f"window exceeds cap of {cap} intervals")
        out.extend(DyadicInterval(j, k) for k in range(k_lo, k_hi + 1))
    return out


def window_of(w: LagomWindow, cap: int = DEFAULT_CAP) -> list[DyadicInterval]:
    return window_intervals(w.R, w.j_min, w.j_max, cap)


def enum_lagom(w: LagomWindow, cap: int = DEFAULT_CAP) -> list[DyadicInterval]:
    """Lagom dyadic intervals inside the window, sorted by (j, k).

    Uses the a priori bounds |I| in [2^-M, 2^M] and |c(I)| <= (M-1) 2^M to
    restrict the search instead of scanning the whole window.
    """
    M = w.M
    reach = (M - 1) * math.ldexp(1.0, M) + math.ldexp(1.0, M)
    out: list[DyadicInterval] = []
    for j in range(max(w.j_min, -M), min(w.j_max, M) + 1):
        scale = math.ldexp(1.0, j)
        lo = max(math.floor(-w.R * scale), math.floor(-reach * scale) - 1)
        hi = min(math.ceil(w.R * scale) - 1, math.ceil(reach * scale) + 1)
        if hi - lo + 1 > cap:
            raise WindowTooLarge(f"window exceeds cap of {cap} intervals")
        for k in range(lo, hi + 1):
            I = DyadicInterval(j, k)
            if is_lagom(I, M):
                out.append(I)
                if len(out) > cap:
                    raise WindowTooLarge(f"window exceeds cap of {cap} intervals")
    return out


def smallest_dyadic_containing(points: Sequence[float], j_min: int, j_max: int = 40) -> DyadicInterval:
    """Shortest dyadic interval of level in [j_min, j_max] holding every point.

    Cells are half-open ``[k, k+1) 2**-j``, so a point on a dyadic boundary
    belongs to the cell on its right.
    """
    pts = [float(p) for p in points]
    if not pts:
        raise ValueError("no points given")
    exact = [Fraction(p) for p in pts]  # scaling tiny floats by 2**j could underflow and lose the sign
    for j in range(j_max, j_min - 1, -1):
        scale = Fraction(2) ** j
        ks = {math.floor(p * scale) for p in exact}
        if len(ks) == 1:
            return DyadicInterval(j, ks.pop())
    raise ValueError(f"no dyadic interval with level >= {j_min} contains all points")
