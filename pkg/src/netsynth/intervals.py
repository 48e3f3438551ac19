"""Intervals Y_k and the scale schedule that produces them."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (self.hi > self.lo):
            raise ValueError(f"degenerate interval [{self.lo}, {self.hi}]")

    @property
    def length(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def __contains__(self, y: float) -> bool:
        return self.lo <= y <= self.hi


@dataclass(frozen=True)
class ScaleSchedule:
    """Lengths lambda_k = base * ratio**(+-k) and a centring rule for Y_k.

    ``expanding`` grows the intervals (Y_{k-1} inside Y_k); ``contracting``
    shrinks them (Y_k inside Y_{k-1}). Both centre Y_k on the previous
    working crossing and then shift it just enough to stay nested.
    """

    direction: str = "expanding"
    base: float = 1.0
    ratio: float = 2.0

    def __post_init__(self):
        if self.direction not in ("expanding", "contracting"):
            raise ValueError(f"unknown schedule direction {self.direction!r}")
        if self.base <= 0 or self.ratio <= 1:
            raise ValueError("schedule needs base > 0 and ratio > 1")

    def length(self, k: int) -> float:
        sign = 1 if self.direction == "expanding" else -1
        return self.base * self.ratio ** (sign * k)

    def interval(self, k: int, centre: float, previous: Interval | None = None) -> Interval:
        half = 0.5 * self.length(k)
        lo, hi = centre - half, centre + half
        if previous is not None:
            if self.direction == "expanding":
                # previous must sit inside the new interval
                if previous.lo < lo:
                    lo, hi = previous.lo, previous.lo + 2 * half
                elif previous.hi > hi:
                    lo, hi = previous.hi - 2 * half, previous.hi
            else:
                if lo < previous.lo:
                    lo, hi = previous.lo, previous.lo + 2 * half
                elif hi > previous.hi:
                    lo, hi = previous.hi - 2 * half, previous.hi
        return Interval(lo, hi)
