"""Verdict records for inequality and identity checks."""

from __future__ import annotations

import math
from dataclasses import dataclass

DEFAULT_TOL = 1e-9

LOWER, UPPER, EQUAL = "lower", "upper", "equal"


@dataclass(frozen=True)
class BoundReport:
    """One inequality or identity evaluated numerically.

    ``direction`` says how ``lhs`` relates to ``rhs``: ``"lower"`` claims
    lhs >= rhs, ``"upper"`` claims lhs <= rhs and ``"equal"`` claims
    lhs == rhs.  ``tol`` is absolute, in ``units``.
    """

    lhs: float
    rhs: float
    direction: str
    tol: float = DEFAULT_TOL
    units: str = "bits"
    label: str = ""

    def __post_init__(self):
        if self.direction not in (LOWER, UPPER, EQUAL):
            raise ValueError(f"unknown direction {self.direction!r}")

    @property
    def slack(self) -> float:
        return self.lhs - self.rhs

    @property
    def passed(self) -> bool:
        s = self.slack
        if math.isnan(s):
            # inf - inf: both sides agree on divergence
            return self.lhs == self.rhs
        if self.direction == LOWER:
            return s >= -self.tol
        if self.direction == UPPER:
            return s <= self.tol
        return abs(s) <= self.tol

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def as_dict(self) -> dict:
        return {
            "label": self.label,
            "direction": self.direction,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "tolerance": self.tol,
            "units": self.units,
            "verdict": self.verdict,
        }


@dataclass(frozen=True)
class Bracket:
    """Claims that the interval [value_lo, value_hi] sits inside [lower, upper].

    A point value has ``value_lo == value_hi``.  The interval form carries
    quantities known only up to a bracket themselves.
    """

    value_lo: float
    value_hi: float
    lower: float
    upper: float
    tol: float = DEFAULT_TOL
    units: str = "bits"
    label: str = ""

    @classmethod
    def point(cls, value: float, lower: float, upper: float, **kw) -> "Bracket":
        return cls(value, value, lower, upper, **kw)

    @property
    def slack(self) -> float:
        return min(self.value_lo - self.lower, self.upper - self.value_hi)

    @property
    def passed(self) -> bool:
        return self.slack >= -self.tol

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def as_dict(self) -> dict:
        value = self.value_lo if self.value_lo == self.value_hi else [self.value_lo, self.value_hi]
        return {
            "label": self.label,
            "direction": "bracket",
            "lhs": value,
            "rhs": [self.lower, self.upper],
            "slack": self.slack,
            "tolerance": self.tol,
            "units": self.units,
            "verdict": self.verdict,
        }
