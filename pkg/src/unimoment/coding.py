"""Shannon and Campbell code lengths, Kraft accounting and cumulants."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from .bounds import DEFAULT_TOL, EQUAL, Bracket, BoundReport
from .errors import AlphabetMismatchError, InputError, PreconditionError
from .measures import (
    LN2,
    Alphabet,
    Distribution,
    OrderParameter,
    log2_normalizer,
    renyi_entropy,
    sundaresan_divergence,
)

# |y - round(y)| below this counts as an exact integer when taking ceilings
INTEGER_GUARD = 1e-9


@dataclass(frozen=True)
class LengthFunction:
    alphabet: Alphabet
    lengths: tuple[int, ...]

    def __post_init__(self):
        lengths = tuple(int(v) for v in self.lengths)
        if len(lengths) != self.alphabet.size:
            raise PreconditionError("one length per symbol required")
        if min(lengths) < 1:
            raise PreconditionError("code lengths must be >= 1")
        object.__setattr__(self, "lengths", lengths)

    @property
    def kraft(self) -> Fraction:
        return kraft_sum(self)

    @property
    def uniquely_decodable(self) -> bool:
        return self.kraft <= 1

    def as_array(self) -> np.ndarray:
        return np.asarray(self.lengths, dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerows(zip(self.alphabet.symbols, self.lengths))
        return buf.getvalue()


def load_lengths(path) -> LengthFunction:
    """Read ``symbol,length`` CSV lines."""
    symbols, lengths = [], []
    for lineno, row in enumerate(csv.reader(io.StringIO(Path(path).read_text())), 1):
        if not row or row[0].lstrip().startswith("#"):
            continue
        if len(row) != 2:
            raise InputError(f"{path}:{lineno}: expected 'symbol,length'")
        try:
            lengths.append(int(row[1]))
        except ValueError:
            if not symbols:
                continue  # header
            raise InputError(f"{path}:{lineno}: length {row[1]!r} is not an integer") from None
        symbols.append(row[0].strip())
    return LengthFunction(Alphabet(tuple(symbols)), tuple(lengths))


def kraft_sum(lengths: LengthFunction) -> Fraction:
    """Exact ``sum 2^-L(x)`` as a dyadic rational."""
    top = max(lengths.lengths)
    return Fraction(sum(1 << (top - k) for k in lengths.lengths), 1 << top)


def log2_fraction(x: Fraction) -> float:
    return math.log2(x.numerator) - math.log2(x.denominator)


def guarded_ceil(y: np.ndarray) -> np.ndarray:
    """Ceiling that snaps values within INTEGER_GUARD of an integer onto it."""
    r = np.round(y)
    return np.where(np.abs(y - r) < INTEGER_GUARD, r, np.ceil(y))


def _lengths_from_targets(alphabet: Alphabet, target: np.ndarray) -> LengthFunction:
    # the guarded ceiling may undercut a target, and a target can itself be
    # rounded down onto an integer in floating point; if Kraft breaks, round
    # every near-integer target up instead
    lengths = LengthFunction(alphabet, tuple(np.maximum(1, guarded_ceil(target)).astype(int)))
    if lengths.kraft > 1:
        lengths = LengthFunction(
            alphabet, tuple(np.maximum(1, np.ceil(target + INTEGER_GUARD)).astype(int)))
    return lengths


def shannon_lengths(p: Distribution) -> LengthFunction:
    """``L(x) = ceil(log2 1/p(x))`` (at least 1)."""
    return _lengths_from_targets(p.alphabet, -p.log_probs / LN2)


def campbell_lengths(p: Distribution, order: OrderParameter) -> LengthFunction:
    """``L(x) = ceil(log2(Z_{P,alpha} / p(x)^alpha))``; Shannon lengths at the zero-limit."""
    if order.is_zero_limit:
        return shannon_lengths(p)
    target = log2_normalizer(p, order) - order.alpha * p.log_probs / LN2
    return _lengths_from_targets(p.alphabet, target)


@dataclass(frozen=True)
class CumulantReport:
    order: OrderParameter
    value: float


def _check_lengths(p: Distribution, lengths: LengthFunction) -> None:
    if p.alphabet != lengths.alphabet:
        raise AlphabetMismatchError("length function and distribution use different alphabets")


def cumulant(p: Distribution, lengths: LengthFunction, order: OrderParameter) -> CumulantReport:
    """Normalized cumulant ``(1/rho) log2 E[2^(rho L)]``, or ``E[L]`` at the zero-limit."""
    _check_lengths(p, lengths)
    L = lengths.as_array()
    if order.is_zero_limit:
        return CumulantReport(order, float(np.dot(p.probs, L)))
    rho = order.rho
    value = float(logsumexp(p.log_probs + rho * LN2 * L)) / (rho * LN2)
    return CumulantReport(order, value)


def induced_length_distribution(lengths: LengthFunction, order: OrderParameter) -> Distribution:
    """``Q_L(x)`` proportional to ``2^(-(1+rho) L(x))``."""
    return Distribution.from_log_probs(
        lengths.alphabet, -(1.0 + order.rho) * LN2 * lengths.as_array()
    )


@dataclass(frozen=True)
class RedundancyDecomposition:
    q_l: Distribution
    eta: Fraction
    identity_slack: float
    identity: BoundReport
    rc_bounds: Bracket
    divergence: float


def redundancy_decomposition(p: Distribution, lengths: LengthFunction, order: OrderParameter,
                             tol: float = DEFAULT_TOL,
                             minimum: float | None = None) -> RedundancyDecomposition:
    """Split the cumulant of ``lengths`` into entropy, divergence and Kraft slack.

    The identity ``cumulant = H_alpha + I_alpha(P, Q_L) - log2 eta`` is exact.
    The redundancy against the best Kraft code is bracketed using
    ``[H_alpha, H_alpha + 1]`` for the unknown minimum, unless ``minimum``
    (e.g. from exhaustive search) pins it.
    """
    _check_lengths(p, lengths)
    order.require_nonzero("redundancy_decomposition")
    eta = kraft_sum(lengths)
    if eta > 1:
        raise PreconditionError(f"Kraft sum {float(eta):.6g} > 1: lengths are not uniquely decodable")
    q_l = induced_length_distribution(lengths, order)
    value = cumulant(p, lengths, order).value
    h = renyi_entropy(p, order)
    div = sundaresan_divergence(p, q_l, order)
    log_eta = log2_fraction(eta)
    identity = BoundReport(value, h + div - log_eta, EQUAL, tol,
                           label="cumulant = H_a + I_a(P, Q_L) - log eta")
    if minimum is None:
        rc_lo, rc_hi = value - h - 1.0, value - h
    else:
        rc_lo = rc_hi = value - minimum
    rc = Bracket(rc_lo, rc_hi, div - log_eta - 1.0, div - log_eta, tol,
                 label="I_a(P, Q_L) - log eta - 1 <= R_c <= I_a(P, Q_L) - log eta")
    return RedundancyDecomposition(q_l, eta, identity.slack, identity, rc, div)
