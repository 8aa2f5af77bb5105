"""Guessing with and without memory.

Arikan-style guessing asks "is X = x?" along a fixed order without
repetition; the order is a bijection ``G`` onto ``{1..M}``.  Memoryless
guessing draws i.i.d. guesses from a law ``p_hat`` until a hit and scores
the factorial moment ``V_rho = C(G + rho - 1, rho)``.
"""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.special import logsumexp

from .bounds import DEFAULT_TOL, EQUAL, LOWER, UPPER, Bracket, BoundReport
from .errors import AlphabetMismatchError, InputError, PreconditionError
from .measures import (
    LN2,
    Alphabet,
    Distribution,
    OrderParameter,
    check_same_alphabet,
    escort,
    renyi_entropy,
    sundaresan_divergence,
)


@dataclass(frozen=True)
class GuessingFunction:
    alphabet: Alphabet
    ranks: tuple[int, ...]

    def __post_init__(self):
        ranks = tuple(int(r) for r in self.ranks)
        if sorted(ranks) != list(range(1, self.alphabet.size + 1)):
            raise PreconditionError("guessing function must be a bijection onto {1..M}")
        object.__setattr__(self, "ranks", ranks)

    @property
    def size(self) -> int:
        return self.alphabet.size

    def as_array(self) -> np.ndarray:
        return np.asarray(self.ranks, dtype=float)

    def sequence(self) -> tuple[str, ...]:
        """Symbols in the order they are guessed."""
        out = [""] * self.size
        for sym, r in zip(self.alphabet.symbols, self.ranks):
            out[r - 1] = sym
        return tuple(out)


def descending_ranks(probs: np.ndarray) -> np.ndarray:
    """Rank 1 for the largest entry; ties go to the earlier alphabet position."""
    probs = np.asarray(probs)
    order = np.lexsort((np.arange(probs.size), -probs))
    ranks = np.empty(probs.size, dtype=np.int64)
    ranks[order] = np.arange(1, probs.size + 1)
    return ranks


def optimal_guessing_order(p: Distribution) -> GuessingFunction:
    return GuessingFunction(p.alphabet, tuple(descending_ranks(p.probs)))


@lru_cache(maxsize=64)
def harmonic(m: int) -> float:
    """``h_M = 1 + 1/2 + ... + 1/M`` by direct summation."""
    if m < 1:
        raise PreconditionError("harmonic number needs M >= 1")
    return float(np.sum(1.0 / np.arange(1, m + 1, dtype=float)))


def _check_guess(p: Distribution, g: GuessingFunction) -> None:
    if p.alphabet != g.alphabet:
        raise AlphabetMismatchError("guessing function and distribution use different alphabets")


def guessing_moment(p: Distribution, g: GuessingFunction, order: OrderParameter) -> float:
    """``(1/rho) log2 E[G(X)^rho]``."""
    _check_guess(p, g)
    order.require_nonzero("guessing_moment")
    rho = order.rho
    return float(logsumexp(p.log_probs + rho * np.log(g.as_array()))) / (rho * LN2)


def guessing_bounds(p: Distribution, g: GuessingFunction, order: OrderParameter,
                    tol: float = DEFAULT_TOL) -> list[BoundReport]:
    """Lower bound for any ``g``; the Renyi-entropy upper bound too when ``g`` is optimal."""
    value = guessing_moment(p, g, order)
    h = renyi_entropy(p, order)
    reports = [BoundReport(value, h - math.log2(harmonic(p.size)), LOWER, tol,
                           label="(1/rho) log E[G^rho] >= H_a - log h_M")]
    if g == optimal_guessing_order(p):
        reports.append(BoundReport(value, h, UPPER, tol,
                                   label="(1/rho) log E[G*^rho] <= H_a"))
    return reports


@dataclass(frozen=True)
class InducedDistribution:
    """An induced law Q with the exact decomposition it satisfies for a given P."""

    q: Distribution
    identity_slack: float
    identity: BoundReport
    redundancy: Bracket | None = None


def induced_guess_distribution(g: GuessingFunction, order: OrderParameter,
                               p: Distribution | None = None,
                               tol: float = DEFAULT_TOL) -> InducedDistribution:
    """``Q_G(x)`` proportional to ``G(x)^-(1+rho)``.

    With ``p`` supplied, checks
    ``(1/rho) log2 E[G^rho] = H_alpha(P) + I_alpha(P, Q_G) - log2 h_M``
    and brackets the redundancy against the optimal order for ``p``.
    """
    order.require_nonzero("induced_guess_distribution")
    q = Distribution.from_log_probs(g.alphabet, -(1.0 + order.rho) * np.log(g.as_array()))
    if p is None:
        p = Distribution.uniform(g.size, g.alphabet.symbols)
    _check_guess(p, g)
    value = guessing_moment(p, g, order)
    div = sundaresan_divergence(p, q, order)
    log_h = math.log2(harmonic(g.size))
    identity = BoundReport(value, renyi_entropy(p, order) + div - log_h, EQUAL, tol,
                           label="(1/rho) log E[G^rho] = H_a + I_a(P, Q_G) - log h_M")
    r_g = value - guessing_moment(p, optimal_guessing_order(p), order)
    redundancy = Bracket.point(r_g, div - log_h, div, tol=tol,
                               label="I_a(P, Q_G) - log h_M <= R_g <= I_a(P, Q_G)")
    return InducedDistribution(q, identity.slack, identity, redundancy)


def mismatched_guess_order(p: Distribution, q: Distribution, order: OrderParameter,
                           tol: float = DEFAULT_TOL) -> BoundReport:
    """Guess in decreasing ``q`` order; moment is at most ``H_alpha(P) + I_alpha(P, Q)``."""
    check_same_alphabet(p, q)
    g_q = optimal_guessing_order(q)
    value = guessing_moment(p, g_q, order)
    rhs = renyi_entropy(p, order) + sundaresan_divergence(p, q, order)
    return BoundReport(value, rhs, UPPER, tol, label="(1/rho) log E[G_Q^rho] <= H_a + I_a(P, Q)")


# -- memoryless guessing ----------------------------------------------------

@dataclass(frozen=True)
class MemorylessStrategy:
    p_hat: Distribution

    @classmethod
    def escort_of(cls, q: Distribution, order: OrderParameter) -> "MemorylessStrategy":
        """The optimal i.i.d. guess law for a source believed to be ``q``."""
        return cls(escort(q, order).escort)


def _factorial_order(rho) -> int:
    if isinstance(rho, bool):
        raise InputError("factorial moment order must be a positive integer")
    if isinstance(rho, float) and rho.is_integer():
        rho = int(rho)
    try:
        k = operator.index(rho)
    except TypeError:
        raise InputError(f"factorial moment order must be a positive integer, got {rho!r}") from None
    if k < 1:
        raise InputError(f"factorial moment order must be a positive integer, got {rho!r}")
    return k


def memoryless_factorial_moment(p: Distribution, strat: MemorylessStrategy, rho: int) -> float:
    """Closed form ``E[V_rho] = sum_x p(x) p_hat(x)^-rho``."""
    k = _factorial_order(rho)
    check_same_alphabet(p, strat.p_hat)
    return math.exp(float(logsumexp(p.log_probs - k * strat.p_hat.log_probs)))


def memoryless_moment_bits(p: Distribution, strat: MemorylessStrategy, rho: int) -> float:
    """``(1/rho) log2 E[V_rho]``, the normalized factorial moment."""
    k = _factorial_order(rho)
    check_same_alphabet(p, strat.p_hat)
    return float(logsumexp(p.log_probs - k * strat.p_hat.log_probs)) / (k * LN2)


def rising_factorial_moment(g: np.ndarray, rho: int) -> np.ndarray:
    """``V_rho(g) = (1/rho!) prod_{l<rho} (g + l)`` elementwise."""
    v = np.ones_like(g, dtype=float)
    for l in range(rho):
        v *= (g + l) / (l + 1)
    return v


class MonteCarloEstimate(NamedTuple):
    empirical_mean: float
    std_error: float
    trials: int


# trials per independent RNG stream; fixed so results do not depend on how
# streams are scheduled
STREAM_SIZE = 1 << 16


def _stream_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))


def simulate_memoryless(p: Distribution, strat: MemorylessStrategy, rho: int, trials: int,
                        seed: int) -> MonteCarloEstimate:
    """Sample X ~ p, then i.i.d. guesses from ``p_hat`` until one hits X.

    The hitting time given X = x is geometric with success ``p_hat(x)``,
    drawn directly.  Stream ``k`` covers trials ``[k*STREAM_SIZE, ...)`` and
    uses a Philox generator keyed by ``(seed, k)``; per-stream moments merge
    in index order.
    """
    k = _factorial_order(rho)
    check_same_alphabet(p, strat.p_hat)
    if trials < 1:
        raise InputError("trials must be >= 1")
    cdf = np.cumsum(p.probs)
    p_hat = strat.p_hat.probs
    count, mean, m2 = 0, 0.0, 0.0
    for index, start in enumerate(range(0, trials, STREAM_SIZE)):
        n = min(STREAM_SIZE, trials - start)
        rng = _stream_rng(seed, index)
        x = np.minimum(np.searchsorted(cdf, rng.random(n), side="right"), p.size - 1)
        g = rng.geometric(p_hat[x]).astype(float)
        v = rising_factorial_moment(g, k)
        s_mean = float(np.mean(v))
        s_m2 = float(np.sum((v - s_mean) ** 2))
        total = count + n
        delta = s_mean - mean
        mean += delta * n / total
        m2 += s_m2 + delta * delta * count * n / total
        count = total
    var = m2 / (count - 1) if count > 1 else 0.0
    return MonteCarloEstimate(mean, math.sqrt(var / count), count)
