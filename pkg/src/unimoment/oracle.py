"""Brute-force ground truth used by the tests and by ``verify --exhaustive``.

Everything here recomputes its quantity from scratch (direct sums over all
candidates) instead of calling the closed forms it is meant to check.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import comb

from .coding import LengthFunction
from .errors import InputError, PreconditionError, SizeCapError
from .guessing import GuessingFunction, MemorylessStrategy
from .measures import Alphabet, Distribution, OrderParameter, check_same_alphabet
from .tasks import Partition

MAX_ENUMERATION = 10 ** 6


def bell_number(m: int) -> int:
    row = [1]
    for _ in range(m):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]


@dataclass(frozen=True)
class EnumerationBudget:
    max_alphabet_permutations: int = 6
    max_alphabet_partitions: int = 8
    max_length: int = 8

    def __post_init__(self):
        if math.factorial(self.max_alphabet_permutations) > MAX_ENUMERATION:
            raise InputError("permutation budget above 1e6 orders")
        if bell_number(self.max_alphabet_partitions) > MAX_ENUMERATION:
            raise InputError("partition budget above 1e6 partitions")


DEFAULT_BUDGET = EnumerationBudget()


def _moment_bits(p: np.ndarray, values: np.ndarray, rho: float) -> np.ndarray:
    """``(1/rho) log2 sum_x p(x) v(x)^rho`` row-wise, by plain summation."""
    return np.log2(np.sum(p * values ** rho, axis=-1)) / rho


def best_guessing_exhaustive(p: Distribution, order: OrderParameter,
                             budget: EnumerationBudget = DEFAULT_BUDGET):
    """Minimize ``sgn(rho) E[G^rho]`` over all M! guessing orders.

    Returns ``(best, value)`` with ``value = (1/rho) log2 E[G^rho]``; the first
    minimizer in lexicographic rank order wins ties.
    """
    order.require_nonzero("best_guessing_exhaustive")
    m = p.size
    if m > budget.max_alphabet_permutations:
        raise SizeCapError(f"M = {m} exceeds the permutation budget {budget.max_alphabet_permutations}")
    perms = np.array(list(itertools.permutations(range(1, m + 1))), dtype=float)
    values = _moment_bits(p.probs, perms, order.rho)
    k = int(np.argmin(values))
    return GuessingFunction(p.alphabet, tuple(int(r) for r in perms[k])), float(values[k])


def set_partitions(m: int, max_cells: int | None = None):
    """Restricted-growth strings of length ``m`` using at most ``max_cells`` labels."""
    if m < 1:
        return
    cap = m if max_cells is None else min(m, max_cells)
    if cap < 1:
        return
    rgs = [0] * m

    def rec(i: int, used: int):
        if i == m:
            yield tuple(rgs)
            return
        for c in range(min(used + 1, cap)):
            rgs[i] = c
            yield from rec(i + 1, max(used, c + 1))

    yield from rec(1, 1)


def _cells(rgs: tuple[int, ...]) -> tuple[tuple[int, ...], ...]:
    cells: dict[int, list[int]] = {}
    for i, c in enumerate(rgs):
        cells.setdefault(c, []).append(i)
    return tuple(tuple(v) for _, v in sorted(cells.items()))


def best_partition_exhaustive(p: Distribution, n_keys: int, order: OrderParameter,
                              budget: EnumerationBudget = DEFAULT_BUDGET):
    """Exact minimum of ``(1/rho) log2 E[A^rho]`` over partitions with at most ``n_keys`` cells."""
    order.require_nonzero("best_partition_exhaustive")
    m = p.size
    if m > budget.max_alphabet_partitions:
        raise SizeCapError(f"M = {m} exceeds the partition budget {budget.max_alphabet_partitions}")
    if n_keys < 1:
        raise PreconditionError("need at least one key")
    rgs = np.array(list(set_partitions(m, n_keys)), dtype=np.int64)
    onehot = rgs[:, :, None] == np.arange(m)[None, None, :]
    counts = onehot.sum(axis=1)
    sizes = np.take_along_axis(counts, rgs, axis=1).astype(float)
    values = _moment_bits(p.probs, sizes, order.rho)
    k = int(np.argmin(values))
    return Partition(p.alphabet, _cells(tuple(rgs[k]))), float(values[k])


def factorial_moment_series(p: Distribution, strat: MemorylessStrategy, rho: int,
                            tail_tol: float = 1e-12, block: int = 4096) -> float:
    """``sum_m P{G = m} C(m + rho - 1, rho)`` summed until the tail bound drops below ``tail_tol``.

    ``P{G = m} = sum_x p(x) q(x) (1 - q(x))^(m-1)`` with ``q`` the guess law.
    Past index K the per-symbol terms shrink by at most
    ``(1 - q(x)) (1 + rho/(K+1))`` each step, which bounds the tail by a
    geometric series.
    """
    if tail_tol <= 0:
        raise InputError("tail_tol must be > 0")
    if isinstance(rho, bool) or int(rho) != rho or rho < 1:
        raise InputError("factorial moment order must be a positive integer")
    rho = int(rho)
    check_same_alphabet(p, strat.p_hat)
    w = p.probs * strat.p_hat.probs
    with np.errstate(divide="ignore"):
        log_fail = np.log1p(-strat.p_hat.probs)  # -inf where q(x) = 1
    total, k = [], 0
    while True:
        m = np.arange(k + 1, k + block + 1, dtype=float)
        with np.errstate(invalid="ignore"):
            expo = np.where(m - 1 == 0, 0.0, np.outer(log_fail, m - 1))
        terms = w[:, None] * np.exp(expo) * comb(m + rho - 1, rho)
        total.append(float(np.sum(terms)))
        k += block
        ratio = np.exp(log_fail) * (1.0 + rho / (k + 1))
        if np.all(ratio < 1):
            nxt = w * np.exp(log_fail * k) * comb(k + rho, rho)
            tail = float(np.sum(nxt / (1.0 - ratio)))
            if tail < tail_tol:
                return math.fsum(total)


def random_kraft_lengths(alphabet: Alphabet, max_length: int, seed: int,
                         attempts: int = 10_000) -> LengthFunction:
    """Integer lengths in ``[1, max_length]`` with Kraft sum at most 1.

    Uniform proposals with rejection; if ``attempts`` proposals all fail (only
    likely when the feasible set is tiny) lengths are drawn one at a time from
    the values that keep the remaining symbols feasible.
    """
    m = alphabet.size
    if max_length < 1:
        raise InputError("max_length must be >= 1")
    if m > 1 << max_length:
        raise PreconditionError(
            f"no Kraft code: {m} symbols need {m}/2^{max_length} > 1 even at the longest length"
        )
    rng = np.random.default_rng(seed)
    top = 1 << max_length
    for _ in range(attempts):
        lengths = rng.integers(1, max_length + 1, size=m)
        if sum(top >> int(v) for v in lengths) <= top:
            return LengthFunction(alphabet, tuple(int(v) for v in lengths))
    budget = Fraction(1)
    out = []
    for i in range(m):
        reserve = Fraction(m - i - 1, top)
        choices = [v for v in range(1, max_length + 1) if Fraction(1, 1 << v) + reserve <= budget]
        v = int(rng.choice(choices))
        budget -= Fraction(1, 1 << v)
        out.append(v)
    return LengthFunction(alphabet, tuple(out))


def best_lengths_exhaustive(p: Distribution, order: OrderParameter, max_length: int | None = None,
                            max_alphabet: int = 6):
    """Minimum normalized cumulant over all Kraft-feasible integer length vectors.

    An optimal code can be taken complete, so lengths up to ``M - 1`` suffice.
    """
    order.require_nonzero("best_lengths_exhaustive")
    m = p.size
    if m > max_alphabet:
        raise SizeCapError(f"M = {m} exceeds the length-search budget {max_alphabet}")
    top = max(1, m - 1) if max_length is None else max_length
    grid = np.array(list(itertools.product(range(1, top + 1), repeat=m)), dtype=np.int64)
    feasible = grid[np.sum(np.ldexp(1.0, -grid), axis=1) <= 1.0]
    if feasible.size == 0:
        raise PreconditionError("no feasible length vector within max_length")
    values = _moment_bits(p.probs, np.exp2(feasible.astype(float)), order.rho)
    k = int(np.argmin(values))
    return LengthFunction(p.alphabet, tuple(int(v) for v in feasible[k])), float(values[k])


def random_distributions(count: int, max_size: int = 16, seed: int = 0,
                         min_size: int = 2) -> list[Distribution]:
    """Deterministic corpus of Dirichlet draws with mixed concentrations."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        m = int(rng.integers(min_size, max_size + 1))
        conc = float(rng.choice([0.2, 0.5, 1.0, 3.0]))
        probs = rng.dirichlet(np.full(m, conc))
        if np.min(probs) <= 1e-12:
            continue
        out.append(Distribution.from_probs(probs / probs.sum()))
    return out
