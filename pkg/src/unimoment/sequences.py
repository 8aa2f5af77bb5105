"""Finite-n checks of the block (i.i.d. sequence) results.

Every construction is applied to the materialized product space ``X^n``;
asymptotic statements are witnessed by per-n sandwiches that shrink, never
by large n.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import DEFAULT_TOL
from .coding import campbell_lengths, cumulant, shannon_lengths
from .errors import InputError, PreconditionError, SizeCapError
from .guessing import guessing_moment, harmonic, optimal_guessing_order
from .measures import (
    Alphabet,
    Distribution,
    SUM_TOL,
    OrderParameter,
    log2_normalizer,
    renyi_entropy,
    shannon_entropy,
)
from .tasks import construct_partition, key_slack, log2_task_moment

MAX_PRODUCT_SIZE = 1 << 20

RULES = ("shannon-code", "campbell-code", "optimal-guess", "task-partition")


@dataclass(frozen=True)
class ProductDistribution:
    base: Distribution
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise InputError("sequence length n must be >= 1")

    @property
    def size(self) -> int:
        return self.base.size ** self.n

    def check_cap(self) -> None:
        if self.size > MAX_PRODUCT_SIZE:
            raise SizeCapError(
                f"|X|^n = {self.base.size}^{self.n} exceeds the cap 2^20; lower n"
            )

    def renyi_entropy(self, order: OrderParameter) -> float:
        return self.n * renyi_entropy(self.base, order)

    def log2_normalizer(self, order: OrderParameter) -> float:
        return self.n * log2_normalizer(self.base, order)

    def _digits(self) -> np.ndarray:
        self.check_cap()
        m, n = self.base.size, self.n
        return np.indices((m,) * n, dtype=np.int32).reshape(n, -1).T

    def _counts(self, digits: np.ndarray) -> np.ndarray:
        counts = np.zeros((digits.shape[0], self.base.size))
        for k in range(self.base.size):
            counts[:, k] = np.count_nonzero(digits == k, axis=1)
        return counts

    def log_probs(self) -> np.ndarray:
        """Natural-log probabilities of X^n in lexicographic order.

        Sums run over the symbol multiset in a fixed order, so permutations of
        a sequence get bit-identical probabilities and ties stay ties.
        """
        digits = self._digits()
        lp = self.base.log_probs
        if self.base.size <= self.n:
            return self._counts(digits) @ lp
        return np.sort(lp[digits], axis=1).sum(axis=1)

    def probs(self) -> np.ndarray:
        """Linear-domain products in the same multiset order (exact for dyadic bases)."""
        digits = self._digits()
        p = self.base.probs
        if self.base.size <= self.n:
            return np.prod(p ** self._counts(digits), axis=1)
        return np.sort(p[digits], axis=1).prod(axis=1)

    def alphabet(self) -> Alphabet:
        self.check_cap()
        syms = self.base.symbols
        sep = "" if all(len(s) == 1 for s in syms) else "."
        return Alphabet(tuple(sep.join(t) for t in itertools.product(syms, repeat=self.n)))

    def materialize(self) -> Distribution:
        alphabet = self.alphabet()
        probs = self.probs()
        if probs.min() > 0 and abs(probs.sum() - 1.0) <= SUM_TOL:
            return Distribution(alphabet, probs)
        return Distribution.from_log_probs(alphabet, self.log_probs())


def product_distribution(p: Distribution, n: int) -> ProductDistribution:
    return ProductDistribution(p, n)


def _rule_name(rule: str) -> str:
    if rule not in RULES:
        raise InputError(f"unknown rule {rule!r}; choose from {', '.join(RULES)}")
    return rule


def sequence_functional(pd: ProductDistribution, rule: str, order: OrderParameter,
                        n_keys: int | None = None) -> float:
    """Apply a per-sequence construction on X^n and return its normalized figure.

    shannon-code: ``E[L_n]/n``; campbell-code: ``(1/(n rho)) log2 E[2^(rho L_n)]``;
    optimal-guess: ``(1/(n rho)) log2 E[G_n^rho]``; task-partition: ``E[A_n^rho]``
    for the construction with ``n_keys^n`` keys.
    """
    rule = _rule_name(rule)
    pn = pd.materialize()
    n = pd.n
    if rule == "shannon-code":
        return cumulant(pn, shannon_lengths(pn), OrderParameter.zero_limit()).value / n
    order.require_nonzero(rule)
    if rule == "campbell-code":
        return cumulant(pn, campbell_lengths(pn, order), order).value / n
    if rule == "optimal-guess":
        return guessing_moment(pn, optimal_guessing_order(pn), order) / n
    if n_keys is None:
        raise InputError("task-partition rule needs a key count N")
    keys = n_keys ** n
    if not key_slack(keys, pn.size) > 0:
        raise PreconditionError(
            f"N^n = {keys} keys is not above n log2 M + 2 = {n * math.log2(pd.base.size) + 2:.4g}"
        )
    part = construct_partition(pn, order, keys)
    return 2.0 ** log2_task_moment(pn, part, order)


@dataclass(frozen=True)
class SeriesRow:
    n: int
    value: float | None
    lower: float
    upper: float
    tol: float = DEFAULT_TOL

    @property
    def verdict(self) -> str:
        if self.value is None:
            return "skip"
        ok = self.lower - self.tol <= self.value <= self.upper + self.tol
        return "pass" if ok else "fail"

    def as_dict(self) -> dict:
        return {"n": self.n, "value": self.value, "lower": self.lower,
                "upper": self.upper, "verdict": self.verdict}


@dataclass(frozen=True)
class SeriesReport:
    rule: str
    order: OrderParameter
    limit: float
    rows: tuple[SeriesRow, ...]
    notes: tuple[str, ...] = ()
    trend: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.verdict != "fail" for r in self.rows)


def _task_trend(rows, rho: float, limit: float, n_keys: int, delta: float | None) -> dict:
    """Evidence for the phase transition of the task series (rho > 0).

    Below capacity (log2 N > H_a) the series must eventually sit under
    ``1 + 2^{n rho (H_a - log2 N + delta)}``; the finite-n upper bounds
    decrease to 1.  Above capacity the lower bounds diverge.
    """
    done = [r for r in rows if r.value is not None]
    gap = math.log2(n_keys) - limit
    if gap > 0:
        if delta is None:
            delta = gap / 2
        env = {r.n: 1.0 + 2.0 ** (r.n * rho * (delta - gap)) for r in done}
        start = None
        for r in reversed(done):
            if r.value > env[r.n]:
                break
            start = r.n
        uppers = [r.upper for r in done]
        return {
            "regime": "below-capacity",
            "delta": delta,
            "envelope_holds_from": start,
            "upper_decreasing": all(a > b for a, b in zip(uppers, uppers[1:])),
            "final_excess": done[-1].value - 1.0 if done else None,
        }
    lowers = [r.lower for r in rows]
    return {
        "regime": "above-capacity" if gap < 0 else "at-capacity",
        "lower_increasing": all(a < b for a, b in zip(lowers, lowers[1:])),
    }


def tilde_keys_sequence(n_keys: int, n: int, m: int) -> float:
    """``(N^n - n log2 M - 2)/4``: the single-letter key slack on X^n."""
    return (n_keys ** n - n * math.log2(m) - 2.0) / 4.0


def max_block_length(m: int) -> int:
    n = 1
    while m ** (n + 1) <= MAX_PRODUCT_SIZE:
        n += 1
    return n


def convergence_experiment(p: Distribution, rule: str, order: OrderParameter, n_max: int,
                           n_keys: int | None = None, tol: float = DEFAULT_TOL,
                           delta: float | None = None) -> SeriesReport:
    """Per-n values of a block construction inside their finite-n sandwiches.

    Bounds per n:

    - shannon-code: ``[H, H + 1/n]``
    - campbell-code: ``[H_a, H_a + 1/n]``
    - optimal-guess: ``[H_a - log2(h_{M^n})/n, H_a]``
    - task-partition, rho > 0: ``[max(1, 2^{n rho (H_a - log N)}),
      1 + 2^{rho (n H_a - log N~_n)}]``; rho < 0: ``[(1/2) 2^{n rho H_a},
      min(1, 2^{n rho (H_a - log N)})]``
    """
    rule = _rule_name(rule)
    if n_max < 1:
        raise InputError("n_max must be >= 1")
    m = p.size
    if m ** n_max > MAX_PRODUCT_SIZE:
        raise SizeCapError(f"|X|^n_max = {m}^{n_max} exceeds the cap 2^20")
    rows = []
    notes: list[str] = []
    if rule == "shannon-code":
        limit = shannon_entropy(p)
    else:
        order.require_nonzero(rule)
        limit = renyi_entropy(p, order)
    rho = order.rho
    for n in range(1, n_max + 1):
        pd = ProductDistribution(p, n)
        if rule in ("shannon-code", "campbell-code"):
            lo, hi = limit, limit + 1.0 / n
        elif rule == "optimal-guess":
            lo, hi = limit - math.log2(harmonic(m ** n)) / n, limit
        else:
            if n_keys is None:
                raise InputError("task-partition rule needs a key count N")
            log_n = math.log2(n_keys)
            if rho > 0:
                lo = max(1.0, 2.0 ** (n * rho * (limit - log_n)))
                nt = tilde_keys_sequence(n_keys, n, m)
                hi = 1.0 + 2.0 ** (rho * (n * limit - math.log2(nt))) if nt > 0 else math.inf
            else:
                lo = 0.5 * 2.0 ** (n * rho * limit)
                hi = min(1.0, 2.0 ** (n * rho * (limit - log_n)))
            if not key_slack(n_keys ** n, m ** n) > 0:
                rows.append(SeriesRow(n, None, lo, hi, tol))
                notes.append(f"n={n}: N^n={n_keys ** n} keys too few for the construction")
                continue
        value = sequence_functional(pd, rule, order, n_keys)
        rows.append(SeriesRow(n, value, lo, hi, tol))
    trend = {}
    if rule == "task-partition" and rho > 0:
        trend = _task_trend(rows, rho, limit, n_keys, delta)
    return SeriesReport(rule, order, limit, tuple(rows), tuple(notes), trend)
