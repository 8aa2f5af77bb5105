"""Partitions of a task set onto a limited number of keys.

Pressing a key performs every task in its cell, so a task ``x`` costs
``A(x)``, the size of its cell.  ``sum_x 1/A(x)`` equals the number of
cells exactly, which plays the role Kraft's inequality plays for codes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from .bounds import DEFAULT_TOL, EQUAL, LOWER, UPPER, BoundReport
from .errors import AlphabetMismatchError, InputError, PreconditionError
from .guessing import InducedDistribution
from .measures import (
    LN2,
    Alphabet,
    Distribution,
    OrderParameter,
    check_same_alphabet,
    renyi_entropy,
    sundaresan_divergence,
)

# float slack when comparing a rational mu against the irrational key budget
BUDGET_RTOL = 1e-12


@dataclass(frozen=True)
class Partition:
    """Disjoint non-empty cells of symbol indices covering the alphabet."""

    alphabet: Alphabet
    cells: tuple[tuple[int, ...], ...]
    sizes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        cells = tuple(tuple(int(i) for i in cell) for cell in self.cells)
        m = self.alphabet.size
        seen = np.zeros(m, dtype=bool)
        sizes = np.zeros(m, dtype=np.int64)
        for cell in cells:
            if not cell:
                raise PreconditionError("partition cells must be non-empty")
            for i in cell:
                if not 0 <= i < m:
                    raise PreconditionError(f"cell index {i} outside the alphabet")
                if seen[i]:
                    raise PreconditionError(
                        f"symbol {self.alphabet.symbols[i]!r} appears in two cells"
                    )
                seen[i] = True
                sizes[i] = len(cell)
        if not seen.all():
            missing = self.alphabet.symbols[int(np.flatnonzero(~seen)[0])]
            raise PreconditionError(f"symbol {missing!r} is in no cell")
        sizes.setflags(write=False)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "sizes", sizes)

    @classmethod
    def from_symbols(cls, alphabet: Alphabet, cells) -> "Partition":
        try:
            return cls(alphabet, tuple(tuple(alphabet.index[s] for s in cell) for cell in cells))
        except KeyError as exc:
            raise PreconditionError(f"unknown symbol {exc.args[0]!r} in partition") from None

    @classmethod
    def singletons(cls, alphabet: Alphabet) -> "Partition":
        return cls(alphabet, tuple((i,) for i in range(alphabet.size)))

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def partition_function(self) -> np.ndarray:
        return self.sizes

    def symbol_cells(self) -> list[list[str]]:
        return [[self.alphabet.symbols[i] for i in cell] for cell in self.cells]

    def to_json(self) -> str:
        return json.dumps(self.symbol_cells())


def load_partition(path, alphabet: Alphabet) -> Partition:
    try:
        cells = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON ({exc.msg})") from None
    if not isinstance(cells, list) or not all(isinstance(c, list) for c in cells):
        raise InputError(f"{path}: partition must be a JSON list of cells")
    return Partition.from_symbols(alphabet, cells)


def partition_identity(part: Partition) -> int:
    """``sum_x 1/A(x)``, checked in rational arithmetic against the cell count."""
    total = sum(Fraction(1, int(a)) for a in part.sizes)
    if total != part.n_cells:
        raise AssertionError(f"sum 1/A = {total} but the partition has {part.n_cells} cells")
    return int(total)


@dataclass(frozen=True)
class LambdaSpec:
    """Per-symbol cell-size caps ``lambda(x)`` in ``N u {inf}``."""

    alphabet: Alphabet
    values: tuple

    def __post_init__(self):
        vals = tuple(v if v == math.inf else int(v) for v in self.values)
        if len(vals) != self.alphabet.size:
            raise PreconditionError("one lambda per symbol required")
        if any(v < 1 for v in vals):
            raise PreconditionError("lambda values must be >= 1")
        object.__setattr__(self, "values", vals)

    @property
    def mu(self) -> Fraction:
        return sum((Fraction(1, v) for v in self.values if v != math.inf), Fraction(0))


def key_slack(n_keys: int, m: int) -> float:
    """``N - log2 M - 2``; the construction needs this positive."""
    return n_keys - math.log2(m) - 2.0


def lambda_from_distribution(p: Distribution, order: OrderParameter, n_keys: int) -> LambdaSpec:
    """``lambda(x) = ceil(beta p(x)^-alpha)`` with ``beta = 2 Z / (N - log2 M - 2)``."""
    order.require_nonzero("lambda_from_distribution")
    slack = key_slack(n_keys, p.size)
    if not slack > 0:
        raise PreconditionError(
            f"need N > log2 M + 2 = {math.log2(p.size) + 2:.4g} keys, got N={n_keys}"
        )
    a = order.alpha
    log_beta = math.log(2.0) + float(logsumexp(a * p.log_probs)) - math.log(slack)
    with np.errstate(over="ignore"):
        raw = np.exp(log_beta - a * p.log_probs)
    values = tuple(math.inf if not math.isfinite(v) else math.ceil(v) for v in raw)
    spec = LambdaSpec(p.alphabet, values)
    if float(spec.mu) > slack / 2 * (1 + BUDGET_RTOL):
        raise AssertionError(f"mu={float(spec.mu)} exceeds (N - log2 M - 2)/2 = {slack / 2}")
    return spec


def partition_size_bound(mu: float, m: int) -> int:
    """``min over alpha>1 of floor(alpha mu + log_alpha M + 2)`` on the grid 1.1..8 (step 0.1).

    Informational; the construction below always packs dyadically.
    """
    grid = np.round(np.arange(11, 81) / 10.0, 10)
    vals = np.floor(grid * float(mu) + math.log(m) / np.log(grid) + 2.0 + 1e-12)
    return int(vals.min())


def dyadic_partition(lam: LambdaSpec, n_keys: int) -> Partition:
    """Pack symbols into cells no larger than their caps.

    Symbols with ``lambda < M`` are grouped by level ``k = floor(log2 lambda)``
    and packed in alphabet order into cells of size ``2^k``.  Symbols with
    ``lambda >= M`` go to overflow cells: any keys still free become
    singletons for the overflow symbols with the smallest caps, and the rest
    share one cell.  Splitting only shrinks cells, so caps and the key count
    keep holding.  A level with ``n_k`` symbols has
    ``mu_k > n_k 2^-(k+1)``, so it uses fewer than ``2 mu_k + 1`` cells; at most
    ``floor(log2(M-1)) + 1`` levels occur, so the count stays below
    ``2 mu + log2 M + 2 <= N``.
    """
    m = lam.alphabet.size
    slack = key_slack(n_keys, m)
    if not float(lam.mu) <= slack / 2 * (1 + BUDGET_RTOL):
        raise PreconditionError(
            f"mu={float(lam.mu):.6g} exceeds (N - log2 M - 2)/2 = {slack / 2:.6g}"
        )
    overflow = [i for i, v in enumerate(lam.values) if v >= m]
    levels: dict[int, list[int]] = {}
    for i, v in enumerate(lam.values):
        if v < m:
            levels.setdefault(int(v).bit_length() - 1, []).append(i)
    cells: list[tuple[int, ...]] = []
    for k in sorted(levels):
        members, width = levels[k], 1 << k
        cells.extend(tuple(members[j:j + width]) for j in range(0, len(members), width))
    if overflow:
        # keys the dyadic levels leave unused become singletons for the
        # overflow symbols with the smallest caps (the most probable ones)
        overflow.sort(key=lambda i: (lam.values[i], i))
        singles = max(0, min(n_keys - len(cells) - 1, len(overflow) - 1))
        cells.extend((i,) for i in overflow[:singles])
        cells.append(tuple(sorted(overflow[singles:])))
    part = Partition(lam.alphabet, tuple(cells))
    if part.n_cells > n_keys:
        raise AssertionError(f"construction used {part.n_cells} cells for {n_keys} keys")
    caps = np.asarray([min(v, m) for v in lam.values])
    if np.any(part.sizes > caps):
        raise AssertionError("construction exceeded a lambda cap")
    return part


def construct_partition(p: Distribution, order: OrderParameter, n_keys: int) -> Partition:
    return dyadic_partition(lambda_from_distribution(p, order, n_keys), n_keys)


def _check_partition(p: Distribution, part: Partition) -> None:
    if p.alphabet != part.alphabet:
        raise AlphabetMismatchError("partition and distribution use different alphabets")


def log2_task_moment(p: Distribution, part: Partition, order: OrderParameter) -> float:
    """``log2 E[A(X)^rho]``."""
    _check_partition(p, part)
    order.require_nonzero("task moment")
    return float(logsumexp(p.log_probs + order.rho * np.log(part.sizes))) / LN2


@dataclass(frozen=True)
class TaskMomentReport:
    value: float          # (1/rho) log2 E[A^rho]
    raw_moment: float     # E[A^rho]
    reports: tuple[BoundReport, ...]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)


def tilde_keys(n_keys: int, m: int) -> float:
    return key_slack(n_keys, m) / 4.0


def task_moment(p: Distribution, part: Partition, order: OrderParameter,
                n_keys: int | None = None, q: Distribution | None = None,
                tol: float = DEFAULT_TOL) -> TaskMomentReport:
    """Evaluate ``E[A^rho]`` against the partition bounds.

    Always checks the lower bound ``H_alpha - log2 N`` with ``N`` the cell
    count.  When ``n_keys`` is given the partition is taken to be the
    construction for that key budget (built from ``q`` when supplied) and
    the achievability bounds are checked as well.
    """
    log_raw = log2_task_moment(p, part, order)
    rho = order.rho
    h = renyi_entropy(p, order)
    reports = [BoundReport(log_raw / rho, h - math.log2(part.n_cells), LOWER, tol,
                           label="(1/rho) log E[A^rho] >= H_a - log N")]
    if rho < 0:
        reports.append(BoundReport(log_raw, 0.0, UPPER, tol, units="log2 moment",
                                   label="E[A^rho] <= 1 (rho < 0)"))
    if n_keys is not None:
        m = p.size
        if not key_slack(n_keys, m) > 0:
            raise PreconditionError(f"need N > log2 M + 2 keys, got N={n_keys}")
        if q is not None:
            check_same_alphabet(p, q)
            h_eff = h + sundaresan_divergence(p, q, order)
        else:
            h_eff = h
        if rho > 0:
            nt = tilde_keys(n_keys, m)
            rhs = float(np.logaddexp2(0.0, rho * (h_eff - math.log2(nt))))
            reports.append(BoundReport(log_raw, rhs, UPPER, tol, units="log2 moment",
                                       label="E[A^rho] <= 1 + 2^{rho(H_a - log N~)}"
                                       if q is None else
                                       "E[A_Q^rho] <= 1 + 2^{rho(H_a + I_a - log N~)}"))
            reports.append(BoundReport(log_raw, 0.0, LOWER, tol, units="log2 moment",
                                       label="E[A^rho] >= 1"))
        elif q is None:
            reports.append(BoundReport(log_raw, rho * h - 1.0, LOWER, tol, units="log2 moment",
                                       label="E[A^rho] >= (1/2) 2^{rho H_a} (rho < 0)"))
            # what the dyadic construction guarantees; equals the line above
            # only once N~ >= 1
            t = -rho * math.log2(tilde_keys(n_keys, m))
            reports.append(BoundReport(log_raw, rho * h + t - float(np.logaddexp2(0.0, t)),
                                       LOWER, tol, units="log2 moment",
                                       label="E[A^rho] >= N~^-rho/(1+N~^-rho) 2^{rho H_a} (rho < 0)"))
    return TaskMomentReport(log_raw / rho, 2.0 ** log_raw, tuple(reports))


def induced_partition_distribution(part: Partition, order: OrderParameter,
                                   p: Distribution | None = None,
                                   tol: float = DEFAULT_TOL) -> InducedDistribution:
    """``Q_A(x)`` proportional to ``A(x)^-(1+rho)``, with the exact decomposition
    ``(1/rho) log2 E[A^rho] = H_alpha(P) + I_alpha(P, Q_A) - log2 N``."""
    order.require_nonzero("induced_partition_distribution")
    sizes = part.sizes.astype(float)
    q = Distribution.from_log_probs(part.alphabet, -(1.0 + order.rho) * np.log(sizes))
    if p is None:
        p = Distribution.uniform(part.alphabet.size, part.alphabet.symbols)
    value = log2_task_moment(p, part, order) / order.rho
    rhs = renyi_entropy(p, order) + sundaresan_divergence(p, q, order) - math.log2(part.n_cells)
    identity = BoundReport(value, rhs, EQUAL, tol,
                           label="(1/rho) log E[A^rho] = H_a + I_a(P, Q_A) - log N")
    return InducedDistribution(q, identity.slack, identity)
