"""Budget-constrained moment minimization.

Minimizing ``sgn(rho) E[psi(X)^-rho]`` (or ``E[log 1/psi(X)]``) over weights
with ``sum psi <= b`` saturates the budget and is solved in closed form by
the escort of P scaled to the budget.  Every concrete problem in the package
(code lengths, guessing functions, partition functions, memoryless guess
laws) is an instance of this with a specific choice of ``psi`` and ``b``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import logsumexp

from .bounds import DEFAULT_TOL, EQUAL, LOWER, UPPER, BoundReport
from .errors import AlphabetMismatchError, BracketError, InfiniteMomentError, PreconditionError
from .measures import (
    LN2,
    Alphabet,
    Distribution,
    OrderParameter,
    check_same_alphabet,
    escort,
    kl_divergence,
    renyi_entropy,
    shannon_entropy,
    sundaresan_divergence,
)

# relative slack allowed when checking envelope hypotheses on float inputs
HYPOTHESIS_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class WeightFunction:
    alphabet: Alphabet
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        if w.size != self.alphabet.size:
            raise PreconditionError("one weight per symbol required")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise PreconditionError("weights must be finite and non-negative")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def like(cls, p: Distribution, weights) -> "WeightFunction":
        return cls(p.alphabet, weights)

    @property
    def budget(self) -> float:
        return math.fsum(self.weights)


def optimal_weight(p: Distribution, b: float, order: OrderParameter) -> WeightFunction:
    """The minimizer ``b * P^alpha / Z`` (``b * P`` at the zero-limit)."""
    if not b > 0:
        raise PreconditionError(f"budget b must be positive, got {b}")
    return WeightFunction(p.alphabet, b * escort(p, order).escort.probs)


def _log_weights(p: Distribution, psi: WeightFunction) -> np.ndarray:
    if psi.alphabet != p.alphabet:
        raise AlphabetMismatchError("weight function and distribution use different alphabets")
    with np.errstate(divide="ignore"):
        return np.log(psi.weights)


def power_moment(p: Distribution, psi: WeightFunction, order: OrderParameter) -> float:
    """``(1/rho) log2 E[psi(X)^-rho]``."""
    order.require_nonzero("power_moment")
    lw = _log_weights(p, psi)
    rho = order.rho
    zero = np.isneginf(lw)
    if zero.any():
        if rho > 0:
            sym = p.symbols[int(np.flatnonzero(zero)[0])]
            raise InfiniteMomentError(f"psi({sym!r}) = 0 makes E[psi^-rho] infinite for rho > 0")
        terms = p.log_probs[~zero] - rho * lw[~zero]
        if terms.size == 0:
            return math.inf
        return float(logsumexp(terms)) / (rho * LN2)
    return float(logsumexp(p.log_probs - rho * lw)) / (rho * LN2)


def log2_raw_moment(p: Distribution, psi: WeightFunction, order: OrderParameter) -> float:
    """``log2 E[psi(X)^-rho]`` (the un-normalized moment in log form)."""
    return order.rho * power_moment(p, psi, order)


def log_moment(p: Distribution, psi: WeightFunction) -> float:
    """``E[log2 (1/psi(X))]``."""
    lw = _log_weights(p, psi)
    if np.isneginf(lw).any():
        sym = p.symbols[int(np.flatnonzero(np.isneginf(lw))[0])]
        raise InfiniteMomentError(f"psi({sym!r}) = 0 makes E[log 1/psi] infinite")
    return float(-np.sum(p.probs * lw)) / LN2


def lower_bound_report(p: Distribution, psi: WeightFunction, order: OrderParameter,
                       b: float | None = None, tol: float = DEFAULT_TOL) -> BoundReport:
    """Check the budget lower bound for an arbitrary feasible ``psi``."""
    b = psi.budget if b is None else b
    if order.is_zero_limit:
        return BoundReport(log_moment(p, psi), shannon_entropy(p) - math.log2(b), LOWER, tol,
                           label="E[log 1/psi] >= H - log b")
    return BoundReport(power_moment(p, psi, order), renyi_entropy(p, order) - math.log2(b),
                       LOWER, tol, label="(1/rho) log E[psi^-rho] >= H_alpha - log b")


# -- general convex objectives ----------------------------------------------

@dataclass(frozen=True)
class ConvexObjective:
    """A strictly convex, strictly decreasing ``f`` on (0, inf).

    ``derivative_inverse`` maps the (negative) range of ``f'`` back to
    (0, inf).  Increasing objectives leave the budget slack and have no
    multiplier, so they are refused.
    """

    f: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray]
    derivative_inverse: Callable[[np.ndarray], np.ndarray]
    name: str = "f"
    decreasing: bool = True

    def __post_init__(self):
        if not self.decreasing:
            raise PreconditionError(
                f"objective {self.name!r}: only strictly decreasing convex f are supported"
            )


def power_objective(order: OrderParameter) -> ConvexObjective:
    """``f(y) = sgn(rho) * y^-rho``."""
    order.require_nonzero("power_objective")
    rho, a, s = order.rho, order.alpha, order.sign
    r = abs(rho)
    return ConvexObjective(
        f=lambda y: s * np.power(y, -rho),
        derivative=lambda y: -r * np.power(y, -rho - 1.0),
        derivative_inverse=lambda t: np.power(r / -np.asarray(t, dtype=float), a),
        name=f"sgn(rho) y^-rho (rho={rho:g})",
    )


def log_objective() -> ConvexObjective:
    """``f(y) = -log2 y``."""
    return ConvexObjective(
        f=lambda y: -np.log2(y),
        derivative=lambda y: -1.0 / (np.asarray(y, dtype=float) * LN2),
        derivative_inverse=lambda t: -1.0 / (np.asarray(t, dtype=float) * LN2),
        name="-log2 y",
    )


@dataclass(frozen=True)
class GeneralBound:
    lambda_star: float
    bound: float
    minimizer: WeightFunction
    iterations: int


LAMBDA_LOG2_RANGE = (-60.0, 60.0)
MAX_BISECTIONS = 200
BISECTION_RTOL = 1e-12


def general_convex_bound(p: Distribution, objective: ConvexObjective, b: float) -> GeneralBound:
    """Lower bound on ``E[f(psi(X))]`` over ``sum psi <= b``.

    Solves ``sum_x g(lambda / p(x)) = b`` for the multiplier (``g`` the
    inverse derivative) by bisection on ``log2(-lambda)``.
    """
    if not b > 0:
        raise PreconditionError(f"budget b must be positive, got {b}")
    probs = p.probs
    g = objective.derivative_inverse

    def spend(u: float) -> float:
        lam = -(2.0 ** u)
        with np.errstate(over="ignore", divide="ignore"):
            return float(np.sum(g(lam / probs)))

    lo, hi = LAMBDA_LOG2_RANGE  # spend() decreases in u
    s_lo, s_hi = spend(lo), spend(hi)
    if not (s_lo >= b >= s_hi) or not (math.isfinite(s_lo) or math.isfinite(s_hi)):
        raise BracketError(
            f"no multiplier for {objective.name!r} at b={b}: budget spent ranges over "
            f"[{s_hi:.3g}, {s_lo:.3g}] on lambda in [-2^{hi:g}, -2^{lo:g}]"
        )
    it = 0
    mid, s_mid = lo, s_lo
    for it in range(1, MAX_BISECTIONS + 1):
        mid = 0.5 * (lo + hi)
        s_mid = spend(mid)
        if abs(s_mid - b) <= BISECTION_RTOL * b:
            break
        if s_mid > b:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4 * np.finfo(float).eps * max(1.0, abs(mid)):
            break
    lam = -(2.0 ** mid)
    psi = np.asarray(g(lam / probs), dtype=float)
    bound = float(np.sum(probs * objective.f(psi)))
    return GeneralBound(lam, bound, WeightFunction(p.alphabet, psi), it)


# -- mismatch envelopes -----------------------------------------------------

def _log_escort_ratio(q: Distribution, order: OrderParameter) -> np.ndarray:
    """Natural log of ``Z_{Q,alpha} / Q(x)^alpha``."""
    if order.is_zero_limit:
        return -q.log_probs
    a = order.alpha
    return float(logsumexp(a * q.log_probs)) - a * q.log_probs


def escort_envelope(q: Distribution, order: OrderParameter, c: float = 1.0) -> WeightFunction:
    """The weight with ``psi(x)^-1 = c * Z_Q / Q(x)^alpha`` exactly."""
    return WeightFunction(q.alphabet, np.exp(-(math.log(c) + _log_escort_ratio(q, order))))


def _require_envelope(ok: np.ndarray, q: Distribution, what: str) -> None:
    if not ok.all():
        sym = q.symbols[int(np.flatnonzero(~ok)[0])]
        raise PreconditionError(f"{what} violated at symbol {sym!r}")


def mismatch_upper(p: Distribution, q: Distribution, order: OrderParameter, b: float, c: float,
                   psi: WeightFunction, tol: float = DEFAULT_TOL) -> BoundReport:
    """Envelope bound ``psi^-1 <= (b + (c Z_Q/Q^alpha)^|rho|)^(1/|rho|)``.

    Reported on ``log2 E[psi^-rho]``: an upper bound for rho > 0 and a
    lower bound (with the ``1 + b c^rho`` correction) for rho < 0.  At the
    zero-limit only ``b = 0`` is defined and the report is on
    ``E[log2 1/psi]``.
    """
    check_same_alphabet(p, q)
    if b < 0 or not c > 0:
        raise PreconditionError(f"need b >= 0 and c > 0, got b={b}, c={c}")
    lw = _log_weights(p, psi)
    ratio = math.log(c) + _log_escort_ratio(q, order)
    if order.is_zero_limit:
        if b != 0:
            raise PreconditionError("zero-limit envelope bound is defined for b = 0 only")
        _require_envelope(-lw <= ratio + HYPOTHESIS_RTOL * np.maximum(1.0, np.abs(ratio)), q,
                          "envelope psi^-1 <= c/Q")
        rhs = shannon_entropy(p) + kl_divergence(p, q) + math.log2(c)
        return BoundReport(log_moment(p, psi), rhs, UPPER, tol,
                           label="E[log 1/psi] <= H + I + log c")
    r = abs(order.rho)
    with np.errstate(divide="ignore"):
        log_b = math.log(b) if b > 0 else -math.inf
    env = np.logaddexp(log_b, r * ratio) / r
    _require_envelope(-lw <= env + HYPOTHESIS_RTOL * np.maximum(1.0, np.abs(env)), q,
                      "envelope psi^-1 <= (b + (c Z_Q/Q^alpha)^|rho|)^(1/|rho|)")
    rho = order.rho
    core = rho * (renyi_entropy(p, order) + sundaresan_divergence(p, q, order) + math.log2(c))
    lhs = log2_raw_moment(p, psi, order)
    if rho > 0:
        rhs = float(np.logaddexp2(math.log2(b) if b > 0 else -math.inf, core))
        return BoundReport(lhs, rhs, UPPER, tol, units="log2 moment",
                           label="log E[psi^-rho] <= log(b + 2^{rho(H_a + I_a + log c)})")
    rhs = core - math.log2(1.0 + b * c ** rho)
    return BoundReport(lhs, rhs, LOWER, tol, units="log2 moment",
                       label="log E[psi^-rho] >= rho(H_a + I_a + log c) - log(1 + b c^rho)")


def mismatch_lower(p: Distribution, q: Distribution, order: OrderParameter, a: float,
                   psi: WeightFunction, tol: float = DEFAULT_TOL) -> BoundReport:
    """Envelope bound ``a Z_Q/Q^alpha <= psi^-1`` giving the normalized moment
    at least ``H_alpha(P) + I_alpha(P, Q) + log a``."""
    check_same_alphabet(p, q)
    if not a > 0:
        raise PreconditionError(f"need a > 0, got {a}")
    lw = _log_weights(p, psi)
    ratio = math.log(a) + _log_escort_ratio(q, order)
    _require_envelope(-lw >= ratio - HYPOTHESIS_RTOL * np.maximum(1.0, np.abs(ratio)), q,
                      "envelope a Z_Q/Q^alpha <= psi^-1")
    if order.is_zero_limit:
        rhs = shannon_entropy(p) + kl_divergence(p, q) + math.log2(a)
        return BoundReport(log_moment(p, psi), rhs, LOWER, tol,
                           label="E[log 1/psi] >= H + I + log a")
    rhs = renyi_entropy(p, order) + sundaresan_divergence(p, q, order) + math.log2(a)
    return BoundReport(power_moment(p, psi, order), rhs, LOWER, tol,
                       label="(1/rho) log E[psi^-rho] >= H_a + I_a + log a")


def renyi_divergence_identity(p: Distribution, q: Distribution, order: OrderParameter,
                              tol: float = DEFAULT_TOL) -> BoundReport:
    """``(1/rho) log2(Z_Q^rho sum P Q^(alpha-1)) == H_alpha(P) + I_alpha(P, Q)``.

    The left side is summed directly; the right side goes through the
    entropy and divergence functions.
    """
    check_same_alphabet(p, q)
    order.require_nonzero("the normalized identity")
    rho, a = order.rho, order.alpha
    log_z = float(logsumexp(a * q.log_probs))
    log_cross = float(logsumexp(p.log_probs + (a - 1.0) * q.log_probs))
    lhs = (rho * log_z + log_cross) / (rho * LN2)
    rhs = renyi_entropy(p, order) + sundaresan_divergence(p, q, order)
    return BoundReport(lhs, rhs, EQUAL, tol, label="Z_Q^rho sum P Q^(a-1) = 2^{rho(H_a + I_a)}")
