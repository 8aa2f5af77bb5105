"""Distributions and the information measures they carry.

All outputs are in bits.  Internally every sum of powers is evaluated in
the natural-log domain with a max-shifted log-sum-exp, which keeps the
measures finite for probabilities down to 1e-300 and alphabets of a
million symbols.
"""

from __future__ import annotations

import json
import math
import string
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import (
    AlphabetMismatchError,
    InvalidDistributionError,
    OrderRangeError,
)

LN2 = math.log(2.0)
SUM_TOL = 1e-9

# below this |exponent| the expm1/log1p route is used for sums of powers
_NEAR_ONE = 1e-3


@dataclass(frozen=True)
class Alphabet:
    symbols: tuple[str, ...]

    def __post_init__(self):
        symbols = tuple(str(s) for s in self.symbols)
        object.__setattr__(self, "symbols", symbols)
        if not symbols:
            raise InvalidDistributionError("alphabet must contain at least one symbol")
        if len(set(symbols)) != len(symbols):
            seen = set()
            dup = next(s for s in symbols if s in seen or seen.add(s))
            raise InvalidDistributionError(f"duplicate symbol {dup!r} in alphabet")

    @classmethod
    def default(cls, size: int) -> "Alphabet":
        if size <= 26:
            return cls(tuple(string.ascii_lowercase[:size]))
        return cls(tuple(f"x{i}" for i in range(size)))

    @property
    def size(self) -> int:
        return len(self.symbols)

    def __len__(self):
        return len(self.symbols)

    @cached_property
    def index(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.symbols)}


class Distribution:
    """A strictly positive probability vector over an :class:`Alphabet`.

    Instances are immutable; ``probs`` is a read-only array.
    """

    __slots__ = ("alphabet", "probs", "_log_probs")

    def __init__(self, alphabet: Alphabet, probs: Sequence[float] | np.ndarray):
        p = np.array(probs, dtype=float).reshape(-1)
        if p.size != alphabet.size:
            raise InvalidDistributionError(
                f"{p.size} probabilities for an alphabet of {alphabet.size} symbols"
            )
        if not np.all(np.isfinite(p)):
            raise InvalidDistributionError("probabilities must be finite")
        bad = np.flatnonzero(p <= 0)
        if bad.size:
            sym = alphabet.symbols[bad[0]]
            raise InvalidDistributionError(
                f"probability of symbol {sym!r} is {p[bad[0]]!r}; entries must be > 0"
            )
        total = float(np.sum(p))
        if abs(total - 1.0) > SUM_TOL:
            raise InvalidDistributionError(f"probabilities sum to {total!r}, not 1")
        p.setflags(write=False)
        self.alphabet = alphabet
        self.probs = p
        self._log_probs = None

    @classmethod
    def from_probs(cls, probs, symbols: Iterable[str] | None = None) -> "Distribution":
        probs = np.asarray(probs, dtype=float)
        alphabet = Alphabet.default(probs.size) if symbols is None else Alphabet(tuple(symbols))
        return cls(alphabet, probs)

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, float]) -> "Distribution":
        return cls(Alphabet(tuple(mapping)), [float(v) for v in mapping.values()])

    @classmethod
    def uniform(cls, size: int, symbols: Iterable[str] | None = None) -> "Distribution":
        return cls.from_probs(np.full(size, 1.0 / size), symbols)

    @classmethod
    def from_log_probs(cls, alphabet: Alphabet, log_probs: np.ndarray) -> "Distribution":
        """Build from natural-log probabilities, keeping the exact logs."""
        log_probs = np.asarray(log_probs, dtype=float).reshape(-1)
        if log_probs.size != alphabet.size:
            raise InvalidDistributionError(
                f"{log_probs.size} probabilities for an alphabet of {alphabet.size} symbols"
            )
        if not np.all(np.isfinite(log_probs)):
            raise InvalidDistributionError("log-probabilities must be finite")
        log_probs = log_probs - logsumexp(log_probs)
        # validated in the log domain: entries below ~1e-308 may underflow to
        # 0 in ``probs`` while their logs stay exact
        probs = np.exp(log_probs)
        probs.setflags(write=False)
        log_probs.setflags(write=False)
        d = cls.__new__(cls)
        d.alphabet, d.probs, d._log_probs = alphabet, probs, log_probs
        return d

    @property
    def size(self) -> int:
        return self.alphabet.size

    @property
    def symbols(self) -> tuple[str, ...]:
        return self.alphabet.symbols

    @property
    def log_probs(self) -> np.ndarray:
        if self._log_probs is None:
            lp = np.log(self.probs)
            lp.setflags(write=False)
            self._log_probs = lp
        return self._log_probs

    def as_dict(self) -> dict[str, float]:
        return {s: float(v) for s, v in zip(self.symbols, self.probs)}

    def __repr__(self):
        body = ", ".join(f"{s}={v:.6g}" for s, v in zip(self.symbols[:8], self.probs[:8]))
        more = ", ..." if self.size > 8 else ""
        return f"Distribution({body}{more})"

    def __eq__(self, other):
        if not isinstance(other, Distribution):
            return NotImplemented
        return self.alphabet == other.alphabet and np.array_equal(self.probs, other.probs)

    __hash__ = None


def check_same_alphabet(p: Distribution, q: Distribution) -> None:
    if p.alphabet != q.alphabet:
        raise AlphabetMismatchError(
            f"alphabets differ: {p.symbols[:5]}... vs {q.symbols[:5]}..."
        )


@dataclass(frozen=True)
class OrderParameter:
    """The pair (rho, alpha) with alpha = 1/(1+rho).

    ``rho == 0`` is the zero-limit sentinel (alpha = 1), the Shannon/KL regime.
    Build instances with :meth:`from_rho`, :meth:`from_alpha` or
    :meth:`zero_limit`.
    """

    rho: float
    alpha: float

    def __post_init__(self):
        rho, alpha = float(self.rho), float(self.alpha)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "alpha", alpha)
        if not (math.isfinite(rho) and math.isfinite(alpha)):
            raise OrderRangeError("order parameter must be finite")
        if rho <= -1.0:
            raise OrderRangeError(f"rho={rho} outside (-1, 0) u (0, inf)")
        if alpha <= 0.0:
            raise OrderRangeError(f"alpha={alpha} must be positive")
        if abs(alpha * (1.0 + rho) - 1.0) > 1e-12:
            raise OrderRangeError(f"inconsistent pair rho={rho}, alpha={alpha}")
        if (rho == 0.0) != (alpha == 1.0):
            raise OrderRangeError("alpha = 1 only at the zero-limit")

    @classmethod
    def from_rho(cls, rho: float) -> "OrderParameter":
        rho = float(rho)
        if rho <= -1.0 or not math.isfinite(rho):
            raise OrderRangeError(f"rho={rho} outside (-1, 0) u (0, inf)")
        return cls(rho, 1.0 if rho == 0.0 else 1.0 / (1.0 + rho))

    @classmethod
    def from_alpha(cls, alpha: float) -> "OrderParameter":
        alpha = float(alpha)
        if alpha <= 0.0 or not math.isfinite(alpha):
            raise OrderRangeError(f"alpha={alpha} must be in (0, inf)")
        return cls(0.0 if alpha == 1.0 else 1.0 / alpha - 1.0, alpha)

    @classmethod
    def zero_limit(cls) -> "OrderParameter":
        return cls(0.0, 1.0)

    @property
    def is_zero_limit(self) -> bool:
        return self.rho == 0.0

    @property
    def sign(self) -> int:
        return (self.rho > 0) - (self.rho < 0)

    def require_nonzero(self, what: str = "this operation") -> None:
        if self.is_zero_limit:
            raise OrderRangeError(f"{what} needs rho != 0")

    def __str__(self):
        return f"rho={self.rho:g}, alpha={self.alpha:g}"


@dataclass(frozen=True)
class EscortResult:
    z_alpha: float
    escort: Distribution
    log2_z: float


def log_mean_pow(log_w: np.ndarray, log_x: np.ndarray, e: float) -> float:
    """Natural log of sum(w * x**e) for a probability vector ``w``.

    Small exponents go through expm1/log1p so the result keeps full relative
    precision as ``e -> 0``.
    """
    if e == 0.0:
        return 0.0
    if abs(e) < _NEAR_ONE:
        w = np.exp(log_w)
        return math.log1p(float(np.sum(w * np.expm1(e * log_x))))
    return float(logsumexp(log_w + e * log_x))


def shannon_entropy(p: Distribution) -> float:
    return float(-np.sum(p.probs * p.log_probs)) / LN2


def renyi_entropy(p: Distribution, order: OrderParameter) -> float:
    if order.is_zero_limit:
        return shannon_entropy(p)
    a = order.alpha
    lp = p.log_probs
    return log_mean_pow(lp, lp, a - 1.0) / ((1.0 - a) * LN2)


def kl_divergence(p: Distribution, q: Distribution) -> float:
    check_same_alphabet(p, q)
    return float(np.sum(p.probs * (p.log_probs - q.log_probs))) / LN2


def log2_normalizer(p: Distribution, order: OrderParameter) -> float:
    """log2 of Z = sum p(x)**alpha."""
    if order.is_zero_limit:
        return 0.0
    return float(logsumexp(order.alpha * p.log_probs)) / LN2


def sundaresan_divergence(p: Distribution, q: Distribution, order: OrderParameter) -> float:
    r"""Relative alpha-entropy I_alpha(P, Q), KL at the zero-limit.

    Uses the rearrangement
    ``I = log Z_Q + (1/rho) log sum P Q^(alpha-1) - H_alpha(P)``
    which is algebraically the defining double sum.
    """
    check_same_alphabet(p, q)
    if order.is_zero_limit:
        return kl_divergence(p, q)
    a, rho = order.alpha, order.rho
    cross = log_mean_pow(p.log_probs, q.log_probs, a - 1.0) / rho
    return (float(logsumexp(a * q.log_probs)) + cross) / LN2 - renyi_entropy(p, order)


def escort(p: Distribution, order: OrderParameter) -> EscortResult:
    if order.is_zero_limit:
        return EscortResult(1.0, p, 0.0)
    scaled = order.alpha * p.log_probs
    log_z = float(logsumexp(scaled))
    return EscortResult(
        math.exp(log_z),
        Distribution.from_log_probs(p.alphabet, scaled - log_z),
        log_z / LN2,
    )


# -- file loading -----------------------------------------------------------

def _parse_prob(text, where: str) -> float:
    try:
        value = float(Fraction(str(text).strip()))
    except (ValueError, ZeroDivisionError):
        raise InvalidDistributionError(f"{where}: cannot parse probability {text!r}") from None
    if not math.isfinite(value) or value < 0:
        raise InvalidDistributionError(f"{where}: probability {text!r} must be >= 0")
    return value


def parse_distribution(
    pairs: Iterable[tuple[str, object]],
    *,
    strip_zeros: bool = False,
    normalize: bool = False,
    source: str = "<input>",
) -> Distribution:
    symbols, probs = [], []
    for symbol, raw in pairs:
        symbols.append(str(symbol))
        probs.append(_parse_prob(raw, f"{source}: symbol {symbol!r}"))
    if not symbols:
        raise InvalidDistributionError(f"{source}: no entries")
    if strip_zeros:
        kept = [(s, v) for s, v in zip(symbols, probs) if v > 0]
        if not kept:
            raise InvalidDistributionError(f"{source}: every probability is zero")
        symbols, probs = [s for s, _ in kept], [v for _, v in kept]
    arr = np.asarray(probs, dtype=float)
    if strip_zeros or normalize:
        total = arr.sum()
        if total <= 0:
            raise InvalidDistributionError(f"{source}: probabilities sum to zero")
        arr = arr / total
    try:
        return Distribution(Alphabet(tuple(symbols)), arr)
    except InvalidDistributionError as exc:
        raise InvalidDistributionError(f"{source}: {exc}") from None


def load_distribution(path, *, strip_zeros: bool = False, normalize: bool = False) -> Distribution:
    """Read a distribution from CSV (``symbol,probability`` lines) or JSON.

    JSON input is an object mapping symbol to probability.  CSV may carry a
    header row and ``#`` comment lines.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InvalidDistributionError(f"{path}: {exc.strerror}") from None
    stripped = text.lstrip()
    if path.suffix.lower() == ".json" or stripped.startswith("{"):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidDistributionError(f"{path}: malformed JSON ({exc.msg})") from None
        if not isinstance(obj, dict):
            raise InvalidDistributionError(f"{path}: JSON must be an object of symbol -> probability")
        pairs = list(obj.items())
    else:
        pairs = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = [f.strip() for f in line.split(",")]
            if len(fields) != 2:
                raise InvalidDistributionError(
                    f"{path}:{lineno}: expected 'symbol,probability', got {line!r}"
                )
            if not pairs and lineno == _first_data_line(text) and not _looks_numeric(fields[1]):
                continue  # header
            pairs.append((fields[0], fields[1]))
    return parse_distribution(pairs, strip_zeros=strip_zeros, normalize=normalize, source=str(path))


def _first_data_line(text: str) -> int:
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if line and not line.startswith("#"):
            return lineno
    return 0


def _looks_numeric(field: str) -> bool:
    try:
        Fraction(field)
    except (ValueError, ZeroDivisionError):
        return False
    return True
