"""Continued fractions with certified digits, convergents, and Ostrowski digits.

All integer arithmetic uses Python ints, so convergent tables cannot overflow
or wrap. The expansion itself runs in mpmath interval style: a partial quotient
is emitted only when the floor of the reciprocal is the same at both ends of
the uncertainty interval around the input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath as mp


class DomainError(ValueError):
    """Input outside the documented domain of an operation."""


class PrecisionExhausted(ArithmeticError):
    """Too few partial quotients are certain at the working precision."""


class TableTooShort(ValueError):
    """The convergent table does not extend past the decomposition target."""


@dataclass(frozen=True)
class ContinuedFraction:
    """Partial quotients (a_1, ..., a_K) of a real omega = [0; a_1, a_2, ...].

    precision_bits records the working precision that certified the quotients;
    truncated is True when the expansion stopped early because the next
    quotient could not be certified (rather than because max_terms was hit).
    """

    quotients: tuple[int, ...]
    precision_bits: int
    truncated: bool = False

    def __post_init__(self) -> None:
        if len(self.quotients) < 1:
            raise DomainError("a continued fraction needs at least one quotient")
        if any(a < 1 for a in self.quotients):
            raise DomainError("partial quotients must be >= 1")

    def value(self, precision_bits: int | None = None) -> mp.mpf:
        """Evaluate [0; a_1, ..., a_K] bottom-up at high precision."""
        bits = precision_bits or max(self.precision_bits, 64)
        with mp.workprec(bits):
            acc = mp.mpf(0)
            for a in reversed(self.quotients):
                acc = 1 / (a + acc)
            return +acc


@dataclass(frozen=True)
class ConvergentTable:
    """Convergents p_k/q_k, k = 0..K, of a continued fraction.

    q_0 = 1, q_1 = a_1 and q_{k+1} = a_{k+1} q_k + q_{k-1}; same recursion for
    p with p_0 = 0, p_1 = 1. Entries are exact Python integers.
    """

    quotients: tuple[int, ...]
    p: tuple[int, ...]
    q: tuple[int, ...]

    @property
    def K(self) -> int:
        return len(self.q) - 1

    def __len__(self) -> int:
        return len(self.q)


@dataclass(frozen=True)
class Decomposition:
    """Digits of m over the convergent denominators: m = sum_k n_k q_k.

    digits[k] = n_k for k = 0..N where N is the largest index with q_N <= m.
    Built greedily from the top denominator down, so q_N <= m < q_{N+1}.
    """

    target: int
    digits: tuple[int, ...]
    N: int


@dataclass(frozen=True)
class DecompositionReport:
    reconstruction_exact: bool
    n_bound_ok: bool
    n_bound_value: float
    digit_bound_ok: bool
    max_digit: int
    b_used: int


def _input_interval(x, precision_bits: int):
    """Uncertainty interval [lo, hi] around the input at working precision."""
    if isinstance(x, float):
        nominal = mp.mpf(x)
        delta = mp.mpf(math.ulp(abs(x)) if x != 0.0 else 2.0 ** -1074) / 2
    elif isinstance(x, str):
        nominal = mp.mpf(x)
        delta = abs(nominal) * mp.mpf(2) ** (1 - precision_bits)
    else:
        nominal = mp.mpf(x)
        delta = abs(nominal) * mp.mpf(2) ** (1 - precision_bits)
    return nominal - delta, nominal + delta, nominal


def expand(x, max_terms: int, precision_bits: int = 256) -> ContinuedFraction:
    """Certified partial quotients of x in (0,1).

    Interval version of the Gauss map: keep [lo, hi] containing the true
    value, emit a_k = floor(1/x) only while floor(1/hi) == floor(1/lo), then
    map the interval through x -> 1/x - a_k. Rational inputs collapse the
    interval onto 0 and terminate; fewer than two certified quotients raises
    PrecisionExhausted.
    """
    if max_terms < 1:
        raise DomainError("max_terms must be >= 1")
    if precision_bits < 128:
        raise DomainError("precision_bits must be >= 128")
    with mp.workprec(precision_bits + 32):
        lo, hi, nominal = _input_interval(x, precision_bits)
        if not (0 < nominal < 1):
            raise DomainError(f"expected x in (0,1), got {float(nominal)}")
        quotients: list[int] = []
        truncated = False
        while len(quotients) < max_terms:
            if lo <= 0:
                # The value may be exactly 0 here: terminating (rational)
                # expansion or plain loss of certainty.
                truncated = True
                break
            a_hi = int(mp.floor(1 / hi))
            a_lo = int(mp.floor(1 / lo))
            if a_hi != a_lo:
                truncated = True
                break
            quotients.append(a_hi)
            lo, hi = 1 / hi - a_hi, 1 / lo - a_hi
        if len(quotients) < 2:
            raise PrecisionExhausted(
                "fewer than two partial quotients are certain at "
                f"{precision_bits} bits (rational or near-rational input?)"
            )
    return ContinuedFraction(tuple(quotients), precision_bits, truncated)


def convergents(cf: ContinuedFraction) -> ConvergentTable:
    """Convergent table of cf via the standard three-term recursion.

    Python integers are arbitrary precision, so the recursion cannot overflow;
    entries are exact for any table length.
    """
    a = cf.quotients
    p = [0, 1]
    q = [1, a[0]]
    for k in range(1, len(a)):
        p.append(a[k] * p[-1] + p[-2])
        q.append(a[k] * q[-1] + q[-2])
    return ConvergentTable(tuple(a), tuple(p), tuple(q))


def constant_type_bound(cf: ContinuedFraction) -> int:
    """Largest partial quotient in the available window.

    A finite window cannot certify constant type; this is the window bound B
    used by the decomposition digit checks.
    """
    return max(cf.quotients)


def ostrowski_decompose(m: int, table: ConvergentTable) -> Decomposition:
    """Greedy digits of m over the denominators q_0..q_N.

    N is the largest index with q_N <= m (the table must also contain
    q_{N+1} > m), then repeated Euclidean division from the top:
    n_k = r_{k+1} // q_k, r_k = r_{k+1} mod q_k, starting from r_{N+1} = m.
    The greedy choice is what keeps every digit <= B + 1.
    """
    if m < 1:
        raise DomainError("decomposition target must be >= 1")
    q = table.q
    # Largest N with q_N <= m; need q_{N+1} > m inside the table.
    N = -1
    for k in range(len(q) - 1, -1, -1):
        if q[k] <= m:
            N = k
            break
    if N < 0:
        raise TableTooShort("no q_k <= m in the table")
    if N + 1 >= len(q) or q[N + 1] <= m:
        raise TableTooShort(
            f"table ends at q_{len(q) - 1} = {q[-1]} but the digits of {m} "
            f"need q_{N + 1} > {m}"
        )
    digits = [0] * (N + 1)
    r = m
    for k in range(N, -1, -1):
        digits[k], r = divmod(r, q[k])
    return Decomposition(m, tuple(digits), N)


def verify_decomposition(
    d: Decomposition, table: ConvergentTable, B: int
) -> DecompositionReport:
    """Check a decomposition: exact reconstruction, the length bound
    N < 4 log(m+1)/log 2, and the digit bound n_k <= B + 1.

    The digit bound is asserted at B + 1, which is what the greedy argument
    actually gives; max_digit reports the observed maximum so the sharper
    bound B can be watched empirically.
    """
    recon = sum(n * q for n, q in zip(d.digits, table.q))
    n_bound_value = 4.0 * math.log(d.target + 1) / math.log(2.0)
    max_digit = max(d.digits)
    return DecompositionReport(
        reconstruction_exact=(recon == d.target),
        n_bound_ok=(d.N < n_bound_value),
        n_bound_value=n_bound_value,
        digit_bound_ok=(max_digit <= B + 1),
        max_digit=max_digit,
        b_used=B,
    )


def named_real(name: str, precision_bits: int = 256) -> mp.mpf:
    """Named constants accepted wherever a real is expected.

    golden = (sqrt 5 - 1)/2, silver = sqrt 2 - 1, lambda = (1 + sqrt 5)/2.
    """
    with mp.workprec(precision_bits + 32):
        if name == "golden":
            return (mp.sqrt(5) - 1) / 2
        if name == "silver":
            return mp.sqrt(2) - 1
        if name == "lambda":
            return (1 + mp.sqrt(5)) / 2
    raise DomainError(f"unknown named constant: {name!r}")
