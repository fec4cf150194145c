"""The singular series for N = p + square-free with p in a progression.

Two evaluation routes to the same constant: a rudimentary form whose local
corrections are spelled out per divisibility class, and the Euler-product
form driven by Ramanujan sums.  Both truncate one infinite product over
primes and report a rigorous relative tail bound, so agreement between them
is a meaningful cross-check rather than a tautology.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from sqfrep.arith import FactoredInt, euler_phi, primes_up_to, ramanujan_sum

_SIX_OVER_PI_SQ = 6.0 / (math.pi * math.pi)

DEFAULT_PRIME_CUTOFF = 10**6


@dataclass(frozen=True)
class SeriesValue:
    """One evaluation: value, relative tail bound, vanishing flag, cutoff."""

    value: float
    tail_bound: float
    vanished: bool
    prime_cutoff: int

    def __post_init__(self) -> None:
        if self.vanished != (self.value == 0.0):
            raise ValueError("vanished flag must track a zero value")
        if self.tail_bound < 0:
            raise ValueError("tail bound must be non-negative")

    def interval(self) -> tuple[float, float]:
        spread = abs(self.value) * self.tail_bound
        return (self.value - spread, self.value + spread)


def _validate(a: int, q: FactoredInt, prime_cutoff: int) -> int:
    a %= q.value
    if math.gcd(a, q.value) != 1:
        raise ValueError(f"class {a} is not a unit mod {q.value}")
    if prime_cutoff < 2:
        raise ValueError("prime cutoff must be at least 2")
    return a


def _shared_square(q: FactoredInt, diff: int) -> bool:
    return any(e >= 2 and diff % (p * p) == 0 for p, e in q.factors)


def _bulk_primes(prime_cutoff: int, excluded: frozenset) -> np.ndarray:
    ps = primes_up_to(prime_cutoff)
    if not excluded:
        return ps
    keep = np.ones(ps.shape, dtype=bool)
    for p in excluded:
        i = int(np.searchsorted(ps, p))
        if i < len(ps) and ps[i] == p:
            keep[i] = False
    return ps[keep]


def _log_product(terms: np.ndarray) -> float:
    # Compensated summation of the logs: the truncated product has ~1e5
    # factors near 1 and a plain running product would drown the tail bound
    # in roundoff.
    return math.fsum(terms.tolist())


def singular_series(
    n: FactoredInt, a: int, q: FactoredInt, prime_cutoff: int = DEFAULT_PRIME_CUTOFF
) -> SeriesValue:
    """Rudimentary form: explicit local correction per divisibility class.

    The prefactor is 6/(phi(q) pi^2).  Primes dividing the target get an
    exact (1 + 1/(p^2-1)); primes dividing q get (1 - 1/(p+1)) when p
    exactly divides q and also divides target - a, and (1 + 1/(p^2-1)) in
    the remaining classes; every other prime up to the cutoff contributes
    (1 - 1/((p^2-1)(p-1))).  The whole thing is zero exactly when some p^2
    divides both q and target - a.

    Tail: sum_{p > P} 1/((p^2-1)(p-1)) < sum_{n > P} 2/n^3 < 1/P^2, and the
    reported bound doubles that for safety, so tail_bound = 2/P^2.
    """
    a = _validate(a, q, prime_cutoff)
    diff = n.value - a
    if _shared_square(q, diff):
        return SeriesValue(0.0, 0.0, True, prime_cutoff)

    rational = Fraction(1, euler_phi(q))
    q_primes = frozenset(p for p, _ in q.factors)
    for p, _ in n.factors:
        if p not in q_primes:
            rational *= 1 + Fraction(1, p * p - 1)
    for p, e in q.factors:
        if e == 1 and diff % p == 0:
            rational *= 1 - Fraction(1, p + 1)
        else:
            rational *= 1 + Fraction(1, p * p - 1)

    excluded = q_primes | {p for p, _ in n.factors}
    pf = _bulk_primes(prime_cutoff, excluded).astype(np.float64)
    log_rest = _log_product(np.log1p(-1.0 / ((pf * pf - 1.0) * (pf - 1.0))))
    value = float(rational) * _SIX_OVER_PI_SQ * math.exp(log_rest)
    return SeriesValue(value, 2.0 / prime_cutoff**2, False, prime_cutoff)


def singular_series_eulerform(
    n: FactoredInt, a: int, q: FactoredInt, prime_cutoff: int = DEFAULT_PRIME_CUTOFF
) -> SeriesValue:
    """Euler-product form: every factor comes from Ramanujan sums.

    For p exactly dividing q the factor is 1 - c_p(target - a)/(p^2 - 1);
    for p^2 | q it is 1 - (c_p + c_{p^2})(target - a)/(p^2 - 1); for p not
    dividing q it is 1 + c_p(target)/((p^2-1)(p-1)).  The vanishing
    indicator is applied first, which keeps the p^2 | q factor consistent
    (it would hit zero by itself exactly on the indicator's support).

    Tail: the generic prime beyond the cutoff contributes at most 2/p^3,
    but a prime dividing the target contributes up to 1/(p^2-1), so the
    bound adds a doubled term per such prime: 2/P^2 + sum 2/(p^2-1) over
    p | target with p > P.
    """
    a = _validate(a, q, prime_cutoff)
    diff = n.value - a
    if _shared_square(q, diff):
        return SeriesValue(0.0, 0.0, True, prime_cutoff)

    rational = Fraction(1, euler_phi(q))
    for p, e in q.factors:
        c1 = ramanujan_sum(FactoredInt(p, ((p, 1),)), diff)
        if e == 1:
            rational *= 1 - Fraction(c1, p * p - 1)
        else:
            c2 = ramanujan_sum(FactoredInt(p * p, ((p, 2),)), diff)
            rational *= 1 - Fraction(c1 + c2, p * p - 1)
    assert rational != 0  # indicator already excluded the vanishing class

    q_primes = frozenset(p for p, _ in q.factors)
    kept = _bulk_primes(prime_cutoff, q_primes)
    pf = kept.astype(np.float64)
    # c_p(target) = -1 for the bulk; patch the finitely many p | target.
    terms = np.log1p(-1.0 / ((pf * pf - 1.0) * (pf - 1.0)))
    tail = 2.0 / prime_cutoff**2
    for p, _ in n.factors:
        if p in q_primes:
            continue
        if p <= prime_cutoff:
            i = int(np.searchsorted(kept, p))
            terms[i] = math.log1p(1.0 / (p * p - 1.0))
        else:
            tail += 2.0 / (p * p - 1.0)
    value = float(rational) * _SIX_OVER_PI_SQ * math.exp(_log_product(terms))
    return SeriesValue(value, tail, False, prime_cutoff)


def series_lower_bound(modulus: int) -> Fraction:
    """Crude positive floor for any nonvanishing series value at this
    progression modulus: (1/phi(modulus)) * prod_{p <= modulus} (1 - 1/(p+1)).
    """
    if modulus < 1:
        raise ValueError("modulus must be positive")
    floor = Fraction(1)
    phi = Fraction(modulus)
    if modulus >= 2:
        for p in primes_up_to(modulus).tolist():
            floor *= Fraction(p, p + 1)
            if modulus % p == 0:
                phi *= Fraction(p - 1, p)
    return floor / phi
