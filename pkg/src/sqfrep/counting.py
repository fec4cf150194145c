"""Ground-truth counting by segmented sieve.

Everything here is a brute-force oracle: the weighted representation count,
its von Mangoldt variant, square-free counts along progressions, and the
prime-power tally psi restricted to a progression.  Windows of a bounded
size are sieved one at a time so the memory footprint never depends on the
target, and every floating reduction is a compensated sum taken in a fixed
window order, so results are bit-identical for a given input regardless of
the thread count.

The base tables must reach the square root of the largest value touched: a
window is accepted only while hi - 1 <= tables.limit**2.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import chain

import numpy as np

from sqfrep.arith import CapacityError, SieveTables

DEFAULT_WINDOW = 1 << 20


@dataclass(frozen=True)
class CountResult:
    """One weighted count: log-weighted over primes, the raw count, and the
    von-Mangoldt-weighted total that also sees prime powers."""

    target: int
    residue: int
    modulus: int
    weighted: float
    unweighted: int
    lambda_weighted: float
    elapsed: float


def window_length() -> int:
    """Sieve window size in integers; SQFREP_MAX_WINDOW_BYTES caps the
    transient allocation (roughly eight bytes per integer of window)."""
    raw = os.environ.get("SQFREP_MAX_WINDOW_BYTES")
    if raw is None:
        return DEFAULT_WINDOW
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ValueError(f"SQFREP_MAX_WINDOW_BYTES={raw!r} is not an integer") from exc
    if cap <= 0:
        raise ValueError("SQFREP_MAX_WINDOW_BYTES must be positive")
    return max(1 << 10, cap // 8)


def _check_window(lo: int, hi: int, tables: SieveTables) -> None:
    if lo < 0 or hi <= lo:
        raise ValueError(f"bad window [{lo}, {hi})")
    if hi - 1 > tables.limit**2:
        raise CapacityError(
            f"window reaches {hi - 1}, beyond limit^2 = {tables.limit**2}"
        )


def _base_primes(top: int, tables: SieveTables) -> np.ndarray:
    pos = int(np.searchsorted(tables.primes, top, side="right"))
    return tables.primes[:pos]


def segmented_squarefree_sieve(lo: int, hi: int, tables: SieveTables) -> np.ndarray:
    """Boolean flags for [lo, hi): True where the value is square-free.

    Strikes multiples of p^2 for p up to sqrt(hi-1); the value 0 counts as
    not square-free.
    """
    _check_window(lo, hi, tables)
    out = np.ones(hi - lo, dtype=bool)
    if lo == 0:
        out[0] = False
    for p in _base_primes(math.isqrt(hi - 1), tables).tolist():
        p2 = p * p
        start = ((lo + p2 - 1) // p2) * p2
        if start < hi:
            out[start - lo :: p2] = False
    return out


def segmented_prime_sieve(lo: int, hi: int, tables: SieveTables) -> np.ndarray:
    """Boolean flags for [lo, hi): True where the value is prime."""
    _check_window(lo, hi, tables)
    out = np.ones(hi - lo, dtype=bool)
    for v in (0, 1):
        if lo <= v < hi:
            out[v - lo] = False
    for p in _base_primes(math.isqrt(hi - 1), tables).tolist():
        start = max(p * p, ((lo + p - 1) // p) * p)
        if start < hi:
            out[start - lo :: p] = False
    return out


def _windows(lo: int, hi: int, length: int):
    while lo < hi:
        yield lo, min(lo + length, hi)
        lo += length


def proper_prime_powers(top: int, tables: SieveTables) -> tuple[np.ndarray, np.ndarray]:
    """Sorted proper prime powers p^k <= top (k >= 2) with their log p."""
    vals: list[int] = []
    logs: list[float] = []
    for p in _base_primes(math.isqrt(max(top, 1)), tables).tolist():
        v = p * p
        if v > top:
            break
        lg = math.log(p)
        while v <= top:
            vals.append(v)
            logs.append(lg)
            v *= p
    order = sorted(range(len(vals)), key=vals.__getitem__)
    return (
        np.array([vals[i] for i in order], dtype=np.int64),
        np.array([logs[i] for i in order], dtype=np.float64),
    )


def _map_windows(work, spans, threads: int):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(work, spans))
    return [work(span) for span in spans]


def count_representations(
    target: int, residue: int, modulus: int, tables: SieveTables, threads: int = 1
) -> CountResult:
    """Sum mu^2(target - p) log p over primes p ≡ residue (mod modulus),
    2 <= p <= target - 1, in natural logs.

    lambda_weighted additionally admits proper prime powers n <= target in
    the progression (still damped by mu^2(target - n)); target - n = 0 is
    not square-free, so n = target never contributes.
    """
    residue %= modulus
    if math.gcd(residue, modulus) != 1:
        raise ValueError(f"class {residue} is not a unit mod {modulus}")
    if target < 3:
        raise ValueError("target must be at least 3")
    if target > tables.limit**2:
        raise CapacityError(
            f"target {target} beyond sieve coverage {tables.limit**2}"
        )
    started = time.perf_counter()
    power_vals, power_logs = proper_prime_powers(target - 1, tables)
    spans = list(_windows(2, target, window_length()))

    def work(span: tuple[int, int]) -> tuple[float, int, float]:
        lo, hi = span
        primes = segmented_prime_sieve(lo, hi, tables)
        # The mirror window: flag square-freeness of target - p, reversed so
        # index i lines up with p = lo + i.
        mirror = segmented_squarefree_sieve(target - hi + 1, target - lo + 1, tables)[
            ::-1
        ]
        keep = primes & mirror
        if modulus > 1:
            lane = np.zeros(hi - lo, dtype=bool)
            lane[(residue - lo) % modulus :: modulus] = True
            keep &= lane
        hits = np.flatnonzero(keep) + lo
        weighted = (
            math.fsum(np.log(hits.astype(np.float64)).tolist()) if hits.size else 0.0
        )
        lo_i, hi_i = np.searchsorted(power_vals, [lo, hi]).tolist()
        extra = math.fsum(
            power_logs[i]
            for i in range(lo_i, hi_i)
            if (int(power_vals[i]) - residue) % modulus == 0
            and mirror[int(power_vals[i]) - lo]
        )
        return weighted, int(hits.size), extra

    parts = _map_windows(work, spans, threads)
    weighted = math.fsum(p[0] for p in parts)
    lam = math.fsum(chain((p[0] for p in parts), (p[2] for p in parts)))
    return CountResult(
        target=target,
        residue=residue,
        modulus=modulus,
        weighted=weighted,
        unweighted=sum(p[1] for p in parts),
        lambda_weighted=lam,
        elapsed=time.perf_counter() - started,
    )


def squarefree_count_in_ap(
    target: int, residue: int, modulus: int, tables: SieveTables, threads: int = 1
) -> int:
    """Count n in [1, target] with n ≡ residue (mod modulus) and
    target - n square-free (so n = target drops out via mu^2(0) = 0)."""
    if modulus < 1 or target < 1:
        raise ValueError("target and modulus must be positive")
    residue %= modulus
    # Count over m = target - n instead: m in [0, target), one fixed class.
    m_class = (target - residue) % modulus
    spans = list(_windows(0, target, window_length()))

    def work(span: tuple[int, int]) -> int:
        lo, hi = span
        flags = segmented_squarefree_sieve(lo, hi, tables)
        return int(flags[(m_class - lo) % modulus :: modulus].sum())

    return sum(_map_windows(work, spans, threads))


def psi_in_ap(
    target: int, residue: int, modulus: int, tables: SieveTables, threads: int = 1
) -> float:
    """Chebyshev psi along a progression: sum of log p over prime powers
    p^k <= target with p^k ≡ residue (mod modulus)."""
    residue %= modulus
    if math.gcd(residue, modulus) != 1:
        raise ValueError(f"class {residue} is not a unit mod {modulus}")
    if target < 1:
        raise ValueError("target must be positive")
    if target > tables.limit**2:
        raise CapacityError(
            f"target {target} beyond sieve coverage {tables.limit**2}"
        )
    power_vals, power_logs = proper_prime_powers(target, tables)
    spans = list(_windows(2, target + 1, window_length()))

    def work(span: tuple[int, int]) -> tuple[float, float]:
        lo, hi = span
        primes = segmented_prime_sieve(lo, hi, tables)
        if modulus > 1:
            lane = np.zeros(hi - lo, dtype=bool)
            lane[(residue - lo) % modulus :: modulus] = True
            primes &= lane
        hits = np.flatnonzero(primes) + lo
        base = (
            math.fsum(np.log(hits.astype(np.float64)).tolist()) if hits.size else 0.0
        )
        lo_i, hi_i = np.searchsorted(power_vals, [lo, hi]).tolist()
        extra = math.fsum(
            power_logs[i]
            for i in range(lo_i, hi_i)
            if (int(power_vals[i]) - residue) % modulus == 0
        )
        return base, extra

    parts = _map_windows(work, spans, threads)
    return math.fsum(chain((p[0] for p in parts), (p[1] for p in parts)))
