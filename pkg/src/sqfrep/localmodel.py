"""Local densities on Z/qZ and their exact Hermitian products.

Two families of densities live here: the square-free family (plain,
sharpened, and mirrored through N - a) and the prime-progression family
(plain, sharpened, and ungated), together with the sum/difference vectors
built from them.  Values are exact: rational coefficients with the
transcendental 6/pi^2 carried as a formal exponent, so every stated identity
reduces to a Fraction comparison.

Sharpened densities are computed from their defining divisor sums; the
closed forms are asserted or tested against them, never substituted
silently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from sqfrep.arith import (
    FactoredInt,
    SieveTables,
    cubefree_split,
    divisors_with_cofactor_mobius,
    euler_phi,
    factorize,
    mobius,
    ramanujan_sum,
    star_scale,
)

PI_SQ_OVER_6 = math.pi * math.pi / 6


@dataclass(frozen=True)
class ProgressionContext:
    """The fixed triple behind every prime-side density: count n <= target
    with n in the progression residue mod modulus.

    residue is canonicalized into [0, modulus) and must be a unit.
    """

    target: int
    residue: int
    modulus: int

    def __post_init__(self) -> None:
        if self.target < 1 or self.modulus < 1:
            raise ValueError("target and modulus must be positive")
        object.__setattr__(self, "residue", self.residue % self.modulus)
        if math.gcd(self.residue, self.modulus) != 1:
            raise ValueError(
                f"residue {self.residue} is not a unit mod {self.modulus}"
            )


@dataclass(frozen=True)
class ScaledValue:
    """coeff * (6/pi^2)**pi_power, exactly."""

    coeff: Fraction
    pi_power: int

    def __post_init__(self) -> None:
        if self.pi_power < 0:
            raise ValueError("pi_power must be non-negative")
        if not isinstance(self.coeff, Fraction):
            object.__setattr__(self, "coeff", Fraction(self.coeff))

    def __add__(self, other: "ScaledValue") -> "ScaledValue":
        if self.pi_power != other.pi_power:
            raise ValueError(
                f"cannot add pi_power {self.pi_power} to {other.pi_power}"
            )
        return ScaledValue(self.coeff + other.coeff, self.pi_power)

    def __sub__(self, other: "ScaledValue") -> "ScaledValue":
        return self + (-other)

    def __neg__(self) -> "ScaledValue":
        return ScaledValue(-self.coeff, self.pi_power)

    def __mul__(self, other: "ScaledValue") -> "ScaledValue":
        return ScaledValue(self.coeff * other.coeff, self.pi_power + other.pi_power)

    def scale(self, factor, pi_shift: int = 0) -> "ScaledValue":
        """Multiply by an exact rational and shift the formal exponent."""
        return ScaledValue(self.coeff * Fraction(factor), self.pi_power + pi_shift)

    @property
    def is_zero(self) -> bool:
        return self.coeff == 0

    def to_float(self) -> float:
        return float(self.coeff) / PI_SQ_OVER_6**self.pi_power


@dataclass(frozen=True)
class LocalVector:
    """A function on Z/qZ: rational entries sharing one formal pi exponent."""

    modulus: int
    entries: tuple[Fraction, ...]
    pi_power: int

    def __post_init__(self) -> None:
        if len(self.entries) != self.modulus:
            raise ValueError("entry count must equal the modulus")

    def value_at(self, a: int) -> Fraction:
        return self.entries[a % self.modulus]

    def entry(self, a: int) -> ScaledValue:
        return ScaledValue(self.entries[a % self.modulus], self.pi_power)


def build_local_vector(
    modulus: int, fn: Callable[[int], ScaledValue]
) -> LocalVector:
    """Evaluate fn on 0..modulus-1 and pack the result, checking that the
    entries share one pi_power."""
    values = [fn(a) for a in range(modulus)]
    powers = {v.pi_power for v in values}
    if len(powers) != 1:
        raise ValueError(f"mixed pi_powers {sorted(powers)} in local vector")
    return LocalVector(modulus, tuple(v.coeff for v in values), powers.pop())


def local_product(f: LocalVector, g: LocalVector) -> ScaledValue:
    """(1/q) sum of f*g over residues; real entries, so no conjugation."""
    if f.modulus != g.modulus:
        raise ValueError(f"modulus mismatch: {f.modulus} vs {g.modulus}")
    q = f.modulus
    total = sum((x * y for x, y in zip(f.entries, g.entries)), Fraction(0))
    return ScaledValue(total / q, f.pi_power + g.pi_power)


def _require_cubefree(q: FactoredInt) -> None:
    if not q.is_cubefree:
        raise ValueError(f"{q.value} has a cubic prime factor")


def squarefree_density(q: FactoredInt, a: int) -> ScaledValue:
    """Density of square-free integers in the class a mod q, as a multiple
    of 6/pi^2.

    Zero exactly when some p^2 divides both a and q; otherwise the local
    correction for each p | q depends on whether p divides a.  Any modulus
    is fine here (square-freeness only sees a mod p^2); the cube-free
    restriction belongs to the sharpened vectors, not the plain density.
    """
    a %= q.value
    coeff = Fraction(1)
    for p, e in q.factors:
        if e >= 2 and a % (p * p) == 0:
            return ScaledValue(Fraction(0), 1)
        coeff *= Fraction(p * p, p * p - 1)
        if e == 1 and a % p == 0:
            coeff *= Fraction(p - 1, p)
    return ScaledValue(coeff, 1)


def squarefree_density_star(q: FactoredInt, a: int) -> ScaledValue:
    """Moebius sharpening of the square-free density over divisors of q.

    Computed from the defining sum; equals t(q) c_q(a) times 6/pi^2 for
    cubefree q (the closed form is exercised in the tests).  Vanishes when q
    has a cubic factor.
    """
    if not q.is_cubefree:
        return ScaledValue(Fraction(0), 1)
    total = Fraction(0)
    for d, mu in divisors_with_cofactor_mobius(q):
        total += mu * squarefree_density(d, a).coeff
    return ScaledValue(total, 1)


def mirror_density_star(ctx: ProgressionContext, q: FactoredInt, a: int) -> ScaledValue:
    """The sharpened square-free density reflected through the target:
    evaluated at target - a."""
    return squarefree_density_star(q, (ctx.target - a) % q.value)


def prime_density(
    ctx: ProgressionContext, q: FactoredInt, a: int, tables: SieveTables
) -> Fraction:
    """Expected density (times q) of prime-power mass on the class a mod q
    inside the fixed progression.

    Nonzero only when the pair of congruences mod q and mod the context
    modulus is consistent and a is a unit mod q; the value q/phi(lcm) is
    what the Chinese remainder theorem predicts.
    """
    _require_cubefree(q)
    a %= q.value
    if math.gcd(a, q.value) != 1:
        return Fraction(0)
    shared = math.gcd(q.value, ctx.modulus)
    if (a - ctx.residue) % shared != 0:
        return Fraction(0)
    lcm = q.value // shared * ctx.modulus
    return Fraction(q.value, euler_phi(factorize(lcm, tables)))


def prime_density_star(
    ctx: ProgressionContext, q: FactoredInt, a: int, tables: SieveTables
) -> Fraction:
    """Moebius sharpening of prime_density over divisors of q (defining sum;
    the closed form is a tested identity)."""
    _require_cubefree(q)
    total = Fraction(0)
    for d, mu in divisors_with_cofactor_mobius(q):
        total += mu * prime_density(ctx, d, a, tables)
    return total


def progression_split(
    ctx: ProgressionContext, q: FactoredInt, tables: SieveTables
) -> tuple[FactoredInt, FactoredInt]:
    """Split cubefree q against the context modulus.

    Writes q = g1 * m2 with g1 the square-free primes of q away from the
    context modulus and m2 the rest: g1 = q1/(q1, q'), m2 = (q1, q') q2^2
    in terms of the cubefree split q = q1 q2^2.  The parts are coprime.
    """
    q1, q2 = cubefree_split(q)
    g1_factors = []
    shared_factors = []
    for p, _ in q1.factors:
        if ctx.modulus % p == 0:
            shared_factors.append((p, 1))
        else:
            g1_factors.append((p, 1))
    m2_factors = sorted(shared_factors + [(p, 2) for p, _ in q2.factors])
    g1 = FactoredInt(math.prod(p for p, _ in g1_factors), tuple(g1_factors))
    m2 = FactoredInt(
        math.prod(p**e for p, e in m2_factors), tuple(m2_factors)
    )
    return g1, m2


def prime_density_star_ungated(
    ctx: ProgressionContext, q: FactoredInt, a: int, tables: SieveTables
) -> Fraction:
    """The sharpened prime density with the square-part divisibility gate
    removed: defined directly by its Ramanujan-sum product."""
    _require_cubefree(q)
    g1, m2 = progression_split(ctx, q, tables)
    mu_g1 = mobius(g1)
    assert mu_g1 != 0  # g1 divides a square-free number
    num = mu_g1 * ramanujan_sum(g1, a) * ramanujan_sum(m2, a - ctx.residue)
    den = euler_phi(factorize(ctx.modulus, tables)) * euler_phi(g1)
    return Fraction(num, den)


def alignment_term(
    ctx: ProgressionContext, q: FactoredInt, tables: SieveTables
) -> int:
    """c_{g1}(target) * c_{m2}(target - residue): the integer that measures
    how the two density families correlate at q.

    Equals +phi(q) exactly when g1 | target and m2 | (target - residue)
    (difference vector vanishes) and -phi(q) in the rarer anti-aligned case
    (sum vector vanishes); strictly between otherwise.
    """
    g1, m2 = progression_split(ctx, q, tables)
    return ramanujan_sum(g1, ctx.target) * ramanujan_sum(
        m2, ctx.target - ctx.residue
    )


def _model_vector(
    ctx: ProgressionContext, q: FactoredInt, tables: SieveTables, sign: int
) -> LocalVector:
    _require_cubefree(q)
    g1, m2 = progression_split(ctx, q, tables)
    mu_g1 = mobius(g1)
    assert mu_g1 != 0
    t_q = star_scale(q)
    rho_weight = Fraction(
        euler_phi(factorize(ctx.modulus, tables)) * euler_phi(g1), mu_g1
    )
    entries = []
    for a in range(q.value):
        mirror = mirror_density_star(ctx, q, a)
        lifted = mirror.scale(1 / t_q, -1)  # strip the 6t(q)/pi^2 prefactor
        rho_t = prime_density_star_ungated(ctx, q, a, tables)
        value = (lifted.coeff + sign * rho_weight * rho_t) / 2
        # The combination must collapse to a half-integer Ramanujan form.
        reduced = Fraction(
            ramanujan_sum(q, ctx.target - a)
            + sign * ramanujan_sum(g1, a) * ramanujan_sum(m2, a - ctx.residue),
            2,
        )
        assert value == reduced, (q.value, a, value, reduced)
        entries.append(value)
    return LocalVector(q.value, tuple(entries), 0)


def model_sum(
    ctx: ProgressionContext, q: FactoredInt, tables: SieveTables
) -> LocalVector:
    """The averaged local model: half the mirrored square-free density
    (rescaled to drop its prefactor) plus half the rescaled ungated prime
    density.  Entries are half-integers."""
    return _model_vector(ctx, q, tables, +1)


def model_diff(
    ctx: ProgressionContext, q: FactoredInt, tables: SieveTables
) -> LocalVector:
    """The difference of the two rescaled densities; identically zero
    exactly when alignment_term(q) = phi(q)."""
    return _model_vector(ctx, q, tables, -1)


def prime_model_twist(
    ctx: ProgressionContext, q: FactoredInt, tables: SieveTables
) -> Fraction:
    """Twisted sum of the sharpened prime density against the Ramanujan sum
    at target - a; multiplicative in q.

    The defining double sum over roots of unity collapses: the inner sum
    over r coprime to q of e_q(r (target - a)) is the Ramanujan sum itself.
    Not an integer in general (already q = 3 with a target not divisible
    by 3 and coprime context gives 3/2).
    """
    _require_cubefree(q)
    phi_ctx = euler_phi(factorize(ctx.modulus, tables))
    total = Fraction(0)
    for a in range(q.value):
        rho_s = prime_density_star(ctx, q, a, tables)
        if rho_s:
            total += phi_ctx * rho_s * ramanujan_sum(q, ctx.target - a)
    return total


def periodize(h: LocalVector, length: int) -> tuple[Fraction, ...]:
    """Lift a local vector to [1, length] by reducing the argument mod q."""
    if h.pi_power != 0:
        raise ValueError("periodize expects a dimensionless vector; scale first")
    return tuple(h.entries[n % h.modulus] for n in range(1, length + 1))


def collect(values: Sequence, q: int) -> LocalVector:
    """Collapse a function on [1, N] to residues mod q, scaled by q so that
    the local product against any h equals the plain sum of values * h(n).

    Adjoint to periodize: [collect(j) | h]_q = sum_n j(n) h(n mod q).
    """
    sums = [Fraction(0)] * q
    for offset, v in enumerate(values):
        if v:
            sums[(offset + 1) % q] += v
    return LocalVector(q, tuple(s * q for s in sums), 0)


def global_product(f: Sequence, g: Sequence):
    """Sum of f(n) g(n) over the common index range.

    Exact (int/Fraction) when both inputs are exact; compensated float
    summation as soon as either side carries floats.
    """
    if len(f) != len(g):
        raise ValueError(f"length mismatch: {len(f)} vs {len(g)}")
    if any(isinstance(x, float) for x in f) or any(
        isinstance(x, float) for x in g
    ):
        return math.fsum(float(x) * float(y) for x, y in zip(f, g))
    return sum(x * y for x, y in zip(f, g))
