"""Integer arithmetic for the period-finding samplers.

Covers primality, Kalai's generator of uniformly distributed integers in
factored form (plain and two-level), Euler's phi and multiplicative orders
computed from those factorizations, and the (period, preperiod) structure of
``x -> a**x mod N``.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from math import gcd, isqrt

from .errors import DomainError

__all__ = [
    "DeepFactoredInteger",
    "FactoredInteger",
    "PeriodStructure",
    "deep_factorization",
    "euler_phi_factored",
    "factorize",
    "find_period_bruteforce",
    "gcd",
    "is_prime",
    "kalai_sample",
    "kalai_sample_batch",
    "kalai_sample_deep",
    "kalai_sample_deep_batch",
    "miller_rabin",
    "mod_inverse",
    "mod_pow",
    "multiplicative_order",
    "period_structure",
    "ultimate_period",
]

# Deterministic Miller-Rabin: the first 13 primes are a correct witness set
# for every n < 3.3e24, which contains the whole unsigned 64-bit range.
_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
MR_LIMIT = 3317044064679887385961981
_SIEVE_LIMIT = 1 << 22


def mod_pow(a: int, b: int, m: int) -> int:
    """``a**b mod m`` by square-and-multiply."""
    if m < 1:
        raise DomainError(f"modulus must be >= 1, got {m}")
    if b < 0:
        raise DomainError("negative exponent; use mod_inverse")
    return pow(a, b, m)


def mod_inverse(a: int, m: int) -> int:
    if gcd(a, m) != 1:
        raise DomainError(f"{a} is not invertible modulo {m}")
    return pow(a, -1, m)


@lru_cache(maxsize=1)
def _sieve() -> bytearray:
    flags = bytearray([1]) * _SIEVE_LIMIT
    flags[0] = flags[1] = 0
    for p in range(2, isqrt(_SIEVE_LIMIT - 1) + 1):
        if flags[p]:
            flags[p * p :: p] = bytes(len(range(p * p, _SIEVE_LIMIT, p)))
    return flags


def _prime_predicate(limit: int):
    if limit < _SIEVE_LIMIT:
        return _sieve().__getitem__
    return is_prime


def is_prime(n: int) -> bool:
    """Exact primality test for ``0 <= n < 3.3e24``."""
    if n < _SIEVE_LIMIT:
        if n < 0:
            raise DomainError("is_prime expects n >= 0")
        return bool(_sieve()[n])
    if n >= MR_LIMIT:
        raise DomainError(f"{n} is beyond the deterministic Miller-Rabin range")
    for p in _MR_WITNESSES:
        if n % p == 0:
            return False
    d, s = n - 1, 0
    while not d & 1:
        d >>= 1
        s += 1
    for w in _MR_WITNESSES:
        x = pow(w, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class FactoredInteger:
    """A positive integer together with its prime factorization.

    ``factors`` holds ``(prime, multiplicity)`` pairs with strictly
    increasing primes; the factorization of 1 is empty.
    """

    value: int
    factors: tuple[tuple[int, int], ...] = ()

    @classmethod
    def from_primes(cls, primes) -> "FactoredInteger":
        """Build from an iterable of primes, repeated according to multiplicity."""
        counts = Counter(primes)
        value = 1
        for p, k in counts.items():
            value *= p**k
        return cls(value, tuple(sorted(counts.items())))

    @classmethod
    def from_counter(cls, counts) -> "FactoredInteger":
        value = 1
        items = []
        for p, k in sorted(counts.items()):
            if k > 0:
                value *= p**k
                items.append((p, k))
        return cls(value, tuple(items))

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.factors)

    def validate(self) -> None:
        """Raise ``ValueError`` unless every invariant holds."""
        product = 1
        last = 1
        for p, k in self.factors:
            if p <= last:
                raise ValueError(f"primes not strictly increasing at {p}")
            if k < 1:
                raise ValueError(f"multiplicity of {p} must be positive")
            if not is_prime(p):
                raise ValueError(f"{p} is not prime")
            product *= p**k
            last = p
        if product != self.value:
            raise ValueError(f"factors multiply to {product}, not {self.value}")

    def __str__(self):
        if not self.factors:
            return "1"
        return "*".join(f"{p}^{k}" if k > 1 else str(p) for p, k in self.factors)


@dataclass(frozen=True)
class DeepFactoredInteger:
    """``N`` in factored form plus the factorization of ``p - 1`` for each prime ``p | N``."""

    outer: FactoredInteger
    predecessor_factors: tuple[FactoredInteger, ...] = ()

    @property
    def value(self) -> int:
        return self.outer.value

    def validate(self) -> None:
        self.outer.validate()
        if len(self.predecessor_factors) != len(self.outer.factors):
            raise ValueError("one predecessor factorization per prime is required")
        for (p, _), pred in zip(self.outer.factors, self.predecessor_factors):
            pred.validate()
            if pred.value != p - 1:
                raise ValueError(f"predecessor of {p} factors to {pred.value}")

    def restrict(self, keep) -> "DeepFactoredInteger":
        """Sub-factorization over the primes for which ``keep(p)`` is true."""
        pairs = [
            (pk, pred)
            for pk, pred in zip(self.outer.factors, self.predecessor_factors)
            if keep(pk[0])
        ]
        value = 1
        for (p, k), _ in pairs:
            value *= p**k
        return DeepFactoredInteger(
            FactoredInteger(value, tuple(pk for pk, _ in pairs)),
            tuple(pred for _, pred in pairs),
        )

    def __str__(self):
        inner = ", ".join(
            f"{p}-1={pred}" for (p, _), pred in zip(self.outer.factors, self.predecessor_factors)
        )
        return f"{self.outer} [{inner}]" if inner else str(self.outer)


def factorize(n: int) -> FactoredInteger:
    """Trial-division factorization. Only meant for small, desk-scale ``n``."""
    if n < 1:
        raise DomainError("factorize expects n >= 1")
    counts = Counter()
    m = n
    p = 2
    while p * p <= m:
        while m % p == 0:
            counts[p] += 1
            m //= p
        p += 1 if p == 2 else 2
    if m > 1:
        counts[m] += 1
    return FactoredInteger.from_counter(counts)


def deep_factorization(n: int) -> DeepFactoredInteger:
    """Two-level factorization of a given small ``n`` by trial division."""
    outer = factorize(n)
    return DeepFactoredInteger(outer, tuple(factorize(p - 1) for p in outer.primes))


def kalai_sample(n_max: int, rng) -> FactoredInteger:
    """Uniform integer in ``[1, n_max]`` with its prime factorization (Kalai).

    A decreasing chain ``n_max >= s_1 >= s_2 >= ... >= 1`` is drawn, the prime
    members are multiplied, and the product ``N`` is kept with probability
    ``N / n_max``.
    """
    if n_max < 1:
        raise DomainError("kalai_sample requires n_max >= 1")
    below = rng.below
    prime = _prime_predicate(n_max)
    while True:
        s = n_max
        value = 1
        primes = []
        while True:
            s = 1 + below(s)
            if s == 1:
                break
            if prime(s):
                value *= s
                if value > n_max:
                    break
                primes.append(s)
        if value <= n_max and below(n_max) < value:
            return FactoredInteger.from_primes(primes)


def _uniform_with_predecessor(s_max: int, rng) -> tuple[int, FactoredInteger | None]:
    """Uniform ``s`` in ``[1, s_max]`` together with the factorization of ``s - 1``.

    ``s = 1`` is drawn with probability ``1/s_max`` (no factorization of 0);
    otherwise ``s - 1`` comes from Kalai with bound ``s_max - 1``.
    """
    if s_max == 1 or rng.below(s_max) == 0:
        return 1, None
    m = kalai_sample(s_max - 1, rng)
    return m.value + 1, m


def kalai_sample_deep(n_max: int, rng) -> DeepFactoredInteger:
    """Kalai's algorithm run at two levels.

    The chain members are themselves drawn by Kalai's algorithm (shifted by
    one) so every prime of the result comes with the factorization of
    ``p - 1``. Factorizations of the inner primes minus one are never formed.
    """
    if n_max < 1:
        raise DomainError("kalai_sample_deep requires n_max >= 1")
    while True:
        s = n_max
        value = 1
        primes = []
        preds = {}
        while True:
            s, pred = _uniform_with_predecessor(s, rng)
            if s == 1:
                break
            if is_prime(s):
                value *= s
                if value > n_max:
                    break
                primes.append(s)
                preds[s] = pred
        if value <= n_max and rng.below(n_max) < value:
            outer = FactoredInteger.from_primes(primes)
            return DeepFactoredInteger(outer, tuple(preds[p] for p in outer.primes))


def euler_phi_factored(n: DeepFactoredInteger) -> FactoredInteger:
    """phi(N) in factored form, merging ``p**(nu-1)`` with the factors of ``p - 1``."""
    counts = Counter()
    for (p, nu), pred in zip(n.outer.factors, n.predecessor_factors):
        if nu > 1:
            counts[p] += nu - 1
        for q, mu in pred.factors:
            counts[q] += mu
    return FactoredInteger.from_counter(counts)


def multiplicative_order(a: int, n: int, phi: FactoredInteger) -> int:
    """Order of ``a`` in the unit group mod ``n``, given ``phi(n)`` factored.

    For each prime power ``q**lam`` of phi, find the largest ``tau <= lam``
    with ``a**(phi / q**tau) == 1``; the order is the product of
    ``q**(lam - tau)``.
    """
    if n < 1:
        raise DomainError("modulus must be >= 1")
    if gcd(a, n) != 1:
        raise DomainError(f"{a} and {n} are not coprime")
    if n == 1:
        return 1
    order = 1
    for q, lam in phi.factors:
        exponent = phi.value
        tau = 0
        while tau < lam and pow(a, exponent // q, n) == 1:
            exponent //= q
            tau += 1
        order *= q ** (lam - tau)
    return order


@dataclass(frozen=True)
class PeriodStructure:
    """Ultimate periodicity of ``f(x) = a**x mod N``.

    ``f(x) == f(x + period)`` for every ``x >= preperiod``; both numbers are
    minimal. ``stabilized_gcd`` is the limit of ``gcd(a**k, N)``.
    """

    a: int
    n_modulus: int
    period: int
    preperiod: int = 0
    stabilized_gcd: int = field(default=1)

    @property
    def r(self) -> int:
        return self.period

    @property
    def x_min(self) -> int:
        return self.preperiod

    def f(self, x: int) -> int:
        return pow(self.a, x, self.n_modulus)

    def representative(self, x: int) -> int:
        """Smallest ``x0 >= preperiod`` with ``f(x0) == f(x)``, for ``x >= preperiod``."""
        return self.preperiod + (x - self.preperiod) % self.period

    def check(self, horizon: int | None = None) -> None:
        """Verify periodicity and minimality by direct evaluation."""
        r, x_min = self.period, self.preperiod
        end = x_min + 2 * r if horizon is None else horizon
        values = [self.f(x) for x in range(end + r + 1)]
        for x in range(x_min, end + 1):
            if values[x] != values[x + r]:
                raise AssertionError(f"f({x}) != f({x + r})")
        if x_min > 0 and values[x_min - 1] == values[x_min - 1 + r]:
            raise AssertionError("preperiod is not minimal")
        for r2 in range(1, r):
            if all(values[x] == values[x + r2] for x in range(x_min, x_min + r)):
                raise AssertionError(f"period {r2} < {r} also works")


def _stabilized_gcd(a: int, n: int) -> tuple[int, int]:
    """``(d, k)``: limit of ``d_k = gcd(a**k, n)`` and the first ``k`` where it is reached."""
    d_prev = 1  # d_0 = gcd(1, n)
    power = 1
    for k in range(1, n.bit_length() + 2):
        power = power * a % n
        d = gcd(power, n)
        if d == d_prev:
            return d, k - 1
        d_prev = d
    raise AssertionError("gcd(a^k, N) failed to stabilize within log2(N) steps")


def ultimate_period(a: int, n: DeepFactoredInteger | int) -> PeriodStructure:
    """Period and preperiod of ``a**x mod N`` without factoring anything new.

    The stabilized gcd ``d`` splits off every prime shared with ``a``; the
    period is the order of ``a`` modulo ``N/d``, with ``phi(N/d)`` read off
    the two-level factorization of ``N``. The preperiod is then found by a
    direct scan, which stops within ``log2(N)`` steps.
    """
    deep = n if isinstance(n, DeepFactoredInteger) else deep_factorization(n)
    modulus = deep.value
    if modulus == 1:
        return PeriodStructure(a, 1, 1, 0, 1)
    a %= modulus
    d, _ = _stabilized_gcd(a, modulus)
    cofactor = modulus // d
    if cofactor == 1:
        r = 1
    else:
        sub = deep.restrict(lambda p: d % p != 0)
        assert sub.value == cofactor
        r = multiplicative_order(a % cofactor, cofactor, euler_phi_factored(sub))
    bound = modulus.bit_length()
    x = 0
    fx = 1 % modulus
    ar = pow(a, r, modulus)
    while fx != fx * ar % modulus:
        x += 1
        fx = fx * a % modulus
        if x > bound:
            raise AssertionError(f"preperiod of {a} mod {modulus} exceeds log2(N)")
    return PeriodStructure(a, modulus, r, x, d)


def period_structure(a: int, n: int) -> PeriodStructure:
    """Period structure for a fixed small modulus (trial-division factorization)."""
    return ultimate_period(a, deep_factorization(n))


def find_period_bruteforce(a: int, n: int) -> tuple[int, int]:
    """``(r, x_min)`` by listing ``a**x mod n`` until a value repeats."""
    if n < 1:
        raise DomainError("modulus must be >= 1")
    seen = {}
    x = 0
    value = 1 % n
    while value not in seen:
        seen[value] = x
        x += 1
        value = value * a % n
    first = seen[value]
    return x - first, first


def miller_rabin(n: int) -> bool:
    """Deterministic Miller-Rabin without the sieve shortcut (verification path)."""
    if n < 2:
        return False
    for p in _MR_WITNESSES:
        if n % p == 0:
            return n == p
    if n >= MR_LIMIT:
        raise DomainError(f"{n} is beyond the deterministic Miller-Rabin range")
    d, s = n - 1, 0
    while not d & 1:
        d >>= 1
        s += 1
    for w in _MR_WITNESSES:
        x = pow(w, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


# --- vectorized Kalai -------------------------------------------------------
# Same chain/accept procedure as kalai_sample, run for many draws at once with
# numpy. Bounds must stay below the sieve limit so primality is a table lookup.


@lru_cache(maxsize=1)
def _sieve_array():
    import numpy as np

    return np.frombuffer(bytes(_sieve()), dtype=np.uint8).astype(bool)


def _pack_rows(n, positions, primes):
    """Scatter ``(position, prime)`` pairs into a zero-padded ``(n, width)`` array."""
    import numpy as np

    order = np.lexsort((-primes, positions))
    positions, primes = positions[order], primes[order]
    counts = np.bincount(positions, minlength=n)
    width = int(counts.max(initial=0))
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    rank = np.arange(positions.size) - starts[positions]
    out = np.zeros((n, width), dtype=np.int64)
    out[positions, rank] = primes
    return out


def _kalai_rows(bounds, gen):
    """Kalai draws for an array of bounds. Returns ``(values, primes)``.

    ``primes`` is a 2-D int64 array, one row per draw, zero-padded, primes in
    decreasing order.
    """
    import numpy as np

    sieve = _sieve_array()
    bounds = np.asarray(bounds, dtype=np.int64)
    n = bounds.size
    values = np.ones(n, dtype=np.int64)
    hit_pos, hit_prime = [], []
    pending = np.arange(n)
    while pending.size:
        b = bounds[pending]
        s = b.copy()
        value = np.ones_like(b)
        steps_pos, steps_prime = [], []
        idx = np.arange(b.size)
        while idx.size:
            drawn = gen.integers(1, s[idx] + 1)
            s[idx] = drawn
            more = drawn > 1
            idx, drawn = idx[more], drawn[more]
            prime = sieve[drawn]
            pidx, pval = idx[prime], drawn[prime]
            value[pidx] *= pval
            steps_pos.append(pidx)
            steps_prime.append(pval)
            idx = idx[value[idx] <= b[idx]]
        accept = (value <= b) & (gen.integers(0, b) < value)
        done = pending[accept]
        values[done] = value[accept]
        if steps_pos:
            pos = np.concatenate(steps_pos)
            pr = np.concatenate(steps_prime)
            keep = accept[pos]
            hit_pos.append(pending[pos[keep]])
            hit_prime.append(pr[keep])
        pending = pending[~accept]
    if hit_pos:
        primes = _pack_rows(n, np.concatenate(hit_pos), np.concatenate(hit_prime))
    else:
        primes = np.zeros((n, 0), dtype=np.int64)
    return values, primes


def _factored_from_row(row) -> FactoredInteger:
    return FactoredInteger.from_primes(row[row > 0].tolist())


def kalai_sample_batch(n_max: int, size: int, rng) -> list[FactoredInteger]:
    """``size`` independent draws of :func:`kalai_sample`, vectorized."""
    from .rng import as_generator

    if n_max < 1:
        raise DomainError("kalai_sample requires n_max >= 1")
    if n_max >= _SIEVE_LIMIT:
        return [kalai_sample(n_max, rng) for _ in range(size)]
    import numpy as np

    _, primes = _kalai_rows(np.full(size, n_max), as_generator(rng))
    return [_factored_from_row(row) for row in primes]


def kalai_sample_deep_batch(n_max: int, size: int, rng) -> list[DeepFactoredInteger]:
    """``size`` independent draws of :func:`kalai_sample_deep`, vectorized."""
    from .rng import as_generator

    if n_max < 1:
        raise DomainError("kalai_sample_deep requires n_max >= 1")
    if n_max >= _SIEVE_LIMIT:
        return [kalai_sample_deep(n_max, rng) for _ in range(size)]
    import numpy as np

    gen = as_generator(rng)
    sieve = _sieve_array()
    result: list[DeepFactoredInteger | None] = [None] * size
    pending = np.arange(size)
    while pending.size:
        k = pending.size
        s = np.full(k, n_max, dtype=np.int64)
        value = np.ones(k, dtype=np.int64)
        alive = np.ones(k, dtype=bool)
        found: list[list[tuple[int, np.ndarray]]] = [[] for _ in range(k)]
        while alive.any():
            idx = np.flatnonzero(alive)
            cur = s[idx]
            # s = 1 with probability 1/s, else 1 + (Kalai draw below s)
            one = (cur == 1) | (gen.integers(0, cur) == 0)
            s[idx[one]] = 1
            grow = idx[~one]
            if grow.size:
                inner_vals, inner_primes = _kalai_rows(s[grow] - 1, gen)
                s[grow] = inner_vals + 1
                hit = sieve[s[grow]]
                for j, row in zip(grow[hit], inner_primes[hit]):
                    found[j].append((int(s[j]), row))
            alive[idx] = s[idx] > 1
            prime = alive & sieve[s]
            value = np.where(prime, value * s, value)
            alive &= value <= n_max
        accept = (value <= n_max) & (gen.integers(0, n_max, size=k) < value)
        for j in np.flatnonzero(accept):
            preds = {p: row for p, row in found[j]}
            outer = FactoredInteger.from_primes(p for p, _ in found[j])
            result[pending[j]] = DeepFactoredInteger(
                outer, tuple(_factored_from_row(preds[p]) for p in outer.primes)
            )
        pending = pending[~accept]
    return result
