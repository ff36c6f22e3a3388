"""Sampling the shortened Grover circuit.

Two samplers with identical output law on ``{0, x0}``: one is handed ``x0``,
the other only a black-box ``f`` and pays for the missing information with a
bounded number of random evaluations of ``f``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .distribution import ExactDistribution
from .errors import PreconditionError
from .rng import as_generator


def p_success(n: int, t: int) -> float:
    """Probability of reading the marked item after ``t`` iterations on ``n`` qubits."""
    if n < 1 or t < 0:
        raise ValueError("need n >= 1 and t >= 0")
    theta = math.asin(2.0 ** (-n / 2))
    return min(1.0, max(0.0, math.sin((2 * t + 1) * theta) ** 2))


def attempt_cap(t: int) -> int:
    """Polynomial bound on the number of black-box draws, ``8 (2t+1)**2 + 1``."""
    return 8 * (2 * t + 1) ** 2 + 1


def miss_probability(n: int, draws: int) -> float:
    """``(1 - 2**-n) ** draws``: chance that ``draws`` uniform guesses all miss."""
    return math.exp(draws * math.log1p(-(2.0**-n)))


def attempt_count(n: int, t: int) -> int:
    """Number of uniform draws ``ceil(log(1 - P) / log(1 - 2**-n))``.

    Rounding of the ratio is corrected so that the chance of seeing ``x0`` is
    never below ``P``; at ``P == 1`` the ratio is infinite and the polynomial
    cap is used instead.
    """
    P = p_success(n, t)
    if P >= 1.0:
        return attempt_cap(t)
    draws = max(1, math.ceil(math.log1p(-P) / math.log1p(-(2.0**-n))))
    while 1.0 - miss_probability(n, draws) < P:
        draws += 1
    return draws


def accept_probability(n: int, t: int, draws: int | None = None) -> float:
    """``P' = P / (1 - (1 - 2**-n)**draws)``, the chance of keeping a found ``x0``."""
    if draws is None:
        draws = attempt_count(n, t)
    P = p_success(n, t)
    hit = -math.expm1(draws * math.log1p(-(2.0**-n)))
    return min(1.0, P / hit)


@dataclass
class BlackBox:
    """Predicate ``f: [0, 2**n) -> {-1, +1}`` that counts its evaluations.

    Backed by a truth table (entries +-1) or a Python callable. A second
    ``-1`` is reported as soon as it is seen.
    """

    n: int
    table: np.ndarray | None = None
    func: object = None
    evaluations: int = 0
    _seen: int | None = field(default=None, repr=False)

    @classmethod
    def from_x0(cls, n: int, x0: int) -> "BlackBox":
        if not 0 <= x0 < 1 << n:
            raise ValueError("x0 out of range")
        table = np.ones(1 << n, dtype=np.int8)
        table[x0] = -1
        return cls(n, table=table)

    @classmethod
    def from_table(cls, values) -> "BlackBox":
        table = np.asarray(values, dtype=np.int8)
        n = int(table.size).bit_length() - 1
        if table.size != 1 << n or not np.isin(table, (-1, 1)).all():
            raise ValueError("truth table needs 2**n entries of +-1")
        return cls(n, table=table)

    def _note(self, x: int) -> None:
        if self._seen is None:
            self._seen = x
        elif self._seen != x:
            raise PreconditionError(f"f has more than one marked input ({self._seen}, {x})")

    def __call__(self, x: int) -> int:
        self.evaluations += 1
        value = int(self.table[x]) if self.table is not None else int(self.func(x))
        if value == -1:
            self._note(x)
        return value

    def marked_among(self, xs: np.ndarray) -> np.ndarray:
        """Boolean mask of ``f(x) == -1`` over an array of inputs."""
        xs = np.asarray(xs)
        self.evaluations += xs.size
        if self.table is not None:
            hit = self.table[xs] == -1
        else:
            hit = np.fromiter((self.func(int(x)) == -1 for x in xs.ravel()), bool, xs.size)
            hit = hit.reshape(xs.shape)
        for x in np.unique(xs[hit]):
            self._note(int(x))
        return hit

    def check_unique(self) -> int:
        """Exhaustively confirm a single marked input and return it (table only)."""
        if self.table is None:
            raise PreconditionError("exhaustive check needs a truth table")
        marked = np.flatnonzero(self.table == -1)
        if marked.size != 1:
            raise PreconditionError(f"f has {marked.size} marked inputs, expected 1")
        return int(marked[0])


def load_truth_table(text: str, n: int | None = None) -> BlackBox:
    """Parse ``x0=<int>`` or a bit vector (one char per input, ``1`` = marked)."""
    body = text.strip()
    if body.startswith("x0="):
        if n is None:
            raise ValueError("x0= form needs n")
        return BlackBox.from_x0(n, int(body[3:]))
    bits = [c for c in body if c in "01"]
    if n is not None and len(bits) != 1 << n:
        raise ValueError(f"expected {1 << n} bits, got {len(bits)}")
    return BlackBox.from_table([-1 if c == "1" else 1 for c in bits])


def sample_with_x0(x0: int, n: int, t: int, rng) -> int:
    """``x0`` with probability ``P(t)``, else 0."""
    if not 0 <= x0 < 1 << n:
        raise ValueError("x0 out of range")
    return x0 if rng.random() < p_success(n, t) else 0


def sample_with_oracle(f: BlackBox, n: int, t: int, rng) -> int:
    """Draw ``N`` uniform inputs, look for the marked one, accept it with ``P'``."""
    draws = attempt_count(n, t)
    found = None
    for _ in range(draws):
        x = rng.below(1 << n)
        if f(x) == -1:
            found = x
    if found is None:
        return 0
    return found if rng.random() < accept_probability(n, t, draws) else 0


def sample_with_x0_batch(x0: int, n: int, t: int, size: int, rng) -> np.ndarray:
    gen = as_generator(rng)
    return np.where(gen.random(size) < p_success(n, t), x0, 0)


def sample_with_oracle_batch(f: BlackBox, n: int, t: int, size: int, rng, chunk: int = 1 << 22):
    gen = as_generator(rng)
    draws = attempt_count(n, t)
    accept = accept_probability(n, t, draws)
    out = np.zeros(size, dtype=np.int64)
    rows = max(1, chunk // draws)
    for lo in range(0, size, rows):
        hi = min(size, lo + rows)
        xs = gen.integers(0, 1 << n, (hi - lo, draws))
        hit = f.marked_among(xs)
        found = hit.any(axis=1)
        idx = np.flatnonzero(found)
        # the marked input is unique, so any hit in the row names it
        first = xs[idx, hit[idx].argmax(axis=1)]
        keep = gen.random(idx.size) < accept
        out[lo + idx[keep]] = first[keep]
    return out


def two_point_distribution(n: int, t: int, x0: int) -> ExactDistribution:
    """Law of :func:`sample_with_x0`: mass ``P`` on ``x0`` and the rest on 0."""
    P = p_success(n, t)
    probs = np.zeros(1 << n)
    probs[0] += 1 - P
    probs[x0] += P
    return ExactDistribution(n, probs)


def oracle_sampler_distribution(n: int, t: int, x0: int) -> ExactDistribution:
    """Law of :func:`sample_with_oracle` from its steps: hit once in ``N`` draws, then accept."""
    draws = attempt_count(n, t)
    hit = 1 - miss_probability(n, draws)
    p_out = hit * accept_probability(n, t, draws)
    probs = np.zeros(1 << n)
    probs[0] += 1 - p_out
    probs[x0] += p_out
    return ExactDistribution(n, probs)


def bound_table(ns, ts) -> dict[tuple[int, int], tuple[int, int]]:
    """``(n, t) -> (N, cap)`` over a grid."""
    return {(n, t): (attempt_count(n, t), attempt_cap(t)) for n in ns for t in ts}


def smallest_n_with_bound(ts, ns) -> dict[int, int | None]:
    """For each ``t``, the least ``n0`` in ``ns`` such that ``N <= cap`` for all ``n >= n0`` in ``ns``."""
    ns = sorted(ns)
    out = {}
    for t in ts:
        n0 = None
        for n in reversed(ns):
            if attempt_count(n, t) > attempt_cap(t):
                break
            n0 = n
        out[t] = n0
    return out


def oracle_discrepancy(n: int, t: int, x0: int) -> dict[str, float]:
    """Compare the {0, x0} law with the statevector of the Grover circuit."""
    from .oracle import GroverShortened, simulate

    exact = simulate(GroverShortened(n, t, x0=x0))
    two_point = two_point_distribution(n, t, x0)
    rest = np.delete(exact.probs, list({0, x0}))
    return {
        "n": n,
        "t": t,
        "x0": x0,
        "tvd": 0.5 * float(np.abs(exact.probs - two_point.probs).sum()),
        "oracle_p_x0": exact[x0],
        "two_point_p_x0": two_point[x0],
        "oracle_p_0": exact[0],
        "oracle_mass_elsewhere": float(rest.sum()),
    }
