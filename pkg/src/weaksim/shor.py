"""Weak simulation of the period-finding circuit from ``(r, x_min)`` alone.

The first-register distribution factorizes into a uniform "which peak" part
and a single wrapped peak ``rho(v)``, ``v`` in ``[0, q)``. ``rho`` is sampled
by rejection from the envelope ``eta``; the envelope itself is sampled by
sorting it into a monotone sequence and drawing from geometric buckets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .distribution import ExactDistribution
from .numtheory import (
    DeepFactoredInteger,
    PeriodStructure,
    kalai_sample_deep,
    kalai_sample_deep_batch,
    period_structure,
    ultimate_period,
)
from .rng import as_generator

# Constant bounds on the four pieces of sum(eta): S1, S2a, S2b, S3.
S1_BOUND = 1 + 3 / math.pi
S2A_BOUND = 8.0
S2B_BOUND = 2 * math.sqrt(2) / math.pi
S3_BOUND = 1.0
NU_BOUND = S1_BOUND + S2A_BOUND + S2B_BOUND + S3_BOUND


def reduce_fraction(r: int, n_x: int) -> tuple[int, int]:
    """``(p, q)`` with ``p/q == r / 2**n_x`` in lowest terms."""
    if r < 1:
        raise ValueError("r must be positive")
    size = 1 << n_x
    g = math.gcd(r, size)
    return r // g, size // g


@dataclass(frozen=True)
class RhoParams:
    M: int
    q: int
    p: int = 1
    delta: float = 0.0

    @classmethod
    def create(cls, M: int, q: int, p: int = 1) -> "RhoParams":
        if M < 0 or q < 1:
            raise ValueError("need M >= 0 and q >= 1")
        if math.gcd(p, q) != 1:
            raise ValueError(f"p={p} and q={q} are not coprime")
        delta = q / (2 * math.pi) * math.acos(1 - 2 / (M + 1) ** 2)
        return cls(M, q, p, delta)

    @classmethod
    def for_period(cls, r: int, n_x: int, M: int) -> "RhoParams":
        p, q = reduce_fraction(r, n_x)
        return cls.create(M, q, p)

    @property
    def degenerate(self) -> bool:
        """Peak is a single point (``q | M+1``) or flat (``M == 0``)."""
        return self.M == 0 or (self.M + 1) % self.q == 0


def rho(v: int, params: RhoParams) -> float:
    """Probability of ``v`` under the wrapped peak; ``v = 0`` by continuity."""
    M, q = params.M, params.q
    v %= q
    if v == 0:
        return (M + 1) / q
    k = v * (M + 1) % q
    if k == 0:
        return 0.0
    ratio = math.sin(math.pi * k / q) / math.sin(math.pi * v / q)
    return ratio * ratio / (q * (M + 1))


def eta(v: int, params: RhoParams) -> float:
    """Envelope ``min((M+1)**2, 2 / (1 - cos(2 pi v / q))) / (q (M+1))``."""
    M, q = params.M, params.q
    v %= q
    if v == 0:
        return (M + 1) / q
    s = math.sin(math.pi * v / q)
    return min((M + 1) ** 2, 1 / (s * s)) / (q * (M + 1))


def rho_table(params: RhoParams) -> np.ndarray:
    M, q = params.M, params.q
    v = np.arange(q, dtype=np.int64)
    k = v * (M + 1) % q
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.sin(np.pi * k / q) / np.sin(np.pi * v / q)
        out = ratio * ratio / (q * (M + 1))
    out[k == 0] = 0.0
    out[0] = (M + 1) / q
    return out


def eta_table(params: RhoParams) -> np.ndarray:
    M, q = params.M, params.q
    v = np.arange(q, dtype=np.int64)
    with np.errstate(divide="ignore"):
        s = np.sin(np.pi * v / q)
        out = np.minimum((M + 1) ** 2, 1 / (s * s)) / (q * (M + 1))
    out[0] = (M + 1) / q
    return out


def nu(params: RhoParams) -> float:
    """Expected proposals per accepted sample, ``sum(eta)`` (``sum(rho) == 1``)."""
    return float(eta_table(params).sum())


def nu_terms(params: RhoParams) -> dict[str, float]:
    """``sum(eta)`` split over the cap, first tail point, rest of tail and midpoint."""
    M, q = params.M, params.q
    k = math.floor(params.delta)
    scale = 4 / (q * (M + 1))
    s1 = (M + 1) / q * (2 * k + 1)
    s3 = 1 / (q * (M + 1)) if q % 2 == 0 and q > 1 else 0.0
    s2a = 0.0
    s2b = 0.0
    last = q // 2 - 1 if q % 2 == 0 else q // 2
    if k + 1 <= last:
        s2a = scale / (1 - math.cos(2 * math.pi * (k + 1) / q))
        v = np.arange(k + 2, last + 1, dtype=float)
        s2b = float(scale * np.sum(1 / (1 - np.cos(2 * np.pi * v / q))))
    return {"S1": s1, "S2a": s2a, "S2b": s2b, "S3": s3}


def delta_bounds(params: RhoParams) -> tuple[float, float]:
    """Lower and upper bounds on the cap half-width ``delta``."""
    m1 = params.M + 1
    lower = params.q / (2 * math.pi) * math.sqrt(2) / m1
    upper = params.q / math.pi * (1 / m1 + 1 / m1**2)
    return lower, upper


def sorted_to_v(vbar, q: int):
    """Position in the decreasing rearrangement of eta -> ``v``.

    Alternates left and right of the peak: 0, q-1, 1, q-2, ...
    """
    half = vbar // 2
    return np.where(vbar % 2 == 0, half, q - 1 - half) if isinstance(vbar, np.ndarray) else (
        half if vbar % 2 == 0 else q - 1 - half
    )


# -- proposal samplers -------------------------------------------------------


class ReferenceProposal:
    """Draws ``v`` proportional to eta from the full cumulative table."""

    MAX_Q = 1 << 20

    def __init__(self, params: RhoParams):
        if params.q > self.MAX_Q:
            raise ValueError("reference proposal table limited to q <= 2**20")
        self.params = params
        table = eta_table(params)
        self.cumulative = np.cumsum(table)
        self.total = float(self.cumulative[-1])

    def sample(self, rng) -> int:
        u = rng.random() * self.total
        return min(int(np.searchsorted(self.cumulative, u, side="right")), self.params.q - 1)

    def sample_batch(self, size: int, gen: np.random.Generator) -> np.ndarray:
        u = gen.random(size) * self.total
        idx = np.searchsorted(self.cumulative, u, side="right")
        return np.minimum(idx, self.params.q - 1)


class FastProposal:
    """Draws ``v`` proportional to eta without materializing the table.

    In the rearranged order ``w(j) = eta(ceil(j / 2))`` is non-increasing, so
    the blocks ``{0}, [1, 2), [2, 4), [4, 8), ...`` are dominated by their
    first weight. A block is chosen by its dominating mass, a point uniformly
    inside it, and the point is kept with probability ``w(j) / w(start)``.
    Setup is O(log q), each draw O(1) expected.
    """

    def __init__(self, params: RhoParams):
        self.params = params
        q = params.q
        starts = [0]
        ends = [1]
        lo = 1
        while lo < q:
            hi = min(2 * lo, q)
            starts.append(lo)
            ends.append(hi)
            lo = hi
        self.starts = np.array(starts, dtype=np.int64)
        self.sizes = np.array(ends, dtype=np.int64) - self.starts
        self.caps = np.array([self.weight(s) for s in starts])
        self.cumulative = np.cumsum(self.sizes * self.caps)
        self.total = float(self.cumulative[-1])
        self._starts = starts
        self._sizes = self.sizes.tolist()
        self._caps = self.caps.tolist()
        self._cum = self.cumulative.tolist()

    def weight(self, j: int) -> float:
        return eta((j + 1) // 2, self.params)

    def sample_sorted(self, rng) -> int:
        cum, rand, below = self._cum, rng.random, rng.below
        while True:
            u = rand() * self.total
            b = 0
            while b < len(cum) - 1 and cum[b] <= u:
                b += 1
            j = self._starts[b] + below(self._sizes[b])
            if rand() * self._caps[b] < self.weight(j):
                return j

    def sample(self, rng) -> int:
        return int(sorted_to_v(self.sample_sorted(rng), self.params.q))

    def sample_batch(self, size: int, gen: np.random.Generator) -> np.ndarray:
        out = np.empty(size, dtype=np.int64)
        filled = 0
        q = self.params.q
        while filled < size:
            need = size - filled
            draw = need + need // 2 + 16
            b = np.searchsorted(self.cumulative, gen.random(draw) * self.total, side="right")
            b = np.minimum(b, self.starts.size - 1)
            j = self.starts[b] + gen.integers(0, self.sizes[b])
            w = eta_values((j + 1) // 2, self.params)
            keep = j[gen.random(draw) * self.caps[b] < w][:need]
            out[filled : filled + keep.size] = keep
            filled += keep.size
        return sorted_to_v(out, q)


def eta_values(v: np.ndarray, params: RhoParams) -> np.ndarray:
    M, q = params.M, params.q
    v = np.asarray(v) % q
    with np.errstate(divide="ignore"):
        s = np.sin(np.pi * v / q)
        out = np.minimum((M + 1) ** 2, 1 / (s * s)) / (q * (M + 1))
    return np.where(v == 0, (M + 1) / q, out)


def rho_values(v: np.ndarray, params: RhoParams) -> np.ndarray:
    M, q = params.M, params.q
    v = np.asarray(v, dtype=np.int64) % q
    k = v * (M + 1) % q
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.sin(np.pi * k / q) / np.sin(np.pi * v / q)
        out = ratio * ratio / (q * (M + 1))
    out = np.where(k == 0, 0.0, out)
    return np.where(v == 0, (M + 1) / q, out)


PROPOSALS = {"fast": FastProposal, "reference": ReferenceProposal}


def sample_proposal(params: RhoParams, rng, method: str = "fast") -> int:
    """One draw of ``v`` with probability ``eta(v) / sum(eta)``."""
    return PROPOSALS[method](params).sample(rng)


class RhoSampler:
    """Rejection sampler for ``rho`` with eta proposals.

    ``proposals`` and ``accepted`` accumulate over the sampler's lifetime, so
    ``mean_proposals`` estimates the expected number of proposals per sample.
    """

    def __init__(self, params: RhoParams, method: str = "fast"):
        self.params = params
        self.method = method
        self.proposal = None if params.degenerate else PROPOSALS[method](params)
        self.proposals = 0
        self.accepted = 0

    @property
    def mean_proposals(self) -> float:
        return self.proposals / self.accepted if self.accepted else float("nan")

    def _degenerate(self, draw):
        p = self.params
        if p.M == 0:
            return draw(p.q)
        return 0  # q divides M+1: all mass at v = 0

    def sample(self, rng) -> int:
        params = self.params
        if self.proposal is None:
            self.proposals += 1
            self.accepted += 1
            return self._degenerate(rng.below)
        while True:
            v = self.proposal.sample(rng)
            self.proposals += 1
            if rng.random() * eta(v, params) < rho(v, params):
                self.accepted += 1
                return v

    def sample_batch(self, size: int, gen: np.random.Generator) -> np.ndarray:
        params = self.params
        if self.proposal is None:
            self.proposals += size
            self.accepted += size
            if params.M == 0:
                return gen.integers(0, params.q, size)
            return np.zeros(size, dtype=np.int64)
        out = np.empty(size, dtype=np.int64)
        filled = 0
        while filled < size:
            need = size - filled
            draw = int(need * 1.5) + 16
            v = self.proposal.sample_batch(draw, gen)
            accept = gen.random(draw) * eta_values(v, params) < rho_values(v, params)
            hits = np.flatnonzero(accept)
            if hits.size > need:
                # count proposals only up to the last one used
                used = hits[need - 1] + 1
                hits = hits[:need]
            else:
                used = draw
            self.proposals += int(used)
            out[filled : filled + hits.size] = v[hits]
            filled += hits.size
        self.accepted += size
        return out


def sample_rho(params: RhoParams, rng, method: str = "fast") -> int:
    return RhoSampler(params, method).sample(rng)


@lru_cache(maxsize=4096)
def _cached_sampler(M: int, q: int, p: int) -> RhoSampler:
    return RhoSampler(RhoParams.create(M, q, p))


# -- the period-finding circuit ----------------------------------------------


def peak_size(period: PeriodStructure, n_x: int, x0: int) -> int:
    """``M``: the pre-image ``x0, x0 + r, ...`` below ``2**n_x`` has ``M + 1`` points."""
    return ((1 << n_x) - 1 - x0) // period.period


def exact_first_register(period: PeriodStructure, n_x: int, x0: int) -> ExactDistribution:
    """First-register distribution after measuring ``f = f(x0)``, from the closed form."""
    size = 1 << n_x
    M = peak_size(period, n_x, x0)
    params = RhoParams.for_period(period.period, n_x, M)
    xt = np.arange(size, dtype=np.int64)
    probs = params.q / size * rho_values(xt * params.p % params.q, params)
    return ExactDistribution(n_x, probs, (("x", n_x),))


def exact_joint(period: PeriodStructure, n_x: int, n_f: int | None = None) -> ExactDistribution:
    """Joint ``(x~, f)`` distribution by the formula (exponential-size output)."""
    if n_f is None:
        n_f = max(1, (period.n_modulus - 1).bit_length())
    size = 1 << n_x
    joint = np.zeros((size, 1 << n_f))
    classes: dict[int, list[int]] = {}
    for x in range(min(size, period.preperiod + period.period)):
        classes.setdefault(period.f(x), []).append(x)
    for fval, members in classes.items():
        x = members[0]
        if x < period.preperiod:
            joint[:, fval] = 1.0 / size / size
            continue
        count = peak_size(period, n_x, x) + 1
        joint[:, fval] = count / size * exact_first_register(period, n_x, x).probs
    return ExactDistribution(n_x + n_f, joint.reshape(-1), (("x", n_x), ("f", n_f)))


def _first_register(period: PeriodStructure, n_x: int, x0: int, rng) -> int:
    p, q = reduce_fraction(period.period, n_x)
    sampler = _cached_sampler(peak_size(period, n_x, x0), q, p)
    v = sampler.sample(rng)
    s = v * pow(p, -1, q) % q if q > 1 else 0
    blocks = (1 << n_x) // q
    assert blocks * q == 1 << n_x
    return s + rng.below(blocks) * q


def sample_shor(period: PeriodStructure, n_x: int, rng) -> tuple[int, int]:
    """One measurement ``(x~, f)`` of the period-finding circuit."""
    if n_x < 1:
        raise ValueError("n_x must be >= 1")
    size = 1 << n_x
    xbar = rng.below(size)
    fval = period.f(xbar)
    if xbar < period.preperiod:
        # not in the periodic part: the pre-image is {xbar}, its transform is flat
        return rng.below(size), fval
    return _first_register(period, n_x, period.representative(xbar), rng), fval


def _f_values(period: PeriodStructure, xs: np.ndarray) -> np.ndarray:
    span = period.preperiod + period.period
    if span <= 1 << 20:
        table = np.array([period.f(x) for x in range(span)], dtype=np.int64)
        reduced = np.where(
            xs < period.preperiod, xs, period.preperiod + (xs - period.preperiod) % period.period
        )
        return table[reduced]
    return np.array([period.f(int(x)) for x in xs], dtype=np.int64)


def sample_shor_batch(period: PeriodStructure, n_x: int, size: int, rng):
    """``size`` draws of :func:`sample_shor` as two int64 arrays ``(x~, f)``."""
    if not 1 <= n_x <= 62:
        raise ValueError("batch sampling supports 1 <= n_x <= 62")
    gen = as_generator(rng)
    width = 1 << n_x
    xbar = gen.integers(0, width, size)
    fvals = _f_values(period, xbar)
    out = np.empty(size, dtype=np.int64)
    pre = xbar < period.preperiod
    out[pre] = gen.integers(0, width, int(pre.sum()))
    rest = np.flatnonzero(~pre)
    x0 = period.preperiod + (xbar[rest] - period.preperiod) % period.period
    ms = (width - 1 - x0) // period.period
    p, q = reduce_fraction(period.period, n_x)
    pinv = pow(p, -1, q) if q > 1 else 0
    for M in np.unique(ms):
        idx = rest[ms == M]
        v = _cached_sampler(int(M), q, p).sample_batch(idx.size, gen)
        s = v * pinv % q
        out[idx] = s + gen.integers(0, width // q, idx.size) * q
    return out, fvals


# -- N in superposition ------------------------------------------------------


def period_from_deep(a: int, deep: DeepFactoredInteger) -> PeriodStructure:
    """Period structure of ``a**x mod N`` using only the two-level factorization of ``N``.

    ``a`` is reduced mod ``N`` first, which matters when ``N <= a``.
    """
    n = deep.value
    if n == 1:
        return PeriodStructure(0, 1, 1, 0, 1)
    return ultimate_period(a % n, deep)


def sample_superposed_n(a: int, n_N: int, n_x: int, rng) -> tuple[int, int, int]:
    """One measurement ``(N, x~, f)`` of the circuit with ``N`` in superposition.

    Only the register widths and ``a`` are needed: ``N`` is drawn uniformly in
    ``[1, 2**n_N]`` together with what is needed to compute its period.
    """
    if a < 2:
        raise ValueError("a must be >= 2")
    deep = kalai_sample_deep(1 << n_N, rng)
    period = period_from_deep(a, deep)
    xt, fval = sample_shor(period, n_x, rng)
    return deep.value, xt, fval


def sample_superposed_n_batch(a: int, n_N: int, n_x: int, size: int, rng):
    """Vectorized draws. Returns ``(N, x~, f, r)`` int64 arrays."""
    if a < 2:
        raise ValueError("a must be >= 2")
    gen = as_generator(rng)
    deeps = kalai_sample_deep_batch(1 << n_N, size, gen)
    ns = np.array([d.value for d in deeps], dtype=np.int64)
    periods = [period_from_deep(a, d) for d in deeps]
    rs = np.array([p.period for p in periods], dtype=np.int64)
    xt = np.empty(size, dtype=np.int64)
    fv = np.empty(size, dtype=np.int64)
    first: dict[int, PeriodStructure] = {}
    for n, per in zip(ns.tolist(), periods):
        first.setdefault(n, per)
    for n, per in first.items():
        idx = np.flatnonzero(ns == n)
        xt[idx], fv[idx] = sample_shor_batch(per, n_x, idx.size, gen)
    return ns, xt, fv, rs


def exact_superposed_joint(a: int, n_N: int, n_x: int, n_f: int | None = None) -> ExactDistribution:
    """Joint ``(N, x~, f)`` by the formula; register value ``k`` stands for ``N = k + 1``."""
    if n_f is None:
        n_f = max(1, n_N)
    count = 1 << n_N
    blocks = []
    for n in range(1, count + 1):
        per = PeriodStructure(0, 1, 1, 0, 1) if n == 1 else period_structure(a % n, n)
        blocks.append(exact_joint(per, n_x, n_f).probs / count)
    regs = (("N", n_N), ("x", n_x), ("f", n_f))
    return ExactDistribution(n_N + n_x + n_f, np.concatenate(blocks), regs)
