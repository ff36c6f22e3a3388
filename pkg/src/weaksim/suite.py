"""Acceptance checks: every sampler against an independent exact reference.

Each criterion returns a :class:`CriterionResult`. Statistical sub-checks use
significance 0.001 and are retried once with a fresh stream; a second failure
fails the criterion.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import grover, numtheory, shor, tractable
from .distribution import ExactDistribution
from .gates import gate, random_clifford, random_ht
from .oracle import (
    GateList,
    GroverShortened,
    InverseTransformSampler,
    ShorPeriod,
    ShorSuperposedN,
    simulate,
)
from .rng import RandomSource
from .stats import ALPHA, GofReport, chi_square_gof, homogeneity_test, tvd

DEFAULT_SEED = 20240611


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool = True
    failures: list[str] = field(default_factory=list)
    metrics: dict = field(default_factory=dict)
    retries: int = 0
    seconds: float = 0.0

    def fail(self, message: str) -> None:
        self.passed = False
        if len(self.failures) < 20:
            self.failures.append(message)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        summary = ", ".join(f"{k}={_fmt(v)}" for k, v in self.metrics.items())
        return f"{status} [{self.number}] {self.name}: {summary}"


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


class _Streams:
    """Hands out numbered sub-generators of one seed."""

    def __init__(self, seed: int, base: int):
        self.seed = seed
        self.next = base

    def __call__(self) -> np.random.Generator:
        self.next += 1
        return RandomSource(self.seed, self.next).numpy()


def gof_or_point(samples, dist: ExactDistribution) -> GofReport:
    """Chi-square, except for point masses where every sample must hit the point."""
    counts = np.bincount(np.asarray(samples, dtype=np.int64), minlength=dist.probs.size)
    support = dist.support(0.0)
    if support.size == 1:
        ok = counts[support[0]] == counts.sum()
        return GofReport(0.0 if ok else math.inf, 0, 1.0 if ok else 0.0, int(counts.sum()))
    return chi_square_gof(counts, dist)


def _retrying(result: CriterionResult, label: str, streams: _Streams, run) -> GofReport:
    """``run(gen) -> GofReport``; one retry on a fresh stream before failing."""
    report = run(streams())
    if not report.passed(ALPHA):
        result.retries += 1
        report = run(streams())
        if not report.passed(ALPHA):
            result.fail(f"{label}: p={report.p_value:.3g} twice")
    return report


# -- 1 and 2: period finding --------------------------------------------------


def _class_representatives(period, n_x: int) -> dict[int, int]:
    """``f value -> smallest x < 2**n_x`` with that value."""
    out: dict[int, int] = {}
    for x in range(min(1 << n_x, period.preperiod + period.period)):
        out.setdefault(period.f(x), x)
    return out


def _check_shor_pair(result, a, N, n_x, samples, streams, stats):
    period = numtheory.period_structure(a, N)
    if (period.period, period.preperiod) != numtheory.find_period_bruteforce(a, N):
        result.fail(f"a={a} N={N}: period disagrees with brute force")
    joint = simulate(ShorPeriod(a, N, n_x))
    size = 1 << n_x
    for fval, x in _class_representatives(period, n_x).items():
        cond = joint.conditional("f", fval).probs
        if x < period.preperiod:
            expect = np.full(size, 1.0 / size)
        else:
            expect = shor.exact_first_register(period, n_x, x).probs
        err = float(np.abs(cond - expect).max())
        stats["max_err"] = max(stats["max_err"], err)
        if err > 1e-9:
            result.fail(f"a={a} N={N} n_x={n_x} f={fval}: conditional off by {err:.2e}")
    n_f = joint.registers[1][1]

    def run(gen):
        xt, fv = shor.sample_shor_batch(period, n_x, samples, gen)
        return gof_or_point((xt << n_f) | fv, joint)

    report = _retrying(result, f"a={a} N={N} n_x={n_x}", streams, run)
    stats["min_p"] = min(stats["min_p"], report.p_value)
    stats["cases"] += 1


def criterion_shor_coprime(seed=DEFAULT_SEED, samples=100_000, n_max=32, widths=range(4, 9)):
    """Sampler vs oracle for ``gcd(a, N) = 1``."""
    result = CriterionResult(1, "period finding, gcd(a,N)=1")
    streams = _Streams(seed, 1_000_000)
    stats = {"cases": 0, "max_err": 0.0, "min_p": 1.0}
    for N in range(2, n_max + 1):
        for a in range(1, N):
            if math.gcd(a, N) == 1:
                for n_x in widths:
                    _check_shor_pair(result, a, N, n_x, samples, streams, stats)
    result.metrics = {**stats, "retries": result.retries}
    return result


def xmin_bound_exhaustive(n_limit: int = 4096) -> tuple[int, int]:
    """Check ``x_min <= log2 N`` for every ``1 <= a < N <= n_limit``.

    ``x`` is in the periodic part iff ``f(x) == f(x + phi(N))`` because the
    period divides ``phi(N)``; so it suffices to test ``x = floor(log2 N)``.
    Returns ``(pairs_checked, violations)``.
    """
    pairs = 0
    bad = 0
    for N in range(2, n_limit + 1):
        a = np.arange(1, N, dtype=np.int64)
        L = N.bit_length() - 1
        phi = numtheory.factorize(N)
        phi_n = 1
        for p, k in phi.factors:
            phi_n *= p ** (k - 1) * (p - 1)
        lhs = _vector_pow(a, L, N)
        rhs = _vector_pow(a, L + phi_n, N)
        bad += int(np.count_nonzero(lhs != rhs))
        pairs += a.size
    return pairs, bad


def _vector_pow(base: np.ndarray, exponent: int, modulus: int) -> np.ndarray:
    out = np.full(base.shape, 1 % modulus, dtype=np.int64)
    b = base % modulus
    while exponent:
        if exponent & 1:
            out = out * b % modulus
        b = b * b % modulus
        exponent >>= 1
    return out


def criterion_shor_general(seed=DEFAULT_SEED, samples=100_000, n_max=32, widths=range(1, 9), xmin_limit=4096):
    """Sampler vs oracle when ``gcd(a, N) > 1``, plus the preperiod bound."""
    result = CriterionResult(2, "period finding, gcd(a,N)>1")
    streams = _Streams(seed, 2_000_000)
    stats = {"cases": 0, "max_err": 0.0, "min_p": 1.0}
    for N in range(2, n_max + 1):
        for a in range(1, N):
            if math.gcd(a, N) > 1:
                for n_x in widths:
                    _check_shor_pair(result, a, N, n_x, samples, streams, stats)
    pairs, bad = xmin_bound_exhaustive(xmin_limit)
    if bad:
        result.fail(f"{bad} pairs with x_min > log2 N")
    result.metrics = {**stats, "xmin_pairs": pairs, "xmin_violations": bad, "retries": result.retries}
    return result


# -- 3: rejection efficiency ------------------------------------------------


def criterion_rho_efficiency(seed=DEFAULT_SEED, samples=100_000, log_q=range(4, 17), chi_max_log_q=12):
    result = CriterionResult(3, "rho rejection efficiency")
    streams = _Streams(seed, 3_000_000)
    worst = 0.0
    worst_nu = 0.0
    min_p = 1.0
    cases = 0
    for k in log_q:
        q = 1 << k
        for M in sorted({1, 2, q // 2, q - 1}):
            params = shor.RhoParams.create(M, q)
            terms = shor.nu_terms(params)
            bounds = {"S1": shor.S1_BOUND, "S2a": shor.S2A_BOUND, "S2b": shor.S2B_BOUND, "S3": shor.S3_BOUND}
            for name, value in terms.items():
                if value > bounds[name] + 1e-12:
                    result.fail(f"M={M} q={q}: {name}={value:.4f} above its bound")
            worst_nu = max(worst_nu, shor.nu(params))
            # the scalar path counts proposals one by one; the batch path is
            # what the chi-square uses
            rng = RandomSource(seed, streams.next + 500_000)
            scalar = shor.RhoSampler(params)
            for _ in range(samples // 20):
                scalar.sample(rng)
            sampler = shor.RhoSampler(params)
            sampler.sample_batch(samples, streams())
            rate = max(sampler.mean_proposals, scalar.mean_proposals)
            worst = max(worst, rate)
            if rate > 12:
                result.fail(f"M={M} q={q}: {rate:.3f} proposals per sample")
            if k <= chi_max_log_q:
                table = ExactDistribution(k, shor.rho_table(params))

                def run(g, params=params, table=table):
                    return gof_or_point(shor.RhoSampler(params).sample_batch(samples, g), table)

                report = _retrying(result, f"M={M} q={q}", streams, run)
                min_p = min(min_p, report.p_value)
            cases += 1
    result.metrics = {
        "cases": cases,
        "max_proposals_per_sample": worst,
        "max_exact_nu": worst_nu,
        "nu_bound": shor.NU_BOUND,
        "min_p": min_p,
        "retries": result.retries,
    }
    return result


# -- 4: Grover --------------------------------------------------------------------


def criterion_grover(seed=DEFAULT_SEED, runs=100_000, n=8, t=3, x0=37):
    result = CriterionResult(4, "shortened Grover")
    streams = _Streams(seed, 4_000_000)
    analytic = tvd(grover.two_point_distribution(n, t, x0), grover.oracle_sampler_distribution(n, t, x0))
    if analytic > 1e-12:
        result.fail(f"analytic TVD between the two samplers is {analytic:.3g}")

    def run(gen):
        box = grover.BlackBox.from_x0(n, x0)
        a = grover.sample_with_x0_batch(x0, n, t, runs, gen)
        b = grover.sample_with_oracle_batch(box, n, t, runs, gen)
        if not set(np.unique(np.concatenate([a, b]))) <= {0, x0}:
            return GofReport(math.inf, 0, 0.0, 2 * runs)
        size = 1 << n
        return homogeneity_test(np.bincount(a, minlength=size), np.bincount(b, minlength=size))

    report = _retrying(result, "two-sample", streams, run)
    grid = grover.bound_table(range(8, 31), range(1, 101))
    over = [(k, v) for k, v in grid.items() if v[0] > v[1]]
    if over:
        result.fail(f"N above 8(2t+1)^2+1 at {over[:5]}")
    rng = RandomSource(seed, 4_500_000)
    box = grover.BlackBox.from_x0(2, 3)
    certain = all(grover.sample_with_x0(3, 2, 1, rng) == 3 for _ in range(10_000))
    certain &= all(grover.sample_with_oracle(box, 2, 1, rng) == 3 for _ in range(2_000))
    if not certain:
        result.fail("n=2, t=1 did not always return x0")
    discrepancy = {
        (m, s): grover.oracle_discrepancy(m, s, 1)["tvd"] for m in (2, 3, 4) for s in (0, 1)
    }
    result.metrics = {
        "analytic_tvd": analytic,
        "two_sample_p": report.p_value,
        "grid_points": len(grid),
        "grid_violations": len(over),
        "n2t1_always_x0": certain,
        "oracle_tvd(n,t)": " ".join(f"{k}:{v:.4f}" for k, v in discrepancy.items()),
    }
    return result


# -- 5: N in superposition -----------------------------------------------------


def criterion_superposed(seed=DEFAULT_SEED, pairs=100_000, a=2):
    result = CriterionResult(5, "period finding with N in superposition")
    streams = _Streams(seed, 5_000_000)
    mismatches = 0
    checked = 0
    for n_N in range(1, 7):
        count = pairs if n_N == 6 else pairs // 10
        ns, _, _, rs = shor.sample_superposed_n_batch(a, n_N, max(1, n_N), count, streams())
        truth = {N: (1 if N == 1 else numtheory.find_period_bruteforce(a % N, N)[0]) for N in np.unique(ns).tolist()}
        expected = np.array([truth[N] for N in ns.tolist()])
        mismatches += int(np.count_nonzero(expected != rs))
        checked += count
    if mismatches:
        result.fail(f"{mismatches} sampled pairs with the wrong period")

    def uniform_n(gen, n_N=5):
        ns, _, _, _ = shor.sample_superposed_n_batch(a, n_N, 2, pairs, gen)
        return gof_or_point(ns - 1, ExactDistribution.uniform(n_N))

    unif = _retrying(result, "N uniformity", streams, uniform_n)

    joint = simulate(ShorSuperposedN(a, 3, 4))
    n_f = joint.registers[2][1]

    def joint_run(gen):
        ns, xt, fv, _ = shor.sample_superposed_n_batch(a, 3, 4, pairs, gen)
        packed = ((ns - 1) << (4 + n_f)) | (xt << n_f) | fv
        return packed

    packed = joint_run(streams())
    emp = np.bincount(packed, minlength=joint.probs.size) / pairs
    full = tvd(emp, joint.probs)
    # same comparison on the N >= 2 part only
    rest = slice(1 << (4 + n_f), None)
    restricted = tvd(emp[rest] / emp[rest].sum(), joint.probs[rest] / joint.probs[rest].sum())
    if max(full, restricted) >= 0.02:
        result.fail(f"joint TVD {full:.4f} (N>=2: {restricted:.4f})")
    result.metrics = {
        "pairs_checked": checked,
        "period_mismatches": mismatches,
        "uniformity_p": unif.p_value,
        "joint_tvd": full,
        "joint_tvd_N>=2": restricted,
        "retries": result.retries,
    }
    return result


# -- 6: Kalai ------------------------------------------------------------------------


def criterion_kalai(seed=DEFAULT_SEED, draws=1_000_000, n_max=1 << 20, uniform_draws=100_000):
    result = CriterionResult(6, "Kalai factored integers")
    streams = _Streams(seed, 6_000_000)
    violations = 0
    out = numtheory.kalai_sample_batch(n_max, draws, streams())
    values = np.empty(draws, dtype=np.int64)
    for i, fi in enumerate(out):
        product = 1
        for p, k in fi.factors:
            product *= p**k
            if not numtheory.is_prime(p):
                violations += 1
        if product != fi.value or not 1 <= fi.value <= n_max:
            violations += 1
        values[i] = fi.value
    rng = RandomSource(seed, 6_500_000)
    for _ in range(10_000):
        fi = numtheory.kalai_sample(n_max, rng)
        try:
            fi.validate()
        except ValueError:
            violations += 1
    if violations:
        result.fail(f"{violations} invariant violations")
    p_values = {}
    for bound in (2, 10, 30):

        def run(gen, bound=bound):
            vals = np.array([f.value for f in numtheory.kalai_sample_batch(bound, uniform_draws, gen)])
            return gof_or_point(vals - 1, ExactDistribution(math.ceil(math.log2(bound)), _uniform_probs(bound)))

        p_values[bound] = _retrying(result, f"uniformity n_max={bound}", streams, run).p_value
    result.metrics = {
        "draws": draws + 10_000,
        "violations": violations,
        **{f"p(n_max={b})": p for b, p in p_values.items()},
        "retries": result.retries,
    }
    return result


def _uniform_probs(bound: int) -> np.ndarray:
    width = 1 << math.ceil(math.log2(bound))
    probs = np.zeros(width)
    probs[:bound] = 1.0 / bound
    return probs


# -- 7: tractable families ----------------------------------------------------------


def criterion_tractable(seed=DEFAULT_SEED, samples=100_000, circuits=50, cosets=20):
    result = CriterionResult(7, "HT, Clifford and coset samplers")
    streams = _Streams(seed, 7_000_000)
    design = RandomSource(seed, 7_500_000).numpy()
    min_p = {"ht": 1.0, "clifford": 1.0, "coset": 1.0}
    for i in range(circuits):
        n = int(design.integers(1, 9))
        gates = random_ht(n, int(design.integers(0, 4 * n + 1)), design)
        dist = simulate(GateList(n, gates))
        rep = _retrying(result, f"HT #{i}", streams, lambda g: gof_or_point(tractable.ht_sample_batch(gates, samples, g, n), dist))
        min_p["ht"] = min(min_p["ht"], rep.p_value)
    for i in range(circuits):
        n = int(design.integers(1, 7))
        gates = random_clifford(n, int(design.integers(0, 41)), design)
        dist = simulate(GateList(n, gates))
        rep = _retrying(
            result, f"Clifford #{i}", streams, lambda g: gof_or_point(tractable.clifford_sample_batch(gates, samples, g, n), dist)
        )
        min_p["clifford"] = min(min_p["clifford"], rep.p_value)
    for i in range(cosets):
        spec = tractable.random_group_spec(design)
        members = tractable.coset_elements(spec)
        lookup = {e: j for j, e in enumerate(members)}
        width = max(1, (len(members) - 1).bit_length())
        probs = np.zeros(1 << width)
        probs[: len(members)] = 1.0 / len(members)

        def run(g, spec=spec, lookup=lookup, probs=probs):
            draws = tractable.coset_sample_batch(spec, samples, g)
            idx = np.array([lookup.get(tuple(row), -1) for row in draws.tolist()])
            if (idx < 0).any():
                return GofReport(math.inf, 0, 0.0, samples)
            return gof_or_point(idx, ExactDistribution(width, probs))

        rep = _retrying(result, f"coset #{i}", streams, run)
        min_p["coset"] = min(min_p["coset"], rep.p_value)
    result.metrics = {**{f"min_p_{k}": v for k, v in min_p.items()}, "retries": result.retries}
    return result


# -- 8: inverse-transform baseline -------------------------------------------------


def baseline_distributions(seed=DEFAULT_SEED) -> dict[str, ExactDistribution]:
    design = RandomSource(seed, 8_500_000).numpy()
    out = {
        "shor a=2 N=7 n_x=5": simulate(ShorPeriod(2, 7, 5)),
        "shor a=2 N=12 n_x=6": simulate(ShorPeriod(2, 12, 6)),
        "grover n=10 t=5": simulate(GroverShortened(10, 5, x0=123)),
        "superposed a=2 n_N=2 n_x=4": simulate(ShorSuperposedN(2, 2, 4)),
    }
    for i in range(4):
        n = int(design.integers(3, 11))
        gates = random_clifford(n, 30, design) + [
            gate("CP", int(q), int((q + 1) % n), theta=float(design.uniform(0, 2 * np.pi)))
            for q in design.integers(0, n, 3)
        ] + [gate("H", q) for q in range(n)]
        out[f"random circuit #{i} n={n}"] = simulate(GateList(n, gates))
    return out


def criterion_inverse_transform(seed=DEFAULT_SEED, samples=100_000):
    result = CriterionResult(8, "inverse-transform baseline")
    streams = _Streams(seed, 8_000_000)
    min_p = 1.0
    dists = baseline_distributions(seed)
    for label, dist in dists.items():
        sampler = InverseTransformSampler(dist)
        rep = _retrying(result, label, streams, lambda g: gof_or_point(sampler.sample_batch(samples, g), dist))
        min_p = min(min_p, rep.p_value)
    result.metrics = {"distributions": len(dists), "min_p": min_p, "retries": result.retries}
    return result


CRITERIA = {
    1: criterion_shor_coprime,
    2: criterion_shor_general,
    3: criterion_rho_efficiency,
    4: criterion_grover,
    5: criterion_superposed,
    6: criterion_kalai,
    7: criterion_tractable,
    8: criterion_inverse_transform,
}


def run_criterion(number: int, seed: int = DEFAULT_SEED) -> CriterionResult:
    start = time.perf_counter()
    result = CRITERIA[number](seed=seed)
    result.seconds = time.perf_counter() - start
    return result


def run_suite(seed: int = DEFAULT_SEED, numbers=None) -> list[CriterionResult]:
    return [run_criterion(k, seed) for k in (numbers or sorted(CRITERIA))]
