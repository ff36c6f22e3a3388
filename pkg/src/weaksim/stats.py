"""Distances between distributions and goodness-of-fit of sampled outcomes."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincc

from .distribution import ExactDistribution
from .errors import DegenerateTestError

POOL_THRESHOLD = 5.0
ALPHA = 1e-3


def _probs(d) -> np.ndarray:
    return d.probs if isinstance(d, ExactDistribution) else np.asarray(d, dtype=float)


def tvd(a, b) -> float:
    """Total variation distance ``0.5 * sum |a - b|``."""
    pa, pb = _probs(a), _probs(b)
    if pa.shape != pb.shape:
        raise ValueError(f"distributions over different outcome sets: {pa.shape} vs {pb.shape}")
    return 0.5 * float(np.abs(pa - pb).sum())


def empirical(samples, size: int) -> np.ndarray:
    counts = np.bincount(np.asarray(samples, dtype=np.int64), minlength=size)
    return counts / max(1, counts.sum())


def chi2_sf(stat: float, dof: int) -> float:
    """Upper tail of the chi-square law via the regularized incomplete gamma."""
    if dof <= 0:
        return 1.0
    if math.isinf(stat):
        return 0.0
    return float(gammaincc(dof / 2, stat / 2))


@dataclass(frozen=True)
class GofReport:
    statistic: float
    degrees_of_freedom: int
    p_value: float
    sample_count: int
    pooled_bins: int = 0

    def passed(self, alpha: float = ALPHA) -> bool:
        return self.p_value >= alpha

    def to_dict(self) -> dict:
        return {
            "stat": self.statistic,
            "dof": self.degrees_of_freedom,
            "p": self.p_value,
            "n": self.sample_count,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _pool(expected: np.ndarray, observed: np.ndarray):
    """Merge every bin expecting fewer than 5 counts into one bin.

    The pooled bin is a set of outcomes, not a run of neighbours, so the result
    does not depend on how outcomes are labelled. If the pooled bin is itself
    still small it is merged into the smallest remaining bin.
    """
    small = expected < POOL_THRESHOLD
    exp_b = list(expected[~small])
    obs_b = list(observed[~small])
    pooled = int(small.sum())
    if pooled:
        e_small, o_small = float(expected[small].sum()), float(observed[small].sum())
        if e_small >= POOL_THRESHOLD or not exp_b:
            exp_b.append(e_small)
            obs_b.append(o_small)
        else:
            j = int(np.argmin(exp_b))
            exp_b[j] += e_small
            obs_b[j] += o_small
    return np.array(exp_b), np.array(obs_b), pooled


def chi_square_gof(counts, expected) -> GofReport:
    """Pearson chi-square of observed ``counts`` against an exact distribution.

    Observations in outcomes of probability zero make the statistic infinite.
    """
    observed = np.asarray(counts, dtype=float)
    probs = _probs(expected)
    if observed.shape != probs.shape:
        raise ValueError("counts and expected cover different outcome sets")
    n = float(observed.sum())
    if n < 1:
        raise ValueError("need at least one observation")
    impossible = probs <= 0
    if observed[impossible].sum() > 0:
        return GofReport(math.inf, 0, 0.0, int(n), int(impossible.sum()))
    keep = ~impossible
    exp_b, obs_b, pooled = _pool(n * probs[keep], observed[keep])
    if exp_b.size < 2:
        raise DegenerateTestError("all expected mass falls into a single bin")
    stat = float(((obs_b - exp_b) ** 2 / exp_b).sum())
    dof = exp_b.size - 1
    return GofReport(stat, dof, chi2_sf(stat, dof), int(n), pooled)


def sample_gof(samples, expected: ExactDistribution) -> GofReport:
    return chi_square_gof(np.bincount(np.asarray(samples, dtype=np.int64), minlength=expected.probs.size), expected)


def homogeneity_test(counts_a, counts_b) -> GofReport:
    """Two-sample chi-square test that both histograms come from one law."""
    a = np.asarray(counts_a, dtype=float)
    b = np.asarray(counts_b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("histograms over different outcome sets")
    na, nb = a.sum(), b.sum()
    if na < 1 or nb < 1:
        raise ValueError("need observations in both samples")
    total = a + b
    used = total > 0
    a, b, total = a[used], b[used], total[used]
    if total.size < 2:
        # both samples sit on one outcome: identical, nothing to test
        return GofReport(0.0, 0, 1.0, int(na + nb))
    ea = total * na / (na + nb)
    eb = total * nb / (na + nb)
    stat = float(((a - ea) ** 2 / ea).sum() + ((b - eb) ** 2 / eb).sum())
    dof = total.size - 1
    return GofReport(stat, dof, chi2_sf(stat, dof), int(na + nb))


def binomial_z(successes: int, trials: int, p: float) -> float:
    """Standardized deviation of a binomial count from its mean."""
    sd = math.sqrt(trials * p * (1 - p))
    if sd == 0:
        return 0.0 if successes == trials * p else math.inf
    return (successes - trials * p) / sd


def expected_empirical_tvd(probs, n: int) -> float:
    """Mean TVD between ``probs`` and an ``n``-sample empirical histogram (normal approx.)."""
    p = _probs(probs)
    return 0.5 * float(np.sum(np.sqrt(2 * p * (1 - p) / (math.pi * n))))
