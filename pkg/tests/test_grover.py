import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weaksim.errors import PreconditionError
from weaksim.grover import (
    BlackBox,
    accept_probability,
    attempt_cap,
    attempt_count,
    load_truth_table,
    miss_probability,
    oracle_discrepancy,
    oracle_sampler_distribution,
    p_success,
    two_point_distribution,
    sample_with_oracle,
    sample_with_oracle_batch,
    sample_with_x0,
    sample_with_x0_batch,
    smallest_n_with_bound,
)
from weaksim.rng import RandomSource
from weaksim.stats import binomial_z, homogeneity_test


class TestSuccessProbability:
    def test_certain(self):
        assert p_success(2, 1) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("n", [1, 2, 5, 10, 30])
    def test_no_iterations(self, n):
        assert p_success(n, 0) == pytest.approx(2.0**-n)

    def test_n4_t1(self):
        # sin(3 theta) = 3 s - 4 s**3 with s = 1/4
        assert p_success(4, 1) == pytest.approx((3 / 4 - 1 / 16) ** 2, abs=1e-15)

    def test_in_unit_interval(self):
        for n in range(1, 31):
            for t in range(0, 200, 7):
                assert 0 <= p_success(n, t) <= 1

    def test_rejects(self):
        with pytest.raises(ValueError):
            p_success(0, 1)
        with pytest.raises(ValueError):
            p_success(3, -1)


class TestAttemptCount:
    def test_n4_t1(self):
        assert attempt_count(4, 1) == 10
        assert attempt_count(4, 1) <= attempt_cap(1) == 73

    def test_certain_uses_cap(self):
        assert attempt_count(2, 1) == attempt_cap(1)
        assert accept_probability(2, 1) == 1.0

    def test_hit_chance_covers_p(self):
        for n in range(1, 25):
            for t in range(0, 60, 3):
                draws = attempt_count(n, t)
                assert draws >= 1
                assert 1 - miss_probability(n, draws) >= p_success(n, t) * (1 - 1e-12)

    def test_accept_in_unit_interval(self):
        for n in range(1, 31):
            for t in list(range(0, 50)) + list(range(50, 1001, 37)):
                pa = accept_probability(n, t)
                assert 0 < pa <= 1, (n, t)

    def test_bound_grid(self):
        for n in range(8, 31):
            for t in range(1, 101):
                assert attempt_count(n, t) <= attempt_cap(t), (n, t)

    def test_smallest_n(self):
        table = smallest_n_with_bound(range(1, 11), range(1, 31))
        for t, n0 in table.items():
            assert n0 is not None and n0 <= 8
            assert all(attempt_count(n, t) <= attempt_cap(t) for n in range(n0, 31))

    def test_exact_law_matches(self):
        for n in range(1, 12):
            for t in range(6):
                a = two_point_distribution(n, t, (1 << n) - 1)
                b = oracle_sampler_distribution(n, t, (1 << n) - 1)
                # at P == 1 the capped draw count leaves a miss chance of (1 - 2**-n)**N
                slack = miss_probability(n, attempt_count(n, t)) if p_success(n, t) == 1 else 0
                np.testing.assert_allclose(a.probs, b.probs, atol=1e-12 + slack)


class TestBlackBox:
    def test_counts_evaluations(self):
        f = BlackBox.from_x0(3, 5)
        assert [f(x) for x in range(8)] == [1, 1, 1, 1, 1, -1, 1, 1]
        assert f.evaluations == 8
        assert f.check_unique() == 5

    def test_callable(self):
        f = BlackBox(4, func=lambda x: -1 if x == 9 else 1)
        assert f.marked_among(np.array([1, 9, 9])).tolist() == [False, True, True]

    def test_second_marked_detected(self):
        f = BlackBox.from_table([-1, -1, 1, 1])
        f(0)
        with pytest.raises(PreconditionError):
            f(1)
        with pytest.raises(PreconditionError):
            BlackBox.from_table([1, 1, 1, 1]).check_unique()

    def test_load(self):
        assert load_truth_table("x0=3", 2).check_unique() == 3
        assert load_truth_table("0010\n").check_unique() == 2
        with pytest.raises(ValueError):
            load_truth_table("x0=3")
        with pytest.raises(ValueError):
            load_truth_table("001", 2)


class TestSamplers:
    def test_certain(self):
        rng = RandomSource(1)
        for x0 in range(4):
            f = BlackBox.from_x0(2, x0)
            for _ in range(20):
                assert sample_with_x0(x0, 2, 1, rng) == x0
                assert sample_with_oracle(f, 2, 1, rng) == x0
            assert set(sample_with_oracle_batch(f, 2, 1, 1000, rng.numpy()).tolist()) == {x0}

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 10), st.integers(0, 5), st.data())
    def test_support(self, n, t, data):
        x0 = data.draw(st.integers(0, (1 << n) - 1))
        rng = RandomSource(data.draw(st.integers(0, 1 << 30)))
        f = BlackBox.from_x0(n, x0)
        assert set(sample_with_x0_batch(x0, n, t, 200, rng.numpy()).tolist()) <= {0, x0}
        assert set(sample_with_oracle_batch(f, n, t, 200, rng.numpy()).tolist()) <= {0, x0}
        assert sample_with_oracle(f, n, t, rng) in {0, x0}

    def test_no_iterations_frequency(self):
        out = sample_with_x0_batch(1000, 10, 0, 1_000_000, RandomSource(2).numpy())
        assert abs(binomial_z(int((out == 1000).sum()), 1_000_000, 2.0**-10)) < 3

    def test_scalar_frequency(self):
        rng = RandomSource(3)
        hits = sum(sample_with_x0(37, 8, 3, rng) == 37 for _ in range(50_000))
        assert abs(binomial_z(hits, 50_000, p_success(8, 3))) < 3

    def test_oracle_sampler_against_x0_sampler(self):
        f = BlackBox.from_x0(8, 37)
        a = sample_with_x0_batch(37, 8, 3, 100_000, RandomSource(4).numpy())
        b = sample_with_oracle_batch(f, 8, 3, 100_000, RandomSource(5).numpy())
        assert abs(binomial_z(int((b == 37).sum()), 100_000, p_success(8, 3))) < 3
        ca = np.array([(a == 0).sum(), (a == 37).sum()])
        cb = np.array([(b == 0).sum(), (b == 37).sum()])
        assert homogeneity_test(ca, cb).p_value > 1e-3
        assert f.evaluations == 100_000 * attempt_count(8, 3)

    def test_scalar_oracle_sampler(self):
        f = BlackBox.from_x0(5, 6)
        rng = RandomSource(6)
        hits = sum(sample_with_oracle(f, 5, 1, rng) == 6 for _ in range(20_000))
        assert abs(binomial_z(hits, 20_000, p_success(5, 1))) < 3

    def test_x0_zero(self):
        out = sample_with_oracle_batch(BlackBox.from_x0(3, 0), 3, 1, 500, RandomSource(7).numpy())
        assert set(out.tolist()) == {0}

    def test_deterministic(self):
        f = BlackBox.from_x0(6, 11)
        a = sample_with_oracle_batch(f, 6, 2, 1000, RandomSource(8).numpy())
        b = sample_with_oracle_batch(f, 6, 2, 1000, RandomSource(8).numpy())
        np.testing.assert_array_equal(a, b)


class TestOracleDiscrepancy:
    def test_exact_agreement_when_certain(self):
        d = oracle_discrepancy(2, 1, 3)
        assert d["tvd"] == pytest.approx(0, abs=1e-12)

    def test_values_consistent(self):
        for n in (2, 3, 4):
            for t in (0, 1):
                d = oracle_discrepancy(n, t, 1)
                assert d["oracle_p_x0"] == pytest.approx(d["two_point_p_x0"], abs=1e-12)
                assert 0 <= d["tvd"] <= 1
                assert d["oracle_p_0"] + d["oracle_p_x0"] + d["oracle_mass_elsewhere"] == pytest.approx(1)

    def test_uniform_at_zero_iterations(self):
        d = oracle_discrepancy(3, 0, 5)
        assert d["tvd"] == pytest.approx(1 - 2 / 8)
        assert math.isclose(d["oracle_mass_elsewhere"], 6 / 8)
