import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weaksim.distribution import ExactDistribution
from weaksim.errors import CircuitShapeError
from weaksim.gates import gate, random_clifford, random_ht
from weaksim.oracle import GateList, simulate
from weaksim.rng import RandomSource
from weaksim.stats import binomial_z, chi_square_gof, tvd
from weaksim.tractable import (
    AbelianGroupSpec,
    Tableau,
    clifford_distribution,
    clifford_sample,
    clifford_sample_batch,
    clifford_tableau,
    coset_elements,
    coset_sample,
    coset_sample_batch,
    ht_distribution,
    ht_sample,
    ht_sample_batch,
    random_group_spec,
    split_ht,
    subgroup_elements,
)

BELL = [gate("H", 0), gate("CNOT", 0, 1)]


def gof_or_exact(draws, dist):
    """Chi-square p-value, or 1/0 when the law is a single point."""
    support = dist.support()
    if support.size == 1:
        return 1.0 if (draws == support[0]).all() else 0.0
    return chi_square_gof(np.bincount(draws, minlength=dist.probs.size), dist).p_value


class TestHT:
    def test_bell(self):
        out = ht_sample_batch(BELL, 10_000, RandomSource(1).numpy())
        assert set(out.tolist()) == {0, 3}
        assert abs(binomial_z(int((out == 3).sum()), 10_000, 0.5)) < 4
        assert ht_distribution(BELL).as_dict() == pytest.approx({0: 0.5, 3: 0.5})

    def test_deterministic_without_hadamards(self):
        gates = [gate("X", 0)]
        rng = RandomSource(2)
        assert {ht_sample(gates, rng, 4) for _ in range(20)} == {8}

    def test_shape_rejected(self):
        with pytest.raises(CircuitShapeError):
            split_ht([gate("X", 0), gate("H", 0)])
        with pytest.raises(CircuitShapeError):
            split_ht([gate("H", 0), gate("H", 0)])
        with pytest.raises(CircuitShapeError):
            split_ht([gate("H", 0), gate("S", 0)])

    def test_exact_law_matches_oracle(self):
        gen = np.random.default_rng(3)
        for _ in range(30):
            n = int(gen.integers(1, 9))
            gates = random_ht(n, int(gen.integers(0, 4 * n)), gen)
            np.testing.assert_allclose(ht_distribution(gates, n).probs, simulate(GateList(n, gates)).probs, atol=1e-12)

    def test_scalar_against_oracle(self):
        gates = [gate("H", 0), gate("H", 2), gate("TOFFOLI", 0, 2, 1), gate("CNOT", 1, 3), gate("X", 0)]
        dist = simulate(GateList(4, gates))
        rng = RandomSource(5)
        draws = np.array([ht_sample(gates, rng, 4) for _ in range(20_000)])
        assert gof_or_exact(draws, dist) > 1e-3

    @pytest.mark.parametrize("seed", range(10))
    def test_batch_against_oracle(self, seed):
        gen = np.random.default_rng(100 + seed)
        n = int(gen.integers(1, 9))
        gates = random_ht(n, int(gen.integers(0, 4 * n)), gen)
        dist = simulate(GateList(n, gates))
        draws = ht_sample_batch(gates, 100_000, RandomSource(seed).numpy(), n)
        assert gof_or_exact(draws, dist) > 1e-3

    @pytest.mark.parametrize("n", range(1, 9))
    def test_tvd_against_oracle(self, n):
        gen = np.random.default_rng(200 + n)
        gates = random_ht(n, 3 * n, gen)
        dist = simulate(GateList(n, gates))
        draws = ht_sample_batch(gates, 100_000, RandomSource(n).numpy(), n)
        assert tvd(np.bincount(draws, minlength=1 << n) / draws.size, dist) < 0.01


class TestTableau:
    def test_initial(self):
        t = Tableau(3)
        t.check()
        assert clifford_tableau([], 3).measure_all()[:, 1:].sum() == 0

    def test_bell(self):
        forms = clifford_tableau(BELL).measure_all()
        assert clifford_distribution(BELL).as_dict() == pytest.approx({0: 0.5, 3: 0.5})
        # both bits follow the same coin
        np.testing.assert_array_equal(forms[0], forms[1])

    def test_empty_circuit(self):
        rng = RandomSource(1)
        assert {clifford_sample([], rng, 3) for _ in range(10)} == {0}

    def test_debug_checks_every_gate(self):
        gen = np.random.default_rng(2)
        for _ in range(20):
            n = int(gen.integers(1, 7))
            gates = random_clifford(n, 40, gen) + [gate("X", 0), gate("Z", 0)]
            if n > 1:
                gates.append(gate("CZ", 0, n - 1))
            clifford_tableau(gates, n, debug=True)

    def test_check_catches_corruption(self):
        t = Tableau(2)
        t.x[0, 1] ^= 1
        with pytest.raises(AssertionError):
            t.check()

    def test_rejects_non_clifford(self):
        with pytest.raises(CircuitShapeError):
            clifford_tableau([gate("TOFFOLI", 0, 1, 2)])

    def test_phase_gates(self):
        # H S S H = X, H Z H = X, and CZ on |++> then H H gives a Bell pair in X
        assert clifford_distribution([gate("H", 0), gate("S", 0), gate("S", 0), gate("H", 0)]).as_dict() == {1: 1.0}
        assert clifford_distribution([gate("H", 0), gate("Z", 0), gate("H", 0)]).as_dict() == {1: 1.0}
        gates = [gate("H", 0), gate("H", 1), gate("CZ", 0, 1), gate("H", 1)]
        np.testing.assert_allclose(clifford_distribution(gates).probs, simulate(GateList(2, gates)).probs, atol=1e-12)

    def test_exact_law_matches_oracle(self):
        gen = np.random.default_rng(3)
        for _ in range(40):
            n = int(gen.integers(1, 7))
            gates = random_clifford(n, int(gen.integers(0, 41)), gen)
            np.testing.assert_allclose(
                clifford_distribution(gates, n).probs, simulate(GateList(n, gates)).probs, atol=1e-12
            )

    def test_scalar_against_oracle(self):
        gen = np.random.default_rng(4)
        gates = random_clifford(4, 30, gen)
        dist = simulate(GateList(4, gates))
        rng = RandomSource(5)
        draws = np.array([clifford_sample(gates, rng, 4) for _ in range(5000)])
        assert gof_or_exact(draws, dist) > 1e-3

    @pytest.mark.parametrize("seed", range(10))
    def test_batch_against_oracle(self, seed):
        gen = np.random.default_rng(300 + seed)
        n = int(gen.integers(1, 7))
        gates = random_clifford(n, int(gen.integers(0, 41)), gen)
        dist = simulate(GateList(n, gates))
        draws = clifford_sample_batch(gates, 100_000, RandomSource(seed).numpy(), n)
        assert gof_or_exact(draws, dist) > 1e-3

    @pytest.mark.parametrize("n", range(1, 7))
    def test_tvd_against_oracle(self, n):
        gen = np.random.default_rng(400 + n)
        gates = random_clifford(n, 40, gen)
        dist = simulate(GateList(n, gates))
        draws = clifford_sample_batch(gates, 100_000, RandomSource(n).numpy(), n)
        assert tvd(np.bincount(draws, minlength=1 << n) / draws.size, dist) < 0.01

    def test_qubit_marginals(self):
        gen = np.random.default_rng(6)
        gates = random_clifford(5, 40, gen)
        dist = simulate(GateList(5, gates))
        draws = clifford_sample_batch(gates, 20_000, RandomSource(7).numpy(), 5)
        idx = np.arange(32)
        for q in range(5):
            bit = 4 - q
            p = float(dist.probs[(idx >> bit) & 1 == 1].sum())
            ones = int(((draws >> bit) & 1).sum())
            if 0 < p < 1:
                assert abs(binomial_z(ones, draws.size, p)) < 3.5
            else:
                assert ones == draws.size * p


class TestCoset:
    def test_two_element(self):
        spec = AbelianGroupSpec((2, 2), ((1, 1),), (0, 1))
        assert coset_elements(spec) == [(0, 1), (1, 0)]
        out = coset_sample_batch(spec, 10_000, RandomSource(1).numpy())
        assert {tuple(r) for r in out.tolist()} == {(0, 1), (1, 0)}
        assert abs(binomial_z(int(out[:, 0].sum()), 10_000, 0.5)) < 4

    def test_whole_group(self):
        spec = AbelianGroupSpec((3, 4), ((1, 0), (0, 1)), (2, 3))
        draws = coset_sample_batch(spec, 60_000, RandomSource(2).numpy())
        idx = np.array([spec.index(r) for r in draws.tolist()])
        probs = np.zeros(16)
        probs[:12] = 1 / 12
        assert chi_square_gof(np.bincount(idx, minlength=16), ExactDistribution(4, probs)).p_value > 1e-3

    def test_z4_z6(self):
        spec = AbelianGroupSpec((4, 6), ((2, 0), (0, 3)), (1, 1))
        members = coset_elements(spec)
        assert len(members) == 4
        lookup = {e: i for i, e in enumerate(members)}
        draws = coset_sample_batch(spec, 100_000, RandomSource(3).numpy())
        idx = np.array([lookup[tuple(r)] for r in draws.tolist()])
        assert chi_square_gof(np.bincount(idx, minlength=4), ExactDistribution.uniform(2)).p_value > 1e-3

    def test_scalar(self):
        spec = AbelianGroupSpec((4, 6), ((2, 0), (0, 3)), (1, 1))
        members = set(coset_elements(spec))
        rng = RandomSource(4)
        seen = {coset_sample(spec, rng) for _ in range(500)}
        assert seen == members

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 1 << 30))
    def test_membership(self, seed):
        gen = np.random.default_rng(seed)
        spec = random_group_spec(gen)
        members = set(coset_elements(spec))
        assert len(members) <= 64
        assert len(members) == len(subgroup_elements(spec))
        draws = coset_sample_batch(spec, 300, gen)
        assert {tuple(r) for r in draws.tolist()} <= members

    def test_rejects_unreduced(self):
        with pytest.raises(ValueError):
            AbelianGroupSpec((2, 2), ((2, 0),), (0, 0))
        with pytest.raises(ValueError):
            AbelianGroupSpec((2, 2), ((1,),), (0, 0))
