"""RandomSource, ExactDistribution and gate-list plumbing."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from weaksim.distribution import ExactDistribution, histogram
from weaksim.gates import format_gates, gate, parse_gates, random_clifford, random_ht, width
from weaksim.rng import RandomSource, as_generator, derive_seed, splitmix64
from weaksim.stats import chi_square_gof


class TestRandomSource:
    def test_splitmix_reference(self):
        # first outputs of splitmix64 seeded with 0
        state, a = splitmix64(0)
        _, b = splitmix64(state)
        assert (a, b) == (0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4)

    def test_streams_differ(self):
        assert derive_seed(1, 0) != derive_seed(1, 1)
        assert RandomSource(1, 0).random() != RandomSource(1, 1).random()

    def test_reproducible(self):
        a, b = RandomSource(42), RandomSource(42)
        assert [a.randbelow(1000) for _ in range(20)] == [b.randbelow(1000) for _ in range(20)]
        np.testing.assert_array_equal(a.numpy().integers(0, 9, 10), b.numpy().integers(0, 9, 10))

    def test_child(self):
        assert RandomSource(5).child(3).random() == RandomSource(5, 3).random()

    def test_randbelow(self):
        rng = RandomSource(1)
        with pytest.raises(ValueError):
            rng.randbelow(0)
        draws = [rng.randbelow(6) for _ in range(60_000)]
        assert chi_square_gof(np.bincount(draws, minlength=8), ExactDistribution(3, [1 / 6] * 6 + [0, 0])).p_value > 1e-3

    def test_randint_inclusive(self):
        rng = RandomSource(2)
        assert {rng.randint(3, 5) for _ in range(200)} == {3, 4, 5}

    def test_large_bound(self):
        rng = RandomSource(3)
        bound = (1 << 64) - 59
        assert all(0 <= rng.randbelow(bound) < bound for _ in range(100))

    def test_as_generator(self):
        g = np.random.default_rng(0)
        assert as_generator(g) is g
        assert isinstance(as_generator(RandomSource(1)), np.random.Generator)
        assert as_generator(7).integers(0, 100) == as_generator(7).integers(0, 100)


class TestExactDistribution:
    def test_shape_checked(self):
        with pytest.raises(ValueError):
            ExactDistribution(2, [0.5, 0.5])
        with pytest.raises(ValueError):
            ExactDistribution(2, [0.25] * 4, (("a", 1),))

    def test_validate(self):
        ExactDistribution.uniform(3).validate()
        with pytest.raises(ValueError):
            ExactDistribution(1, [0.5, 0.6]).validate()
        with pytest.raises(ValueError):
            ExactDistribution(1, [1.5, -0.5]).validate()

    def test_registers(self):
        d = ExactDistribution(3, np.arange(8) / 28, (("x", 2), ("f", 1)))
        np.testing.assert_allclose(d.marginal("f").probs, [12 / 28, 16 / 28])
        np.testing.assert_allclose(d.marginal("x").probs, [1 / 28, 5 / 28, 9 / 28, 13 / 28])
        np.testing.assert_allclose(d.conditional("f", 1).probs, np.array([1, 3, 5, 7]) / 16)
        assert d.pack(x=2, f=1) == 5
        assert d.unpack(5) == {"x": 2, "f": 1}

    def test_marginal_reorder(self):
        d = ExactDistribution(3, np.arange(8) / 28, (("a", 1), ("b", 1), ("c", 1)))
        m = d.marginal("c", "a")
        assert m.registers == (("c", 1), ("a", 1))
        assert m[0b10] == pytest.approx(d[0b001] + d[0b011])
        with pytest.raises(KeyError):
            d.marginal("z")

    def test_conditional_impossible(self):
        d = ExactDistribution.from_dict(2, {0: 1.0}, (("a", 1), ("b", 1)))
        with pytest.raises(ValueError):
            d.conditional("a", 1)

    @given(st.integers(1, 6), st.data())
    def test_json_round_trip(self, n, data):
        w = data.draw(st.lists(st.floats(0, 1), min_size=1 << n, max_size=1 << n))
        probs = np.array(w) + 1e-3
        d = ExactDistribution(n, probs / probs.sum(), (("a", 1), ("b", n - 1)) if n > 1 else ())
        back = ExactDistribution.from_json(d.to_json())
        np.testing.assert_array_equal(back.probs, d.probs)
        assert back.registers == d.registers

    def test_sparse_dict(self):
        d = ExactDistribution.from_dict(3, {1: 0.5, 6: 0.5})
        assert d.as_dict() == {1: 0.5, 6: 0.5}
        assert d.support().tolist() == [1, 6]
        assert histogram([1, 1, 6], 8).tolist() == [0, 2, 0, 0, 0, 0, 1, 0]


class TestGates:
    def test_parse(self):
        text = """
        # a comment
        H 0
        cx 0 1   # alias
        CP 0.5 1 2
        PERM 0 1 : 1 0 3 2
        """
        gates = parse_gates(text)
        assert [g.name for g in gates] == ["H", "CNOT", "CP", "PERM"]
        assert gates[2].theta == 0.5 and gates[2].qubits == (1, 2)
        assert gates[3].table == (1, 0, 3, 2)
        assert parse_gates(format_gates(gates)) == gates
        assert width(gates) == 3

    @pytest.mark.parametrize("line", ["FOO 0", "CNOT 0", "CNOT 1 1", "CP 0 1", "PERM 0 : 0 0", "H x"])
    def test_bad_lines(self, line):
        with pytest.raises(ValueError, match="line 1"):
            parse_gates(line)

    def test_random_generators(self):
        gen = np.random.default_rng(0)
        for n in range(1, 6):
            assert all(g.name in {"H", "S", "CNOT"} for g in random_clifford(n, 30, gen))
            ht = random_ht(n, 10, gen)
            h = [g for g in ht if g.name == "H"]
            assert ht[: len(h)] == h
            assert all(max(g.qubits) < n for g in ht)

    def test_cp_repr_exact(self):
        g = gate("CP", 0, 1, theta=math.pi / 3)
        assert parse_gates(str(g))[0].theta == math.pi / 3
