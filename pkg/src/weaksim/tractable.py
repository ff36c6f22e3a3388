"""Efficient samplers for classically tractable circuit families.

* HT circuits: Hadamards on some qubits, then classical reversible gates.
* Clifford circuits: stabilizer tableau with destabilizers and phase bits.
* Coset states of finite Abelian groups: uniform on ``K + x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import CircuitShapeError
from .gates import CLASSICAL, CLIFFORD, Gate, width
from .rng import as_generator

# -- HT circuits ---------------------------------------------------------------


def split_ht(gates, n: int | None = None) -> tuple[int, list[int], list[Gate]]:
    """Validate the HT shape and return ``(n, hadamard_qubits, classical_gates)``."""
    gates = list(gates)
    n = width(gates) if n is None else n
    hadamards: list[int] = []
    i = 0
    while i < len(gates) and gates[i].name == "H":
        q = gates[i].qubits[0]
        if q in hadamards:
            raise CircuitShapeError(f"second Hadamard on qubit {q}")
        hadamards.append(q)
        i += 1
    rest = gates[i:]
    for g in rest:
        if g.name not in CLASSICAL:
            raise CircuitShapeError(f"{g.name} after the Hadamard layer is not classical")
    if any(q >= n for g in gates for q in g.qubits):
        raise CircuitShapeError("gate acts outside the register")
    return n, hadamards, rest


def _apply_classical(bits: list[int] | np.ndarray, g: Gate) -> None:
    qs = g.qubits
    if g.name == "X":
        bits[qs[0]] ^= 1
    elif g.name == "CNOT":
        bits[qs[1]] ^= bits[qs[0]]
    else:
        bits[qs[2]] ^= bits[qs[0]] & bits[qs[1]]


def _to_index(bits) -> int:
    out = 0
    for b in bits:
        out = (out << 1) | int(b)
    return out


def ht_sample(gates, rng, n: int | None = None) -> int:
    """One outcome: coin flips on Hadamard qubits, zeros elsewhere, then the gates."""
    n, hadamards, rest = split_ht(gates, n)
    bits = [0] * n
    for q in hadamards:
        bits[q] = rng.randbits(1)
    for g in rest:
        _apply_classical(bits, g)
    return _to_index(bits)


def _pack_columns(bits: np.ndarray) -> np.ndarray:
    n = bits.shape[1]
    weights = np.left_shift(np.int64(1), np.arange(n - 1, -1, -1, dtype=np.int64))
    return bits.astype(np.int64) @ weights


def ht_sample_batch(gates, size: int, rng, n: int | None = None) -> np.ndarray:
    n, hadamards, rest = split_ht(gates, n)
    gen = as_generator(rng)
    cols = [np.zeros(size, dtype=np.uint8) for _ in range(n)]
    for q in hadamards:
        cols[q] = gen.integers(0, 2, size, dtype=np.uint8)
    for g in rest:
        _apply_classical(cols, g)
    return _pack_columns(np.stack(cols, axis=1))


# -- stabilizer tableau ------------------------------------------------------------


class Tableau:
    """Destabilizer/stabilizer tableau on ``n`` qubits, starting from ``|0...0>``.

    Rows ``0..n-1`` are destabilizers, ``n..2n-1`` stabilizers, row ``2n`` is
    scratch. Phase bits are stored as GF(2) affine forms over the measurement
    coins: column 0 is the constant, column ``j + 1`` the coefficient of coin
    ``j``. Before any measurement only column 0 is ever non-zero.
    """

    def __init__(self, n: int, debug: bool = False):
        self.n = n
        self.debug = debug
        self.x = np.zeros((2 * n + 1, n), dtype=np.uint8)
        self.z = np.zeros((2 * n + 1, n), dtype=np.uint8)
        self.r = np.zeros((2 * n + 1, n + 1), dtype=np.uint8)
        idx = np.arange(n)
        self.x[idx, idx] = 1
        self.z[n + idx, idx] = 1
        self.coins = 0
        self.gate_count = 0

    # gates
    def h(self, a: int) -> None:
        self.r[:, 0] ^= self.x[:, a] & self.z[:, a]
        self.x[:, a], self.z[:, a] = self.z[:, a].copy(), self.x[:, a].copy()

    def s(self, a: int) -> None:
        self.r[:, 0] ^= self.x[:, a] & self.z[:, a]
        self.z[:, a] ^= self.x[:, a]

    def cnot(self, a: int, b: int) -> None:
        x, z = self.x, self.z
        self.r[:, 0] ^= x[:, a] & z[:, b] & (x[:, b] ^ z[:, a] ^ 1)
        x[:, b] ^= x[:, a]
        z[:, a] ^= z[:, b]

    def pauli_x(self, a: int) -> None:
        self.r[:, 0] ^= self.z[:, a]

    def pauli_z(self, a: int) -> None:
        self.r[:, 0] ^= self.x[:, a]

    def cz(self, a: int, b: int) -> None:
        self.h(b)
        self.cnot(a, b)
        self.h(b)

    def apply(self, g: Gate) -> None:
        if g.name not in CLIFFORD:
            raise CircuitShapeError(f"{g.name} is not a Clifford gate")
        q = g.qubits
        {
            "H": lambda: self.h(q[0]),
            "S": lambda: self.s(q[0]),
            "X": lambda: self.pauli_x(q[0]),
            "Z": lambda: self.pauli_z(q[0]),
            "CNOT": lambda: self.cnot(q[0], q[1]),
            "CZ": lambda: self.cz(q[0], q[1]),
        }[g.name]()
        self.gate_count += 1
        if self.debug:
            self.check()

    # invariants
    def symplectic_form(self) -> np.ndarray:
        x, z = self.x[: 2 * self.n], self.z[: 2 * self.n]
        return ((x.astype(np.int64) @ z.T + z.astype(np.int64) @ x.T) % 2).astype(np.uint8)

    def check(self) -> None:
        """Destabilizer ``i`` anticommutes only with stabilizer ``i``; all else commutes."""
        n = self.n
        expected = np.zeros((2 * n, 2 * n), dtype=np.uint8)
        expected[np.arange(n), n + np.arange(n)] = 1
        expected[n + np.arange(n), np.arange(n)] = 1
        if not np.array_equal(self.symplectic_form(), expected):
            raise AssertionError("tableau lost its symplectic structure")

    # measurement
    def _rowsum(self, h: int, i: int) -> None:
        x1, z1 = self.x[i].astype(np.int64), self.z[i].astype(np.int64)
        x2, z2 = self.x[h].astype(np.int64), self.z[h].astype(np.int64)
        g = np.where(
            x1 & z1,
            z2 - x2,
            np.where(x1, z2 * (2 * x2 - 1), z1 * x2 * (1 - 2 * z2)),
        )
        total = int(g.sum()) % 4
        self.r[h] ^= self.r[i]
        if total == 2:
            self.r[h, 0] ^= 1
        self.x[h] ^= self.x[i]
        self.z[h] ^= self.z[i]

    def measure(self, a: int) -> np.ndarray:
        """Measure qubit ``a`` in the Z basis; returns the outcome as an affine form.

        A random outcome consumes a fresh coin; a determined one is an affine
        function of earlier coins.
        """
        n = self.n
        hits = np.flatnonzero(self.x[n : 2 * n, a])
        if hits.size:
            p = n + int(hits[0])
            for i in np.flatnonzero(self.x[: 2 * n, a]):
                if i != p:
                    self._rowsum(int(i), p)
            self.x[p - n], self.z[p - n], self.r[p - n] = self.x[p], self.z[p], self.r[p]
            self.x[p] = 0
            self.z[p] = 0
            self.z[p, a] = 1
            self.r[p] = 0
            self.r[p, 1 + self.coins] = 1
            self.coins += 1
            return self.r[p].copy()
        scratch = 2 * n
        self.x[scratch] = 0
        self.z[scratch] = 0
        self.r[scratch] = 0
        for i in np.flatnonzero(self.x[:n, a]):
            self._rowsum(scratch, n + int(i))
        return self.r[scratch].copy()

    def measure_all(self) -> np.ndarray:
        """Affine forms of all ``n`` outcome bits, shape ``(n, n + 1)``."""
        return np.stack([self.measure(a) for a in range(self.n)])


def clifford_tableau(gates, n: int | None = None, debug: bool = False) -> Tableau:
    gates = list(gates)
    n = width(gates) if n is None else n
    tab = Tableau(n, debug=debug)
    for g in gates:
        tab.apply(g)
    return tab


def measurement_forms(gates, n: int | None = None) -> np.ndarray:
    """Outcome bits as affine forms over the random measurement coins."""
    return clifford_tableau(gates, n).measure_all()


def clifford_sample(gates, rng, n: int | None = None) -> int:
    """One computational-basis outcome of a Clifford circuit on ``|0...0>``."""
    forms = measurement_forms(gates, n)
    coins = np.array([1] + [rng.randbits(1) for _ in range(forms.shape[1] - 1)], dtype=np.uint8)
    return _to_index((forms.astype(np.int64) @ coins) % 2)


def clifford_sample_batch(gates, size: int, rng, n: int | None = None) -> np.ndarray:
    forms = measurement_forms(gates, n).astype(np.int64)
    gen = as_generator(rng)
    coins = gen.integers(0, 2, (size, forms.shape[1]))
    coins[:, 0] = 1
    return _pack_columns((coins @ forms.T) % 2)


# -- coset states --------------------------------------------------------------


@dataclass(frozen=True)
class AbelianGroupSpec:
    """``G = Z_d1 x ... x Z_dk``, generators of ``K`` and the shift ``x``."""

    orders: tuple[int, ...]
    generators: tuple[tuple[int, ...], ...]
    shift: tuple[int, ...]

    def __post_init__(self):
        k = len(self.orders)
        if k == 0 or any(d < 1 for d in self.orders):
            raise ValueError("group needs at least one cyclic factor of order >= 1")
        for elem in (*self.generators, self.shift):
            if len(elem) != k:
                raise ValueError(f"element {elem} has the wrong length")
            if any(not 0 <= e < d for e, d in zip(elem, self.orders)):
                raise ValueError(f"element {elem} is not reduced")

    @property
    def exponent(self) -> int:
        return reduce(math.lcm, self.orders, 1)

    def index(self, elem) -> int:
        """Mixed-radix position of an element, first component most significant."""
        out = 0
        for e, d in zip(elem, self.orders):
            out = out * d + int(e)
        return out

    @property
    def size(self) -> int:
        return math.prod(self.orders)


def coset_sample(spec: AbelianGroupSpec, rng) -> tuple[int, ...]:
    e = spec.exponent
    elem = list(spec.shift)
    for g in spec.generators:
        c = rng.below(e)
        elem = [(a + c * b) % d for a, b, d in zip(elem, g, spec.orders)]
    return tuple(elem)


def coset_sample_batch(spec: AbelianGroupSpec, size: int, rng) -> np.ndarray:
    """``(size, k)`` array of coset elements."""
    gen = as_generator(rng)
    orders = np.array(spec.orders, dtype=np.int64)
    out = np.tile(np.array(spec.shift, dtype=np.int64), (size, 1))
    if spec.generators:
        coeff = gen.integers(0, spec.exponent, (size, len(spec.generators)))
        out = out + coeff @ np.array(spec.generators, dtype=np.int64)
    return out % orders


def subgroup_elements(spec: AbelianGroupSpec) -> set[tuple[int, ...]]:
    """All of ``K`` by closure under adding generators (small groups only)."""
    zero = tuple(0 for _ in spec.orders)
    seen = {zero}
    frontier = [zero]
    while frontier:
        nxt = []
        for elem in frontier:
            for g in spec.generators:
                y = tuple((a + b) % d for a, b, d in zip(elem, g, spec.orders))
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        frontier = nxt
    return seen


def coset_elements(spec: AbelianGroupSpec) -> list[tuple[int, ...]]:
    shifted = {
        tuple((a + b) % d for a, b, d in zip(k, spec.shift, spec.orders))
        for k in subgroup_elements(spec)
    }
    return sorted(shifted)


def random_group_spec(gen, max_coset: int = 64, max_factors: int = 3, max_order: int = 12):
    """Random ``(G, K, x)`` with ``|K + x| <= max_coset``."""
    while True:
        k = int(gen.integers(1, max_factors + 1))
        orders = tuple(int(d) for d in gen.integers(2, max_order + 1, k))
        n_gens = int(gen.integers(1, 4))
        gens = tuple(tuple(int(gen.integers(0, d)) for d in orders) for _ in range(n_gens))
        shift = tuple(int(gen.integers(0, d)) for d in orders)
        spec = AbelianGroupSpec(orders, gens, shift)
        if len(subgroup_elements(spec)) <= max_coset:
            return spec


def clifford_distribution(gates, n: int | None = None):
    """Exact outcome law: uniform over the affine image of the measurement coins."""
    from .distribution import ExactDistribution

    forms = measurement_forms(gates, n).astype(np.int64)
    n, k = forms.shape[0], forms.shape[1] - 1
    coins = (np.arange(1 << k)[:, None] >> np.arange(k)) & 1
    coins = np.hstack([np.ones((1 << k, 1), dtype=np.int64), coins])
    outcomes = _pack_columns((coins @ forms.T) % 2)
    return ExactDistribution(n, np.bincount(outcomes, minlength=1 << n) / (1 << k))


def ht_distribution(gates, n: int | None = None):
    """Exact outcome law by running every assignment of the Hadamard coins."""
    from .distribution import ExactDistribution

    n, hadamards, rest = split_ht(gates, n)
    h = len(hadamards)
    coins = np.arange(1 << h)
    cols = [np.zeros(1 << h, dtype=np.uint8) for _ in range(n)]
    for j, q in enumerate(hadamards):
        cols[q] = ((coins >> j) & 1).astype(np.uint8)
    for g in rest:
        _apply_classical(cols, g)
    outcomes = _pack_columns(np.stack(cols, axis=1))
    return ExactDistribution(n, np.bincount(outcomes, minlength=1 << n) / (1 << h))
