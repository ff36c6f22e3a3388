"""Brute-force strong simulation used as the reference for every sampler.

Dense statevectors (qubit 0 = most significant bit) evolved gate by gate.
Modular exponentiation is applied as a basis permutation and the QFT as a
dense unitary DFT on the register axis, not as gate decompositions.
"""

from __future__ import annotations

import cmath
import math
import os
from dataclasses import dataclass

import numpy as np

from .distribution import NORM_TOL, ExactDistribution
from .errors import OracleCapExceeded
from .gates import Gate

DEFAULT_CAP = 24

_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.diag([1, -1]).astype(complex)
_S = np.diag([1, 1j])
_SINGLE = {"H": _H, "X": _X, "Z": _Z, "S": _S}


def oracle_cap() -> int:
    return int(os.environ.get("QIS_ORACLE_CAP", DEFAULT_CAP))


# -- circuit descriptions ----------------------------------------------------


def _bits_for(values_below: int) -> int:
    """Smallest register width holding every integer in ``[0, values_below)``."""
    return max(1, (values_below - 1).bit_length())


@dataclass(frozen=True)
class ShorPeriod:
    """Period-finding circuit with ``a`` and ``N`` hard-wired."""

    a: int
    N: int
    n_x: int
    n_f: int | None = None

    def __post_init__(self):
        if self.N < 2 or not 1 <= self.a < self.N:
            raise ValueError("need N >= 2 and 1 <= a < N")
        if self.n_f is None:
            object.__setattr__(self, "n_f", _bits_for(self.N))
        if self.N > 1 << self.n_f:
            raise ValueError("n_f too small to hold a^x mod N")

    @property
    def n_qubits(self) -> int:
        return self.n_x + self.n_f

    @property
    def registers(self):
        return (("x", self.n_x), ("f", self.n_f))


@dataclass(frozen=True)
class ShorSuperposedN:
    """Period finding with ``N`` itself in uniform superposition.

    Register value ``k`` encodes ``N = k + 1``, so the register covers
    ``N`` in ``[1, 2**n_N]``.
    """

    a: int
    n_N: int
    n_x: int
    n_f: int | None = None

    def __post_init__(self):
        if self.a < 1:
            raise ValueError("a must be positive")
        if self.n_f is None:
            object.__setattr__(self, "n_f", max(1, self.n_N))
        if (1 << self.n_N) > 1 << self.n_f:
            raise ValueError("n_f too small to hold a^x mod N")

    @property
    def n_qubits(self) -> int:
        return self.n_N + self.n_x + self.n_f

    @property
    def registers(self):
        return (("N", self.n_N), ("x", self.n_x), ("f", self.n_f))


@dataclass(frozen=True)
class GroverShortened:
    """Grover iteration repeated ``t`` times; exactly one marked item."""

    n: int
    t: int
    x0: int | None = None
    truth_table: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.t < 0:
            raise ValueError("t must be >= 0")
        if (self.x0 is None) == (self.truth_table is None):
            raise ValueError("give exactly one of x0 or truth_table")
        if self.truth_table is not None:
            marked = [i for i, v in enumerate(self.truth_table) if v == -1]
            if len(self.truth_table) != 1 << self.n or len(marked) != 1:
                raise ValueError("truth table must have 2**n entries and one -1")
        elif not 0 <= self.x0 < 1 << self.n:
            raise ValueError("x0 out of range")

    @property
    def marked(self) -> int:
        if self.x0 is not None:
            return self.x0
        return self.truth_table.index(-1)

    @property
    def n_qubits(self) -> int:
        return self.n

    @property
    def registers(self):
        return (("out", self.n),)


@dataclass(frozen=True)
class GateList:
    n: int
    gates: tuple[Gate, ...]

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if max(g.qubits) >= self.n:
                raise ValueError(f"{g} touches a qubit outside 0..{self.n - 1}")

    @property
    def n_qubits(self) -> int:
        return self.n

    @property
    def registers(self):
        return (("out", self.n),)


CircuitSpec = ShorPeriod | ShorSuperposedN | GroverShortened | GateList


# -- statevector -------------------------------------------------------------


class StateVector:
    """Amplitudes as an ``(2,) * n`` tensor; axis ``k`` is qubit ``k``."""

    def __init__(self, n: int, debug: bool = False):
        self.n = n
        self.debug = debug
        self.psi = np.zeros((2,) * n, dtype=complex)
        self.psi[(0,) * n] = 1.0

    @property
    def flat(self) -> np.ndarray:
        return self.psi.reshape(-1)

    def set_flat(self, vec: np.ndarray) -> None:
        self.psi = vec.reshape((2,) * self.n)
        self._check()

    def _check(self):
        if self.debug:
            norm = np.vdot(self.psi, self.psi).real
            assert abs(norm - 1) < NORM_TOL * 10, f"norm drifted to {norm!r}"

    def apply_single(self, u: np.ndarray, q: int, controls=()) -> None:
        sel = [slice(None)] * self.n
        for c in controls:
            sel[c] = 1
        sel = tuple(sel)
        sub = self.psi[sel]
        axis = q - sum(1 for c in controls if c < q)
        out = np.moveaxis(np.tensordot(u, sub, axes=([1], [axis])), 0, axis)
        self.psi[sel] = out
        self._check()

    def apply_phase(self, theta: float, qubits) -> None:
        sel = [slice(None)] * self.n
        for q in qubits:
            sel[q] = 1
        self.psi[tuple(sel)] *= cmath.exp(1j * theta) if theta != math.pi else -1.0
        self._check()

    def apply_perm(self, qubits, table) -> None:
        k = len(qubits)
        moved = np.moveaxis(self.psi, list(qubits), list(range(k)))
        shape = moved.shape
        block = moved.reshape(1 << k, -1)
        out = np.empty_like(block)
        out[list(table)] = block
        self.psi = np.moveaxis(out.reshape(shape), list(range(k)), list(qubits))
        self._check()

    def apply(self, g: Gate) -> None:
        name, qs = g.name, g.qubits
        if name in _SINGLE:
            self.apply_single(_SINGLE[name], qs[0])
        elif name == "CNOT":
            self.apply_single(_X, qs[1], controls=(qs[0],))
        elif name == "TOFFOLI":
            self.apply_single(_X, qs[2], controls=qs[:2])
        elif name == "CZ":
            self.apply_phase(math.pi, qs)
        elif name == "CP":
            self.apply_phase(g.theta, qs)
        elif name == "PERM":
            self.apply_perm(qs, g.table)
        else:
            raise ValueError(f"oracle cannot apply {name}")

    def hadamard_all(self, qubits) -> None:
        for q in qubits:
            self.apply_single(_H, q)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.flat) ** 2


def qft(vec: np.ndarray, axis: int = -1) -> np.ndarray:
    """Unitary DFT with kernel ``exp(+2 pi i x k / 2**n) / sqrt(2**n)``."""
    return np.fft.ifft(vec, axis=axis, norm="ortho")


def inverse_qft(vec: np.ndarray, axis: int = -1) -> np.ndarray:
    return np.fft.fft(vec, axis=axis, norm="ortho")


def _register_view(vec: np.ndarray, widths, index: int) -> np.ndarray:
    before = sum(widths[:index])
    after = sum(widths[index + 1 :])
    return vec.reshape(1 << before, 1 << widths[index], 1 << after)


def _check_cap(spec) -> None:
    cap = oracle_cap()
    if spec.n_qubits > cap:
        raise OracleCapExceeded(f"{spec.n_qubits} qubits exceeds the oracle cap of {cap}")


def _modexp_perm(spec) -> np.ndarray:
    """Target index of each basis state under ``|..x..>|y> -> |..x..>|y xor f(x)>``."""
    n_f = spec.n_f
    xs = np.arange(1 << spec.n_x, dtype=np.int64)
    if isinstance(spec, ShorPeriod):
        moduli = [spec.N]
    else:
        moduli = [k + 1 for k in range(1 << spec.n_N)]
    perms = []
    ys = np.arange(1 << n_f, dtype=np.int64)
    for modulus in moduli:
        fx = np.array([pow(spec.a, int(x), modulus) for x in xs], dtype=np.int64)
        block = (xs[:, None] << n_f) | (ys[None, :] ^ fx[:, None])
        perms.append(block.reshape(-1))
    offset = (1 << (spec.n_x + n_f)) * np.arange(len(moduli), dtype=np.int64)
    return np.concatenate([p + o for p, o in zip(perms, offset)])


def _simulate_shor(spec, debug: bool) -> ExactDistribution:
    sv = StateVector(spec.n_qubits, debug=debug)
    widths = [w for _, w in spec.registers]
    x_index = [name for name, _ in spec.registers].index("x")
    start = sum(widths[:x_index])
    if isinstance(spec, ShorSuperposedN):
        sv.hadamard_all(range(spec.n_N))
    sv.hadamard_all(range(start, start + spec.n_x))
    perm = _modexp_perm(spec)
    vec = np.empty_like(sv.flat)
    vec[perm] = sv.flat
    sv.set_flat(vec)
    view = _register_view(sv.flat.copy(), widths, x_index)
    sv.set_flat(qft(view, axis=1).reshape(-1))
    return ExactDistribution(spec.n_qubits, sv.probabilities(), spec.registers)


def grover_state(spec: GroverShortened, debug: bool = False) -> np.ndarray:
    size = 1 << spec.n
    sv = StateVector(spec.n, debug=debug)
    everything = range(spec.n)
    sv.hadamard_all(everything)
    if spec.truth_table is not None:
        f = np.asarray(spec.truth_table, dtype=float)
    else:
        f = np.ones(size)
        f[spec.x0] = -1.0
    g = np.ones(size)
    g[0] = -1.0
    for _ in range(spec.t):
        sv.set_flat(sv.flat * f)
        sv.hadamard_all(everything)
        sv.set_flat(sv.flat * g)
        sv.hadamard_all(everything)
    return sv.flat.copy()


def simulate(spec: CircuitSpec, debug: bool = False) -> ExactDistribution:
    """Exact computational-basis distribution of ``spec`` applied to ``|0...0>``.

    ``debug`` re-checks normalization after every gate.
    """
    _check_cap(spec)
    if isinstance(spec, (ShorPeriod, ShorSuperposedN)):
        return _simulate_shor(spec, debug)
    if isinstance(spec, GroverShortened):
        amps = grover_state(spec, debug)
        return ExactDistribution(spec.n, np.abs(amps) ** 2)
    if isinstance(spec, GateList):
        sv = StateVector(spec.n, debug=debug)
        for g in spec.gates:
            sv.apply(g)
        return ExactDistribution(spec.n, sv.probabilities())
    raise TypeError(f"unknown circuit spec {spec!r}")


# -- closed-form amplitude ---------------------------------------------------


def psi_tilde(x0: int, M: int, r: int, n_x: int, xt: int) -> complex:
    """Fourier amplitude at ``xt`` of the uniform superposition over ``x0 + m r``, ``m <= M``.

    Geometric-series closed form; where the denominator vanishes the
    continuity limit (every term equal to one) is used.
    """
    size = 1 << n_x
    prefactor = cmath.exp(2j * math.pi * ((xt * x0) % size) / size) / math.sqrt(size * (M + 1))
    if (xt * r) % size == 0:
        return prefactor * (M + 1)
    num = cmath.exp(2j * math.pi * ((xt * r * (M + 1)) % size) / size) - 1
    den = cmath.exp(2j * math.pi * ((xt * r) % size) / size) - 1
    return prefactor * num / den


# -- inverse-transform baseline ----------------------------------------------


class InverseTransformSampler:
    """Samples a tabulated distribution by bisection on its cumulative sums.

    Returns the smallest ``x`` with ``cumulative[x] > p`` for ``p`` uniform in
    ``[0, 1)``. The cumulative table is the (exponentially large) input.
    """

    def __init__(self, dist: ExactDistribution):
        self.n_bits = dist.n_bits
        self.cumulative = np.cumsum(dist.probs)
        positive = np.flatnonzero(dist.probs > 0)
        self._last = int(positive[-1]) if positive.size else dist.probs.size - 1

    def index(self, p: float) -> int:
        i = int(np.searchsorted(self.cumulative, p, side="right"))
        return min(i, self._last)

    def sample(self, rng) -> int:
        return self.index(rng.random())

    def sample_batch(self, size: int, gen: np.random.Generator) -> np.ndarray:
        idx = np.searchsorted(self.cumulative, gen.random(size), side="right")
        return np.minimum(idx, self._last)


def inverse_transform_sample(dist: ExactDistribution, rng) -> int:
    return InverseTransformSampler(dist).sample(rng)
