"""Exact outcome distributions over bitstrings, with named registers."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

NORM_TOL = 1e-12
SPARSE_CUTOFF = 1e-15


@dataclass
class ExactDistribution:
    """Dense probability table over ``[0, 2**n_bits)``.

    ``registers`` names consecutive bit fields, most significant first; the
    default is a single register holding all bits.
    """

    n_bits: int
    probs: np.ndarray
    registers: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        if self.probs.shape != (1 << self.n_bits,):
            raise ValueError(
                f"expected {1 << self.n_bits} probabilities, got shape {self.probs.shape}"
            )
        if not self.registers:
            self.registers = (("out", self.n_bits),)
        if sum(w for _, w in self.registers) != self.n_bits:
            raise ValueError("register widths must add up to n_bits")

    @classmethod
    def from_dict(cls, n_bits: int, table: dict[int, float], registers=()) -> "ExactDistribution":
        probs = np.zeros(1 << n_bits)
        for x, p in table.items():
            probs[x] = p
        return cls(n_bits, probs, tuple(registers))

    @classmethod
    def point(cls, n_bits: int, x: int) -> "ExactDistribution":
        return cls.from_dict(n_bits, {x: 1.0})

    @classmethod
    def uniform(cls, n_bits: int) -> "ExactDistribution":
        return cls(n_bits, np.full(1 << n_bits, 1.0 / (1 << n_bits)))

    def validate(self, tol: float = NORM_TOL) -> None:
        if (self.probs < 0).any():
            raise ValueError("negative probability")
        total = self.probs.sum()
        if abs(total - 1.0) > tol:
            raise ValueError(f"probabilities sum to {total!r}")

    def __getitem__(self, x: int) -> float:
        return float(self.probs[x])

    def support(self, cutoff: float = SPARSE_CUTOFF) -> np.ndarray:
        return np.flatnonzero(self.probs > cutoff)

    def as_dict(self, cutoff: float = SPARSE_CUTOFF) -> dict[int, float]:
        return {int(x): float(self.probs[x]) for x in self.support(cutoff)}

    # -- registers -----------------------------------------------------------

    @property
    def register_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.registers)

    def tensor(self) -> np.ndarray:
        """Probabilities reshaped to one axis per register."""
        return self.probs.reshape([1 << w for _, w in self.registers])

    def marginal(self, *names: str) -> "ExactDistribution":
        """Marginal over the given registers, kept in the order given."""
        order = self.register_names
        missing = [n for n in names if n not in order]
        if missing:
            raise KeyError(f"unknown registers {missing}; have {order}")
        t = self.tensor()
        drop = tuple(i for i, n in enumerate(order) if n not in names)
        t = t.sum(axis=drop) if drop else t
        kept = [n for n in order if n in names]
        t = np.transpose(t, [kept.index(n) for n in names])
        regs = tuple((n, dict(self.registers)[n]) for n in names)
        return ExactDistribution(sum(w for _, w in regs), t.reshape(-1), regs)

    def conditional(self, name: str, value: int) -> "ExactDistribution":
        """Distribution of the other registers given ``name == value``."""
        order = self.register_names
        axis = order.index(name)
        t = np.take(self.tensor(), value, axis=axis)
        total = t.sum()
        if total <= 0:
            raise ValueError(f"register {name} never takes value {value}")
        regs = tuple(r for r in self.registers if r[0] != name)
        return ExactDistribution(sum(w for _, w in regs), (t / total).reshape(-1), regs)

    def pack(self, **values: int) -> int:
        """Joint outcome index from per-register values."""
        x = 0
        for name, width in self.registers:
            x = (x << width) | values[name]
        return x

    def unpack(self, x: int) -> dict[str, int]:
        out = {}
        for name, width in reversed(self.registers):
            out[name] = x & ((1 << width) - 1)
            x >>= width
        return dict(reversed(list(out.items())))

    # -- serialization -------------------------------------------------------

    def to_json(self, sparse: bool = True) -> str:
        if sparse:
            xs = self.support()
        else:
            xs = np.arange(self.probs.size)
        pairs = [[int(x), float(self.probs[x])] for x in xs]
        doc = {"n_bits": self.n_bits, "probs": pairs}
        if self.registers != (("out", self.n_bits),):
            doc["registers"] = [[n, w] for n, w in self.registers]
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "ExactDistribution":
        doc = json.loads(text)
        regs = tuple((n, w) for n, w in doc.get("registers", ()))
        return cls.from_dict(doc["n_bits"], {x: p for x, p in doc["probs"]}, regs)


def histogram(samples, size: int) -> np.ndarray:
    """Counts of integer outcomes in ``[0, size)``."""
    return np.bincount(np.asarray(samples, dtype=np.int64), minlength=size)
