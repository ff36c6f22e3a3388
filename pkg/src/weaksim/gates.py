"""Gate lists and their one-gate-per-line text format.

Examples of lines::

    H 0
    CNOT 0 1
    TOFFOLI 0 1 2
    S 3
    CP 0.7853981633974483 0 1
    PERM 0 1 : 0 2 1 3

Blank lines and ``#`` comments are ignored. Qubit 0 is the most significant
bit of an outcome index, so ``X 0`` on three qubits yields ``100``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

ALIASES = {"CX": "CNOT", "CCX": "TOFFOLI", "CCNOT": "TOFFOLI", "CPHASE": "CP", "P": "S"}
ARITY = {"H": 1, "X": 1, "Z": 1, "S": 1, "CZ": 2, "CNOT": 2, "TOFFOLI": 3, "CP": 2}
CLIFFORD = frozenset({"H", "S", "X", "Z", "CNOT", "CZ"})
CLASSICAL = frozenset({"X", "CNOT", "TOFFOLI"})


@dataclass(frozen=True)
class Gate:
    name: str
    qubits: tuple[int, ...]
    theta: float | None = None
    # PERM only: table[i] is the image of basis state i on ``qubits``
    table: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if self.name == "PERM":
            size = 1 << len(self.qubits)
            if sorted(self.table) != list(range(size)):
                raise ValueError(f"PERM table must permute range({size})")
        elif self.name not in ARITY:
            raise ValueError(f"unknown gate {self.name!r}")
        elif len(self.qubits) != ARITY[self.name]:
            raise ValueError(f"{self.name} takes {ARITY[self.name]} qubits")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"repeated qubit in {self}")
        if self.name == "CP" and self.theta is None:
            raise ValueError("CP needs an angle")

    def __str__(self):
        qs = " ".join(map(str, self.qubits))
        if self.name == "CP":
            return f"CP {self.theta!r} {qs}"
        if self.name == "PERM":
            return f"PERM {qs} : {' '.join(map(str, self.table))}"
        return f"{self.name} {qs}"


def gate(name: str, *qubits: int, theta: float | None = None, table=()) -> Gate:
    name = ALIASES.get(name.upper(), name.upper())
    return Gate(name, tuple(int(q) for q in qubits), theta, tuple(table))


def parse_line(line: str) -> Gate | None:
    line = line.split("#", 1)[0].strip()
    if not line:
        return None
    head, *rest = line.split()
    name = ALIASES.get(head.upper(), head.upper())
    if name == "CP":
        return gate(name, *rest[1:], theta=float(rest[0]))
    if name == "PERM":
        text = " ".join(rest)
        qs, _, tab = text.partition(":")
        return gate(name, *qs.split(), table=[int(v) for v in tab.split()])
    return gate(name, *rest)


def parse_gates(text: str) -> list[Gate]:
    gates = []
    for lineno, line in enumerate(text.splitlines(), 1):
        try:
            g = parse_line(line)
        except (ValueError, IndexError) as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        if g is not None:
            gates.append(g)
    return gates


def format_gates(gates) -> str:
    return "".join(f"{g}\n" for g in gates)


def width(gates) -> int:
    """Smallest register that holds every qubit the gates touch."""
    return max((q for g in gates for q in g.qubits), default=-1) + 1


def random_clifford(n: int, depth: int, gen) -> list[Gate]:
    """Random gate list over H, S and CNOT."""
    out = []
    for _ in range(depth):
        kind = gen.integers(3) if n > 1 else gen.integers(2)
        if kind == 2:
            c, t = gen.choice(n, size=2, replace=False)
            out.append(gate("CNOT", c, t))
        else:
            out.append(gate("HS"[kind], gen.integers(n)))
    return out


def random_ht(n: int, n_classical: int, gen) -> list[Gate]:
    """Hadamards on a random subset followed by random X/CNOT/TOFFOLI gates."""
    out = [gate("H", q) for q in range(n) if gen.random() < 0.5]
    choices = ["X"] + (["CNOT"] if n > 1 else []) + (["TOFFOLI"] if n > 2 else [])
    for _ in range(n_classical):
        name = choices[gen.integers(len(choices))]
        qs = gen.choice(n, size=ARITY[name], replace=False)
        out.append(gate(name, *qs))
    return out
