"""Gate and circuit containers plus the line-based text format.

Text format: one gate per line, ``NAME q1 [q2 [q3]]`` with zero-based qubit
indices; ``#`` starts a comment.  Clifford gate names: I, X, Y, Z, H, S, SDG,
U0, U0DG, CNOT, CZ, SWAP.  The dense backend additionally accepts T, TDG and
CCZ; the tableau backend rejects them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

CLIFFORD_GATES = {
    "I": 1, "X": 1, "Y": 1, "Z": 1, "H": 1, "S": 1, "SDG": 1, "U0": 1,
    "U0DG": 1, "CNOT": 2, "CZ": 2, "SWAP": 2,
}
DENSE_ONLY_GATES = {"T": 1, "TDG": 1, "CCZ": 3}
ALL_GATES = {**CLIFFORD_GATES, **DENSE_ONLY_GATES}

_INVERSE = {
    "S": "SDG", "SDG": "S", "U0": "U0DG", "U0DG": "U0", "T": "TDG", "TDG": "T",
}


class UnknownGateError(ValueError):
    pass


@dataclass(frozen=True)
class Gate:
    name: str
    qubits: tuple[int, ...]

    def __post_init__(self):
        name = self.name.upper()
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "qubits", tuple(self.qubits))
        if name not in ALL_GATES:
            raise UnknownGateError(f"unknown gate name {name!r}")
        if len(self.qubits) != ALL_GATES[name]:
            raise ValueError(f"{name} takes {ALL_GATES[name]} qubits, got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"repeated qubit in {name} {self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise ValueError("negative qubit index")

    @property
    def is_clifford(self) -> bool:
        return self.name in CLIFFORD_GATES

    def inverse(self) -> "Gate":
        return Gate(_INVERSE.get(self.name, self.name), self.qubits)

    def __str__(self) -> str:
        return " ".join([self.name, *map(str, self.qubits)])


def gate(name: str, *qubits: int) -> Gate:
    return Gate(name, tuple(qubits))


@dataclass
class Circuit:
    """Ordered gate list over a fixed qubit count."""

    n: int
    gates: list[Gate] = field(default_factory=list)

    def __post_init__(self):
        for g in self.gates:
            self._check(g)

    def _check(self, g: Gate):
        if any(q >= self.n for q in g.qubits):
            raise ValueError(f"qubit index out of range in {g} (n={self.n})")

    def append(self, name: str, *qubits: int) -> "Circuit":
        g = Gate(name, tuple(qubits))
        self._check(g)
        self.gates.append(g)
        return self

    def extend(self, gates: Iterable[Gate]) -> "Circuit":
        for g in gates:
            self._check(g)
            self.gates.append(g)
        return self

    def inverse(self) -> "Circuit":
        return Circuit(self.n, [g.inverse() for g in reversed(self.gates)])

    @property
    def is_clifford(self) -> bool:
        return all(g.is_clifford for g in self.gates)

    def __iter__(self) -> Iterator[Gate]:
        return iter(self.gates)

    def __len__(self) -> int:
        return len(self.gates)

    def to_text(self) -> str:
        return "\n".join(str(g) for g in self.gates) + ("\n" if self.gates else "")

    @classmethod
    def from_text(cls, text: str, n: int | None = None) -> "Circuit":
        gates = []
        max_q = -1
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                qubits = tuple(int(p) for p in parts[1:])
                g = Gate(parts[0], qubits)
            except (ValueError, UnknownGateError) as exc:
                raise type(exc)(f"line {lineno}: {exc}") from None
            gates.append(g)
            max_q = max(max_q, *g.qubits)
        if n is None:
            n = max_q + 1
        return cls(n, gates)
