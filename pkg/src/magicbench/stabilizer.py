"""Stabilizer groups and exhaustive stabilizer-state enumeration for small n."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .circuits import Gate
from .paulis import PauliOperator, pauli_mul
from .tableau import complete_tableau, conjugate_pauli_by_gate, tableau_to_circuit

STABILIZER_STATE_COUNTS = {1: 6, 2: 60, 3: 1080}


def canonical_generators(gens: list[PauliOperator]) -> tuple[PauliOperator, ...]:
    """Unique reduced generating set (GF(2) RREF with exact sign tracking)."""
    n = gens[0].n
    rows = list(gens)
    r = 0
    cols = [("x", c) for c in range(n)] + [("z", c) for c in range(n)]
    for kind, c in cols:
        bit = lambda p: ((p.x if kind == "x" else p.z) >> c) & 1
        piv = next((i for i in range(r, len(rows)) if bit(rows[i])), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        for i in range(len(rows)):
            if i != r and bit(rows[i]):
                rows[i] = pauli_mul(rows[i], rows[r])
        r += 1
    return tuple(sorted(rows, key=lambda p: p.key()))


@dataclass
class StabilizerGroup:
    """Independent, mutually commuting Hermitian Paulis with signs."""

    generators: list[PauliOperator]

    def __post_init__(self):
        gens = self.generators
        if not gens:
            raise ValueError("empty generator list")
        n = gens[0].n
        if len(gens) > n:
            raise ValueError("more than n generators")
        for i, g in enumerate(gens):
            if g.n != n:
                raise ValueError("mixed qubit counts")
            if not g.is_hermitian:
                raise ValueError(f"generator {g} not Hermitian")
            for h in gens[i + 1 :]:
                if not g.commutes_with(h):
                    raise ValueError(f"generators {g}, {h} anticommute")
        if any(p.x == 0 and p.z == 0 for p in canonical_generators(gens)):
            raise ValueError("generators are not independent")

    @property
    def n(self) -> int:
        return self.generators[0].n

    @classmethod
    def from_strings(cls, lines: list[str]) -> "StabilizerGroup":
        return cls([PauliOperator.from_string(s) for s in lines])

    def canonical(self) -> tuple:
        return tuple(p.key() for p in canonical_generators(self.generators))

    def elements(self) -> list[PauliOperator]:
        """All 2^m group elements (small m only)."""
        out = [PauliOperator.identity(self.n)]
        for g in self.generators:
            out += [pauli_mul(p, g) for p in out]
        return out

    def contains(self, p: PauliOperator) -> bool:
        n = self.n
        cols = [("x", c) for c in range(n)] + [("z", c) for c in range(n)]
        bit = lambda q, kind, c: ((q.x if kind == "x" else q.z) >> c) & 1
        lead = {}
        for row in canonical_generators(self.generators):
            for col in cols:
                if bit(row, *col):
                    lead[col] = row
                    break
        acc = p
        for col in cols:
            if bit(acc, *col):
                if col not in lead:
                    return False
                acc = pauli_mul(acc, lead[col])
        return acc.x == 0 and acc.z == 0 and acc.phase == 0

    def conjugated_by_gate(self, g: Gate) -> "StabilizerGroup":
        return StabilizerGroup([conjugate_pauli_by_gate(g, p) for p in self.generators])

    def state_vector(self) -> np.ndarray:
        """Dense unit vector of the stabilized state (needs exactly n generators).

        Phase convention: first nonzero amplitude real positive.
        """
        from .dense import apply_pauli_to_vector

        n = self.n
        if len(self.generators) != n:
            raise ValueError("state_vector needs a full set of n generators")
        d = 2**n
        for trial in range(d):
            v = np.zeros(d, dtype=complex)
            v[trial] = 1.0
            for g in self.generators:
                v = 0.5 * (v + apply_pauli_to_vector(v, g))
            nrm = np.linalg.norm(v)
            if nrm > 1e-8:
                v /= nrm
                nz = np.flatnonzero(np.abs(v) > 1e-10)[0]
                v *= np.abs(v[nz]) / v[nz]
                return v
        raise AssertionError("inconsistent stabilizer group")

    def preparation_circuit(self):
        """Clifford circuit mapping |0..0> to the stabilized state (full set)."""
        tab = complete_tableau(list(canonical_generators(self.generators)))
        return tableau_to_circuit(tab)

    def to_text(self) -> str:
        return "\n".join(str(g) for g in self.generators) + "\n"


@dataclass
class StabilizerStateSet:
    """All n-qubit stabilizer states, as canonical groups plus dense vectors."""

    n: int
    groups: list[StabilizerGroup]
    _vectors: list[np.ndarray] | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.groups)

    def vectors(self) -> list[np.ndarray]:
        if self._vectors is None:
            self._vectors = [g.state_vector() for g in self.groups]
        return self._vectors


def enumerate_stabilizer_states(n: int) -> StabilizerStateSet:
    """Complete duplicate-free state set via BFS closure under {H, S, CNOT}.

    Count matches 2^n * prod_k (2^k + 1); supported for n in {1, 2, 3} only
    (combinatorially explosive beyond).
    """
    if n not in STABILIZER_STATE_COUNTS:
        raise ValueError(f"n={n} outside supported range {{1, 2, 3}}")
    gates = [Gate("H", (q,)) for q in range(n)] + [Gate("S", (q,)) for q in range(n)]
    gates += [
        Gate("CNOT", (a, b)) for a in range(n) for b in range(n) if a != b
    ]
    start = StabilizerGroup(
        [PauliOperator.single(n, q, "Z") for q in range(n)]
    )
    seen = {start.canonical(): start}
    frontier = [start]
    while frontier:
        nxt = []
        for grp in frontier:
            for g in gates:
                new = grp.conjugated_by_gate(g)
                key = new.canonical()
                if key not in seen:
                    seen[key] = new
                    nxt.append(new)
        frontier = nxt
    expected = STABILIZER_STATE_COUNTS[n]
    if len(seen) != expected:
        raise AssertionError(f"enumerated {len(seen)} states, expected {expected}")
    return StabilizerStateSet(n, list(seen.values()))
