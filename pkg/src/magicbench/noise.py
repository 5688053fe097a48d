"""Single-parameter circuit noise: trajectory-sampled Pauli channels.

All channels are stochastic Pauli mixtures, so sampling one Pauli insertion
per location reproduces the channel exactly in expectation:

    1-qubit / preparation:  (1 - 3q/2) rho + (q/2) sum_{P in X,Y,Z} P rho P
    2-qubit:                (1 - 5q/4) rho + (q/12) sum_{15 non-identity} P rho P

Measurement read-out bits are flipped classically with probability p/2,
never as a quantum channel.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .paulis import PauliOperator

_TWO_QUBIT_PAULIS = [
    (x, z) for x in range(4) for z in range(4) if (x, z) != (0, 0)
]


@dataclass(frozen=True)
class NoiseModel:
    """Physical error parameter p and the derived per-channel strengths."""

    p: float
    q1: float = field(init=False)
    q2: float = field(init=False)
    q_prep: float = field(init=False)
    p_meas: float = field(init=False)

    def __post_init__(self):
        if not 0.0 <= self.p <= 0.1:
            raise ValueError(f"p={self.p} outside [0, 0.1]")
        object.__setattr__(self, "q1", self.p / 5)
        object.__setattr__(self, "q2", self.p)
        object.__setattr__(self, "q_prep", self.p / 2)
        object.__setattr__(self, "p_meas", self.p / 2)

    def strength(self, kind: str) -> float:
        return {"gate1": self.q1, "gate2": self.q2, "prep": self.q_prep}[kind]


def sample_pauli_noise(kind: str, q: float, rng) -> PauliOperator | None:
    """One sampled Pauli fault, or None for the identity branch.

    gate1/prep: identity with probability 1 - 3q/2, else uniform over {X,Y,Z}.
    gate2: identity with probability 1 - 5q/4, else uniform over the 15
    non-identity two-qubit Paulis.
    """
    if kind in ("gate1", "prep"):
        if not 0.0 <= q <= 2 / 3:
            raise ValueError(f"invalid 1-qubit strength {q}")
        if rng.random() >= 1.5 * q:
            return None
        letter = "XYZ"[rng.integers(3)]
        return PauliOperator.from_string(letter)
    if kind == "gate2":
        if not 0.0 <= q <= 4 / 5:
            raise ValueError(f"invalid 2-qubit strength {q}")
        if rng.random() >= 1.25 * q:
            return None
        x, z = _TWO_QUBIT_PAULIS[rng.integers(15)]
        return PauliOperator(2, x, z, 0)
    raise ValueError(f"unknown channel kind {kind!r}")


def flip_measurement(bit: int, p_meas: float, rng) -> int:
    """bit XOR Bernoulli(p_meas)."""
    if not 0.0 <= p_meas <= 0.5:
        raise ValueError(f"p_meas={p_meas} outside [0, 1/2]")
    return int(bit) ^ int(rng.random() < p_meas)


def branch_probabilities(kind: str, q: float) -> list[float]:
    """Exact branch weights of a channel; sums to 1 up to float addition."""
    if kind in ("gate1", "prep"):
        return [1 - 1.5 * q] + [q / 2] * 3
    if kind == "gate2":
        return [1 - 1.25 * q] + [q / 12] * 15
    raise ValueError(f"unknown channel kind {kind!r}")


def pauli_conjugate_density(rho: np.ndarray, p: PauliOperator) -> np.ndarray:
    """P rho P^dag via index permutation and sign masks (phases cancel)."""
    from .dense import popcount_array

    d = rho.shape[0]
    idx = np.arange(d)
    perm = idx ^ p.x
    signs = 1 - 2 * (popcount_array(perm & p.z) & 1)
    return np.outer(signs, signs) * rho[np.ix_(perm, perm)]


def apply_depolarizing_to_density(rho: np.ndarray, qubits, q: float, n: int) -> np.ndarray:
    """Exact channel evolution on a dense density matrix (oracle path)."""
    kind = "gate1" if len(qubits) == 1 else "gate2"
    weights = branch_probabilities(kind, q)
    paulis = []
    if kind == "gate1":
        paulis += [PauliOperator.single(n, qubits[0], c) for c in "XYZ"]
    else:
        a, b = qubits
        for x, z in _TWO_QUBIT_PAULIS:
            gx = ((x & 1) << a) | (((x >> 1) & 1) << b)
            gz = ((z & 1) << a) | (((z >> 1) & 1) << b)
            paulis.append(PauliOperator(n, gx, gz, 0))
    out = weights[0] * rho
    for w, p in zip(weights[1:], paulis):
        out = out + w * pauli_conjugate_density(rho, p)
    return out
