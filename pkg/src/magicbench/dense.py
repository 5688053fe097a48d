"""Dense state-vector and density-matrix backend (the small-n oracle).

Basis convention: qubit j corresponds to bit j of the flat index (qubit 0 is
the least significant bit), matching the Pauli mask convention.  Ket-string
helpers reverse the digits so that '|x0 x1 x2>' reads left to right.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuits import Circuit, Gate
from .paulis import PauliOperator

STATE_QUBIT_CAP = 14
DENSITY_QUBIT_CAP = 11

_SQ2 = 1 / np.sqrt(2)

GATE_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1.0, -1.0]).astype(complex),
    "H": _SQ2 * np.array([[1, 1], [1, -1]], dtype=complex),
    "S": np.diag([1.0, 1j]),
    "SDG": np.diag([1.0, -1j]),
    # order-3 Clifford cycling X -> Y -> Z -> X under conjugation
    "U0": np.exp(-1j * np.pi / 4) * _SQ2 * np.array([[1, -1j], [1, 1j]]),
    "T": np.diag([1.0, np.exp(1j * np.pi / 4)]),
    "TDG": np.diag([1.0, np.exp(-1j * np.pi / 4)]),
    # multi-qubit matrices are indexed by the gate's own qubit order:
    # row/col index = q1_bit * 2 + q2_bit (q1 = first argument)
    "CNOT": np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ),
    "CZ": np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex),
    "SWAP": np.array(
        [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
    ),
    "CCZ": np.diag([1.0] * 7 + [-1.0]).astype(complex),
}
GATE_MATRICES["U0DG"] = GATE_MATRICES["U0"].conj().T


class CapacityError(RuntimeError):
    """Dense backend size cap exceeded."""


def _check_norm(vec):
    nrm = np.linalg.norm(vec)
    if abs(nrm - 1.0) > 1e-10:
        raise ValueError(f"state norm {nrm} deviates from 1")


@dataclass
class DenseState:
    """Unit vector over 2^n amplitudes."""

    n: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.n > STATE_QUBIT_CAP:
            raise CapacityError(f"dense states capped at {STATE_QUBIT_CAP} qubits")
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex).reshape(2**self.n)
        _check_norm(self.amplitudes)

    @classmethod
    def zero(cls, n: int) -> "DenseState":
        amps = np.zeros(2**n, dtype=complex)
        amps[0] = 1.0
        return cls(n, amps)

    @classmethod
    def from_kets(cls, *factors: np.ndarray) -> "DenseState":
        """Tensor product of single-qubit kets, qubit 0 first."""
        amps = np.array([1.0], dtype=complex)
        for f in factors:
            amps = np.kron(np.asarray(f, dtype=complex), amps)
        return cls(len(factors), amps)

    def copy(self) -> "DenseState":
        return DenseState(self.n, self.amplitudes.copy())

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def overlap(self, other: "DenseState") -> complex:
        return np.vdot(self.amplitudes, other.amplitudes)

    def to_density(self) -> "DensityMatrix":
        return DensityMatrix(self.n, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite matrix over 2^n."""

    n: int
    entries: np.ndarray

    def __post_init__(self):
        if self.n > DENSITY_QUBIT_CAP:
            raise CapacityError(f"dense densities capped at {DENSITY_QUBIT_CAP} qubits")
        d = 2**self.n
        self.entries = np.asarray(self.entries, dtype=complex).reshape(d, d)
        self.validate()

    def validate(self, tol_tr=1e-10, tol_pos=1e-9):
        if np.abs(self.entries - self.entries.conj().T).max() > 1e-9:
            raise ValueError("density matrix not Hermitian")
        if abs(np.trace(self.entries) - 1.0) > tol_tr:
            raise ValueError(f"trace {np.trace(self.entries)} deviates from 1")
        if np.linalg.eigvalsh(self.entries).min() < -tol_pos:
            raise ValueError("density matrix not positive semidefinite")

    @classmethod
    def from_state(cls, state: DenseState) -> "DensityMatrix":
        return state.to_density()

    @classmethod
    def maximally_mixed(cls, n: int) -> "DensityMatrix":
        d = 2**n
        return cls(n, np.eye(d, dtype=complex) / d)

    def copy(self) -> "DensityMatrix":
        return DensityMatrix(self.n, self.entries.copy())

    def fidelity_to(self, state: DenseState) -> float:
        return float(np.real(state.amplitudes.conj() @ self.entries @ state.amplitudes))

    def purity(self) -> float:
        return float(np.real(np.trace(self.entries @ self.entries)))


def _apply_unitary_to_vec(amps: np.ndarray, u: np.ndarray, qubits, n: int):
    k = len(qubits)
    tensor = amps.reshape((2,) * n)
    # axis for qubit j is n-1-j (qubit 0 = least significant = last axis)
    axes = [n - 1 - q for q in qubits]
    u_t = u.reshape((2,) * (2 * k))
    tensor = np.tensordot(u_t, tensor, axes=(list(range(k, 2 * k)), axes))
    tensor = np.moveaxis(tensor, list(range(k)), axes)
    return tensor.reshape(-1)


def apply_gate_to_vector(amps: np.ndarray, g: Gate, n: int) -> np.ndarray:
    return _apply_unitary_to_vec(amps, GATE_MATRICES[g.name], g.qubits, n)


def circuit_unitary(circuit: Circuit) -> np.ndarray:
    """Full 2^n x 2^n matrix of the circuit (small n only)."""
    if circuit.n > 10:
        raise CapacityError("circuit_unitary capped at 10 qubits")
    d = 2**circuit.n
    u = np.eye(d, dtype=complex)
    for col in range(d):
        u[:, col] = _apply_circuit_vec(u[:, col], circuit)
    return u


def _apply_circuit_vec(amps, circuit):
    for g in circuit:
        amps = apply_gate_to_vector(amps, g, circuit.n)
    return amps


def dense_apply(state, circuit: Circuit):
    """Exact unitary evolution of a DenseState or DensityMatrix."""
    if isinstance(state, DenseState):
        if circuit.n != state.n:
            raise ValueError("qubit count mismatch")
        return DenseState(state.n, _apply_circuit_vec(state.amplitudes.copy(), circuit))
    if isinstance(state, DensityMatrix):
        if circuit.n != state.n:
            raise ValueError("qubit count mismatch")
        rho = state.entries.copy()
        for g in circuit:
            u = GATE_MATRICES[g.name]
            rho = _conj_density(rho, u, g.qubits, state.n)
        return DensityMatrix(state.n, rho)
    raise TypeError(f"unsupported state type {type(state)}")


def _conj_density(rho, u, qubits, n):
    d = 2**n
    vecs = rho.reshape(d, d)
    # apply U to columns of rho viewed as kets, then U* to rows
    out = np.empty_like(vecs)
    for j in range(d):
        out[:, j] = _apply_unitary_to_vec(np.ascontiguousarray(vecs[:, j]), u, qubits, n)
    out2 = np.empty_like(out)
    uc = u.conj()
    for i in range(d):
        out2[i, :] = _apply_unitary_to_vec(np.ascontiguousarray(out[i, :]), uc, qubits, n)
    return out2


def pauli_matrix(p: PauliOperator) -> np.ndarray:
    """Dense matrix of a signed Pauli (small n)."""
    if p.n > 10:
        raise CapacityError("pauli_matrix capped at 10 qubits")
    m = np.array([[1.0 + 0j]])
    for q in range(p.n):
        m = np.kron(GATE_MATRICES[p.letter(q)], m)
    return (1j**p.phase) * m


def apply_pauli_to_vector(amps: np.ndarray, p: PauliOperator) -> np.ndarray:
    """P |psi> using index arithmetic; exact phases."""
    d = amps.shape[0]
    idx = np.arange(d)
    src = idx ^ p.x
    signs = 1 - 2 * (popcount_array(src & p.z) & 1)
    out = amps[src] * signs
    k = (p.phase + (p.x & p.z).bit_count()) % 4
    return out * (1j**k)


def pauli_expectation_vec(amps: np.ndarray, p: PauliOperator) -> complex:
    return complex(np.vdot(amps, apply_pauli_to_vector(amps, p)))


def popcount_array(arr: np.ndarray) -> np.ndarray:
    """Vectorized popcount for int arrays."""
    arr = arr.astype(np.int64)
    out = np.zeros_like(arr)
    while arr.any():
        out += arr & 1
        arr >>= 1
    return out


def measurement_distribution(state: DenseState) -> np.ndarray:
    """All-qubit computational-basis outcome probabilities, indexed by bits."""
    return state.probabilities()


def tableau_unitary(tab, tol: float = 1e-12) -> np.ndarray:
    """Deterministic dense representative of a Clifford tableau.

    Column x is (U X^x U^dag) U|0..0>, with U|0..0> fixed as the stabilizer
    state of the Z-images, first nonzero amplitude made real positive.  The
    result realizes the tableau's conjugation action exactly, with one fixed
    global-phase convention.
    """
    n = tab.n
    if n > 10:
        raise CapacityError("tableau_unitary capped at 10 qubits")
    d = 2**n
    # stabilizer state: project a basis vector with the Z-image projectors
    for trial in range(d):
        v = np.zeros(d, dtype=complex)
        v[trial] = 1.0
        for g in tab.z_images:
            v = 0.5 * (v + apply_pauli_to_vector(v, g))
        nrm = np.linalg.norm(v)
        if nrm > 1e-6:
            v /= nrm
            break
    else:
        raise AssertionError("no basis vector overlaps the stabilizer state")
    nz = np.flatnonzero(np.abs(v) > tol)[0]
    v *= np.abs(v[nz]) / v[nz]
    u = np.empty((d, d), dtype=complex)
    for x in range(d):
        px = PauliOperator(n, 0, 0, 0)
        col = v
        rem, q = x, 0
        while rem:
            if rem & 1:
                col = apply_pauli_to_vector(col, tab.x_images[q])
            rem >>= 1
            q += 1
        u[:, x] = col
    return u
