"""The [[7,1,3]] Steane and [[8,3,2]] color codes: logical operators,
encoders, transversal gates, 5-to-1 distillation, and error detection.

Codes are data: stabilizer lists ship as text fixtures in ``data/`` and user
codes load through the same format.
"""

from __future__ import annotations

import functools
import importlib.resources
from dataclasses import dataclass

import numpy as np

from .circuits import Circuit, Gate
from .dense import DenseState, DensityMatrix, apply_gate_to_vector, pauli_matrix
from .paulis import PauliOperator, pauli_mul
from .stabilizer import StabilizerGroup
from .tableau import CliffordTableau, complete_tableau, tableau_to_circuit


@dataclass
class CodeDefinition:
    name: str
    n_physical: int
    k_logical: int
    stabilizers: StabilizerGroup
    logical_x: list[PauliOperator]
    logical_z: list[PauliOperator]

    def __post_init__(self):
        self.validate()

    def validate(self):
        gens = self.stabilizers.generators
        if len(gens) != self.n_physical - self.k_logical:
            raise ValueError("generator count inconsistent with [[n,k]]")
        for ops in (self.logical_x, self.logical_z):
            for L in ops:
                for g in gens:
                    if not L.commutes_with(g):
                        raise ValueError(f"logical {L} anticommutes with stabilizer {g}")
        for i, lx in enumerate(self.logical_x):
            for j, lz in enumerate(self.logical_z):
                anti = not lx.commutes_with(lz)
                if anti != (i == j):
                    raise ValueError("logical operators violate symplectic pairing")

    def logical_y(self, i: int) -> PauliOperator:
        p = pauli_mul(self.logical_x[i], self.logical_z[i])
        return PauliOperator(p.n, p.x, p.z, p.phase + 1)

    def projector_elements(self) -> list[PauliOperator]:
        """All 2^(n-k) stabilizer-group elements (code projector expansion)."""
        return self.stabilizers.elements()

    def code_projector(self) -> np.ndarray:
        d = 2**self.n_physical
        proj = np.zeros((d, d), dtype=complex)
        elems = self.projector_elements()
        for g in elems:
            proj += pauli_matrix(g)
        return proj / len(elems)

    @classmethod
    def from_text(cls, text: str) -> "CodeDefinition":
        name, n, k = None, None, None
        stabs, lx, lz = [], {}, {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if parts[0] == "name":
                name = parts[1]
            elif parts[0] == "n":
                n = int(parts[1])
            elif parts[0] == "k":
                k = int(parts[1])
            elif parts[0] == "stabilizer":
                stabs.append(PauliOperator.from_string(parts[1]))
            elif parts[0] == "logical_x":
                lx[int(parts[1])] = PauliOperator.from_string(parts[2])
            elif parts[0] == "logical_z":
                lz[int(parts[1])] = PauliOperator.from_string(parts[2])
            else:
                raise ValueError(f"unknown code-file directive {parts[0]!r}")
        return cls(
            name,
            n,
            k,
            StabilizerGroup(stabs),
            [lx[i] for i in range(k)],
            [lz[i] for i in range(k)],
        )


@functools.cache
def load_code(name: str) -> CodeDefinition:
    text = importlib.resources.files("magicbench.data").joinpath(f"{name}.txt").read_text()
    return CodeDefinition.from_text(text)


@dataclass
class DetectionVerdict:
    accepted: bool
    syndrome: tuple[int, ...]
    logical_bits: tuple[int, ...] | None  # valid only when accepted

    def __post_init__(self):
        if not self.accepted:
            object.__setattr__(self, "logical_bits", None)


# -- Steane [[7,1,3]] --------------------------------------------------------

# Z-type check supports used for read-out error detection (0-based qubits)
STEANE_Z_SUPPORTS = ((3, 4, 5, 6), (1, 2, 5, 6), (0, 2, 4, 6))


def steane_encoder() -> Circuit:
    """Standard CSS encoder: qubit 0 carries the input, qubits 1-6 are |0>.

    Data first spreads along an X_L representative disjoint from the
    generator pivots, then each X-generator block is seeded with H + CNOTs.
    """
    c = Circuit(7)
    for t in (5, 6):  # X_L representative {0,5,6}
        c.append("CNOT", 0, t)
    for pivot, targets in ((3, (4, 5, 6)), (1, (0, 4, 5)), (2, (0, 4, 6))):
        c.append("H", pivot)
        for t in targets:
            c.append("CNOT", pivot, t)
    return c


def steane_detect(bits) -> DetectionVerdict:
    """Post-select on the Z-type checks of a 7-bit transversal read-out."""
    bits = list(bits)
    if len(bits) != 7:
        raise ValueError("need 7 read-out bits")
    syndrome = tuple(sum(bits[q] for q in supp) % 2 for supp in STEANE_Z_SUPPORTS)
    accepted = not any(syndrome)
    logical = (sum(bits) % 2,) if accepted else None
    return DetectionVerdict(accepted, syndrome, logical)


@functools.cache
def _single_qubit_cliffords() -> list[tuple[CliffordTableau, tuple[str, ...]]]:
    """All 24 tableau-level 1-qubit Cliffords with shortest gate words."""
    names = ["H", "S", "SDG", "X", "Y", "Z", "U0", "U0DG"]
    ident = CliffordTableau.identity(1)
    found = {ident.key(): (ident, ())}
    frontier = [(ident, ())]
    while frontier:
        nxt = []
        for tab, word in frontier:
            for nm in names:
                circ = Circuit(1, [Gate(nm, (0,))])
                new = CliffordTableau.from_circuit(circ).compose(tab)
                if new.key() not in found:
                    found[new.key()] = (new, word + (nm,))
                    nxt.append(found[new.key()])
        frontier = nxt
    assert len(found) == 24
    return list(found.values())


def _logical_action_of_transversal(word: tuple[str, ...], code: CodeDefinition):
    """1-qubit tableau induced on the logical qubit by word^(x n_physical)."""
    n = code.n_physical
    circ = Circuit(n)
    for nm in word:
        for q in range(n):
            circ.append(nm, q)
    tab = CliffordTableau.from_circuit(circ)
    sx = tab.conjugate(code.logical_x[0])
    sz = tab.conjugate(code.logical_z[0])
    images = {}
    for target, img in (("X", sx), ("Z", sz)):
        for letter, rep in (
            ("X", code.logical_x[0]),
            ("Y", code.logical_y(0)),
            ("Z", code.logical_z[0]),
        ):
            if (img.x, img.z) == (rep.x, rep.z):
                sign = (img.phase - rep.phase) % 4
                if sign not in (0, 2):
                    return None
                images[target] = PauliOperator.single(1, 0, letter).negated() if sign else PauliOperator.single(1, 0, letter)
                break
        else:
            return None
    return CliffordTableau(1, (images["X"],), (images["Z"],))


@functools.cache
def steane_transversal_word(gate_name: str) -> tuple[str, ...]:
    """Physical per-qubit word whose 7-fold product implements the logical gate.

    Transversal application twists single-qubit Cliffords (S_L = SDG^x7 and
    friends), so the word is found by searching the 24 Cliffords for the one
    whose induced logical action matches.
    """
    code = load_code("steane")
    target = CliffordTableau.from_circuit(Circuit(1, [Gate(gate_name, (0,))]))
    for tab, word in _single_qubit_cliffords():
        action = _logical_action_of_transversal(word, code)
        if action == target:
            return word
    raise ValueError(f"gate {gate_name} has no transversal realization found")


def steane_logical_1q(gate_name: str, block: int, circ: Circuit):
    """Append the transversal realization of a logical 1-qubit Clifford."""
    word = steane_transversal_word(gate_name)
    base = 7 * block
    for nm in word:
        for w in range(7):
            circ.append(nm, base + w)


def steane_logical_2block(gate_name: str, block_a: int, block_b: int, circ: Circuit):
    """Pairwise transversal CNOT/CZ/SWAP between two Steane blocks."""
    if gate_name not in ("CNOT", "CZ", "SWAP"):
        raise ValueError(f"{gate_name} is not transversal between blocks")
    for w in range(7):
        circ.append(gate_name, 7 * block_a + w, 7 * block_b + w)


def transversal_logical(code: CodeDefinition, gate: Gate) -> Circuit:
    """Physical circuit realizing a logical gate from the code's table."""
    if code.name == "steane":
        if len(gate.qubits) == 1:
            circ = Circuit(7 * (gate.qubits[0] + 1))
            steane_logical_1q(gate.name, gate.qubits[0], circ)
            return circ
        circ = Circuit(7 * (max(gate.qubits) + 1))
        steane_logical_2block(gate.name, gate.qubits[0], gate.qubits[1], circ)
        return circ
    if code.name == "c832":
        if gate.name in ("X", "Y", "Z"):
            circ = Circuit(8)
            mask = {"X": code.logical_x, "Z": code.logical_z}.get(gate.name)
            op = (
                code.logical_y(gate.qubits[0])
                if gate.name == "Y"
                else mask[gate.qubits[0]]
            )
            for q in range(8):
                letter = op.letter(q)
                if letter != "I":
                    circ.append(letter, q)
            return circ
        if gate.name == "CCZ":
            if tuple(gate.qubits) != (0, 1, 2):
                raise ValueError("transversal CCZ acts on all three logical qubits")
            return c832_ccz_circuit()
        if gate.name == "CNOT":
            circ = Circuit(8)
            for a, b in C832_CNOT_RELABEL[gate.qubits]:
                circ.append("SWAP", a, b)
            return circ
        raise ValueError(f"{gate.name} is not in the [[8,3,2]] transversal table")
    raise ValueError(f"no transversal table for code {code.name}")


# -- 5-to-1 magic state distillation ----------------------------------------

MSD_ACCEPT_PATTERN = (1, 0, 1, 1)


@functools.cache
def _fivequbit_encoder_tableau() -> CliffordTableau:
    code = load_code("fivequbit")
    z_targets = [code.logical_z[0]] + list(code.stabilizers.generators)
    return complete_tableau(z_targets, {0: code.logical_x[0]})


@functools.cache
def msd_decoder_circuit() -> Circuit:
    """Decoder of the distillation code: syndrome moves to Z of qubits 1-4."""
    return tableau_to_circuit(_fivequbit_encoder_tableau().inverse())


@functools.cache
def _t_projected_output():
    """Ideal-input syndrome-0 branch: acceptance weight and output ket."""
    from .twirl import t_state

    dec = msd_decoder_circuit()
    t = t_state().amplitudes
    amps = np.array([1.0 + 0j])
    for _ in range(5):
        amps = np.kron(t, amps)
    for g in dec:
        amps = apply_gate_to_vector(amps, g, 5)
    # project qubits 1-4 onto |0000>: surviving flat indices are 0 and 1
    sub = amps.copy()
    mask = np.arange(32) >> 1 != 0
    sub[mask] = 0.0
    weight = float(np.sum(np.abs(sub) ** 2))
    ket = np.array([amps[0], amps[1]])
    ket /= np.linalg.norm(ket)
    return weight, ket


@functools.cache
def msd_output_correction() -> tuple[str, ...]:
    """Fixed 1-qubit Clifford mapping the raw distilled output onto the
    magic-input axis; baked into the logical circuit."""
    from .twirl import t_state

    _, ket = _t_projected_output()
    target = t_state().amplitudes
    for tab, word in _single_qubit_cliffords():
        from .dense import tableau_unitary

        u = tableau_unitary(tab)
        if abs(abs(np.vdot(target, u @ ket)) - 1.0) < 1e-9:
            return word
    raise AssertionError("no Clifford maps the distilled output to the target")


def msd_ideal_accept_probability() -> float:
    """Golden constant of this construction, from the dense oracle."""
    weight, _ = _t_projected_output()
    return weight


def msd_5to1_exact(inputs: list[DensityMatrix]):
    """Exact acceptance probability and output state for five input copies.

    Runs the decoder on the dense product state and projects the measured
    qubits onto the accepted pattern; the pattern is realized as a classical
    relabeling of the syndrome read-out (X_L flips cost no physical gates).
    """
    if len(inputs) != 5:
        raise ValueError("need five input blocks")
    rho = np.array([[1.0 + 0j]])
    for s in inputs:
        rho = np.kron(s.entries, rho)
    dec = msd_decoder_circuit()
    from .dense import dense_apply

    rho = dense_apply(DensityMatrix(5, rho), dec).entries
    # accepted branch = syndrome qubits 1-4 all zero (before relabeling)
    keep = [0, 1]
    sub = rho[np.ix_(keep, keep)]
    p_acc = float(np.real(np.trace(sub)))
    if p_acc <= 0:
        return 0.0, None
    out = sub / p_acc
    from .dense import GATE_MATRICES

    for nm in msd_output_correction():
        u = GATE_MATRICES[nm]
        out = u @ out @ u.conj().T
    return p_acc, DensityMatrix(1, out)


def msd_5to1(inputs: list[DensityMatrix], rng) -> tuple[bool, DensityMatrix | None]:
    """Sampled acceptance; on accept returns the distilled output block."""
    p_acc, out = msd_5to1_exact(inputs)
    if rng.random() >= p_acc:
        return False, None
    return True, out


@functools.cache
def msd_logical_gates() -> list[Gate]:
    """Logical-level distillation circuit: decoder plus output correction.

    Acceptance reads the measured logical qubits 1-4 against the pattern
    (1,0,1,1); the pattern flips relative to the raw zero syndrome are a
    read-out relabeling (see msd_pattern_flip_mask), not physical gates.
    """
    gates = list(msd_decoder_circuit().gates)
    for nm in msd_output_correction():
        gates.append(Gate(nm, (0,)))
    return gates


def msd_pattern_flip_mask() -> tuple[int, ...]:
    """XOR applied to the measured logical bits so accept reads (1,0,1,1)."""
    return MSD_ACCEPT_PATTERN


# -- [[8,3,2]] ----------------------------------------------------------------

C832_CCZ_EXPONENTS = (1, -1, -1, 1, -1, 1, 1, -1)

C832_CNOT_RELABEL = {
    (0, 1): ((0, 4), (1, 5)),
    (1, 0): ((0, 2), (1, 3)),
    (0, 2): ((0, 4), (2, 6)),
    (2, 0): ((0, 1), (2, 3)),
    (1, 2): ((0, 2), (4, 6)),
    (2, 1): ((0, 1), (4, 5)),
}

C832_DETECT_SUPPORT = (1, 3, 4, 6)  # support of (X1 X3)_L and of G1*G3


def c832_ccz_circuit() -> Circuit:
    """Transversal CCZ_L: T / T-dagger pattern over the eight data qubits."""
    c = Circuit(8)
    for q, e in enumerate(C832_CCZ_EXPONENTS):
        c.append("T" if e > 0 else "TDG", q)
    return c


def c832_plus_encoder() -> Circuit:
    """Non-fault-tolerant encoder |0^8> -> |+++>_L (CSS H/CNOT ladder).

    All CNOTs commute (controls and targets are disjoint qubit sets); the
    order is chosen so the final CNOT into each target straddles the
    detection support {1,3,4,6}, making every single-fault residual either
    detectable or a harmless logical X.  Verified exhaustively in the tests.
    """
    c = Circuit(8)
    for pivot in (4, 2, 1, 0):
        c.append("H", pivot)
    for pair in ((2, 3), (1, 3), (0, 3), (0, 5), (4, 5), (1, 5),
                 (4, 6), (2, 6), (0, 6), (4, 7), (2, 7), (1, 7)):
        c.append("CNOT", *pair)
    return c


def c832_detection_circuit(anc_x: int = 8, anc_z: int = 9) -> Circuit:
    """Flagged joint measurement of (X1 X3)_L and G1*G3 with two ancillas.

    The ancillas flag each other through the sandwiching CNOT, so a hook
    fault on either chain flips the partner's read-out and the run is
    discarded; without the flag a single mid-chain fault can deposit an
    undetectable weight-2 error on the data.
    """
    c = Circuit(10)
    c.append("H", anc_x)
    c.append("CNOT", anc_x, anc_z)
    for q in C832_DETECT_SUPPORT:
        c.append("CNOT", q, anc_z)
    for q in C832_DETECT_SUPPORT:
        c.append("CNOT", anc_x, q)
    c.append("CNOT", anc_x, anc_z)
    c.append("H", anc_x)
    return c


def c832_logical_state(bits: tuple[int, int, int] | None = None) -> DenseState:
    """|x1 x2 x3>_L, or |+++>_L when bits is None."""
    code = load_code("c832")
    d = 2**8
    v = np.zeros(d, dtype=complex)
    v[0] = 1.0
    from .dense import apply_pauli_to_vector

    for g in code.stabilizers.generators:
        v = 0.5 * (v + apply_pauli_to_vector(v, g))
    if bits is None:
        ops = code.logical_x
        for op in ops:
            v = 0.5 * (v + apply_pauli_to_vector(v, op))
    else:
        for i, b in enumerate(bits):
            if b:
                v = apply_pauli_to_vector(v, code.logical_x[i])
    nrm = np.linalg.norm(v)
    v /= nrm
    nz = np.flatnonzero(np.abs(v) > 1e-12)[0]
    v *= np.abs(v[nz]) / v[nz]
    return DenseState(8, v)


def c832_ccz_logical_state() -> DenseState:
    """|CCZ>_L: transversal CCZ applied to |+++>_L."""
    st = c832_logical_state(None)
    amps = st.amplitudes.copy()
    for g in c832_ccz_circuit():
        amps = apply_gate_to_vector(amps, g, 8)
    return DenseState(8, amps)


def c832_project(rho: DensityMatrix) -> tuple[DensityMatrix, float]:
    """Perfect code-space projection Pi rho Pi / Tr; returns (state, weight)."""
    code = load_code("c832")
    proj = code.code_projector()
    out = proj @ rho.entries @ proj
    w = float(np.real(np.trace(out)))
    if w < 1e-12:
        raise ValueError("projection annihilated the state")
    return DensityMatrix(8, out / w), w


def c832_project_vector(amps: np.ndarray) -> tuple[np.ndarray, float]:
    """Code-space projection of a state vector; returns (normalized, weight)."""
    from .dense import apply_pauli_to_vector

    code = load_code("c832")
    v = amps
    for g in code.stabilizers.generators:
        v = 0.5 * (v + apply_pauli_to_vector(v, g))
    w = float(np.linalg.norm(v) ** 2)
    if w < 1e-14:
        return v, 0.0
    return v / np.sqrt(w), w
