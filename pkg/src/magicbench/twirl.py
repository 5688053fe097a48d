"""State twirling: group closure, Pauli equivalence classes, numerical
irreducible-representation decomposition, and the applicability checks for
the Bell-measurement and single-copy benchmarking schemes.

Tolerance ladder (fixed globally): 1e-8 membership, 1e-9 algebraic
identities, 1e-10 fixed points.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .circuits import Circuit
from .dense import (
    DenseState,
    DensityMatrix,
    GATE_MATRICES,
    pauli_matrix,
    tableau_unitary,
)
from .paulis import PauliOperator
from .stabilizer import StabilizerStateSet
from .tableau import CliffordTableau

TOL_MEMBER = 1e-8
TOL_ALGEBRA = 1e-9
TOL_FIXED = 1e-10

DEFAULT_CLOSURE_CAP = 10**5


class ClosureCapError(RuntimeError):
    pass


@dataclass
class TwirlingGroup:
    """Closed list of tableau-level Clifford elements fixing a target state."""

    n: int
    generators: list[CliffordTableau]
    elements: list[CliffordTableau]
    _representatives: list[np.ndarray] | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.elements)

    def unitaries(self) -> list[np.ndarray]:
        """Dense representatives, one fixed phase convention per element."""
        if self._representatives is None:
            self._representatives = [tableau_unitary(t) for t in self.elements]
        return self._representatives

    def fixes_state(self, psi: np.ndarray, tol: float = TOL_FIXED) -> bool:
        return all(
            abs(abs(np.vdot(psi, u @ psi)) - 1.0) <= tol for u in self.unitaries()
        )


def close_group(
    generators: list[CliffordTableau], cap: int = DEFAULT_CLOSURE_CAP
) -> TwirlingGroup:
    """BFS closure under composition, deduplicated at tableau level."""
    if not generators:
        raise ValueError("need at least one generator")
    n = generators[0].n
    ident = CliffordTableau.identity(n)
    seen = {ident.key(): ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for elem in frontier:
            for g in generators:
                new = g.compose(elem)
                key = new.key()
                if key not in seen:
                    if len(seen) >= cap:
                        raise ClosureCapError(f"closure exceeded cap {cap}")
                    seen[key] = new
                    nxt.append(new)
        frontier = nxt
    return TwirlingGroup(n, list(generators), list(seen.values()))


@dataclass
class PauliClassPartition:
    """Orbit partition of all signed Hermitian Paulis under conjugation."""

    n: int
    classes: list[list[PauliOperator]]
    negation_partner: list[int]  # index of the class containing -K

    def class_of(self, p: PauliOperator) -> int:
        for i, cls in enumerate(self.classes):
            if any(q.key() == p.key() for q in cls):
                return i
        raise KeyError(str(p))


def pauli_classes(group: TwirlingGroup) -> PauliClassPartition:
    n = group.n
    all_paulis = [
        PauliOperator(n, x, z, ph)
        for x in range(2**n)
        for z in range(2**n)
        for ph in (0, 2)
    ]
    key_to_index = {p.key(): i for i, p in enumerate(all_paulis)}
    assigned = [-1] * len(all_paulis)
    classes: list[list[PauliOperator]] = []
    for start in all_paulis:
        if assigned[key_to_index[start.key()]] >= 0:
            continue
        cid = len(classes)
        orbit = [start]
        assigned[key_to_index[start.key()]] = cid
        queue = [start]
        while queue:
            p = queue.pop()
            for g in group.generators:
                img = g.conjugate(p)
                idx = key_to_index[img.key()]
                if assigned[idx] < 0:
                    assigned[idx] = cid
                    orbit.append(img)
                    queue.append(img)
        classes.append(sorted(orbit, key=lambda p: p.key()))
    partner = []
    for cls in classes:
        neg = cls[0].negated()
        partner.append(assigned[key_to_index[neg.key()]])
    return PauliClassPartition(n, classes, partner)


def twirl_density(rho: DensityMatrix, group: TwirlingGroup) -> DensityMatrix:
    """(1/|G|) sum_U U rho U^dag, via Pauli-coefficient transport.

    Works entirely at tableau level, so it is insensitive to representative
    phases by construction.
    """
    n = group.n
    if rho.n != n:
        raise ValueError("dimension mismatch")
    d = 2**n
    coeff = {}
    for x in range(d):
        for z in range(d):
            p = PauliOperator(n, x, z, 0)
            c = np.real_if_close(np.trace(rho.entries @ pauli_matrix(p))) / d
            if abs(c) > 1e-15:
                coeff[(x, z)] = complex(c).real
    out = {}
    scale = 1.0 / len(group.elements)
    for (x, z), c in coeff.items():
        p = PauliOperator(n, x, z, 0)
        for elem in group.elements:
            img = elem.conjugate(p)
            out[(img.x, img.z)] = out.get((img.x, img.z), 0.0) + c * img.sign * scale
    mat = np.zeros((d, d), dtype=complex)
    for (x, z), c in out.items():
        mat += c * pauli_matrix(PauliOperator(n, x, z, 0))
    return DensityMatrix(n, mat)


@dataclass
class IrrepDecomposition:
    """Orthogonal projectors onto irreducible invariant subspaces.

    Index 0 is span{psi}; ``labels`` groups mutually equivalent components
    (equal label = equivalent representation).
    """

    n: int
    projectors: list[np.ndarray]
    dims: list[int]
    labels: list[int]
    psi: np.ndarray

    @property
    def k(self) -> int:
        return len(self.projectors) - 1


def _invariant_eigenspaces(mats, dim, rng):
    """Eigenspaces of a group-averaged random Hermitian; generically irreducible."""
    r = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    r = r + r.conj().T
    m = np.zeros((dim, dim), dtype=complex)
    for u in mats:
        m += u @ r @ u.conj().T
    m /= len(mats)
    vals, vecs = np.linalg.eigh(m)
    spaces = []
    start = 0
    scale = max(1.0, np.abs(vals).max())
    for i in range(1, dim + 1):
        if i == dim or vals[i] - vals[start] > 1e-6 * scale:
            spaces.append(vecs[:, start:i])
            start = i
    return spaces


def irrep_decompose(
    group: TwirlingGroup, psi: DenseState, rng=None, max_retries: int = 5
) -> IrrepDecomposition:
    """Decompose the Hilbert space into irreducible invariant subspaces.

    Splitting inside isotypic blocks uses a group-averaged random Hermitian
    operator; two independent draws must agree on the dimension profile,
    otherwise the draw is retried (guards against non-generic draws).
    """
    rng = np.random.default_rng(20240517) if rng is None else rng
    n = group.n
    d = 2**n
    vec = psi.amplitudes
    if not group.fixes_state(vec):
        raise ValueError("psi is not fixed (up to phase) by the group")
    unitaries = group.unitaries()
    # orthonormal basis of the complement of span{psi}
    full = np.eye(d, dtype=complex) - np.outer(vec, vec.conj())
    u_svd, s_svd, _ = np.linalg.svd(full)
    basis = u_svd[:, : d - 1]
    restricted = [basis.conj().T @ u @ basis for u in unitaries]
    for attempt in range(max_retries):
        s1 = _invariant_eigenspaces(restricted, d - 1, rng)
        s2 = _invariant_eigenspaces(restricted, d - 1, rng)
        if sorted(b.shape[1] for b in s1) == sorted(b.shape[1] for b in s2):
            spaces = s1
            break
    else:
        raise RuntimeError("irrep splitting failed to stabilize")
    projectors = [np.outer(vec, vec.conj())]
    dims = [1]
    for b in spaces:
        proj = basis @ b @ b.conj().T @ basis.conj().T
        projectors.append(proj)
        dims.append(b.shape[1])
    _validate_decomposition(projectors, unitaries, d)
    # characters per component, for the equivalence labels
    chars = np.array(
        [[np.trace(p @ u) for u in unitaries] for p in projectors]
    )
    labels = [-1] * len(projectors)
    next_label = 0
    for i in range(len(projectors)):
        if labels[i] >= 0:
            continue
        labels[i] = next_label
        for j in range(i + 1, len(projectors)):
            if labels[j] < 0 and dims[i] == dims[j]:
                if np.abs(chars[i] - chars[j]).max() < TOL_MEMBER:
                    labels[j] = next_label
        next_label += 1
    return IrrepDecomposition(n, projectors, dims, labels, vec.copy())


def _validate_decomposition(projectors, unitaries, d):
    total = np.zeros((d, d), dtype=complex)
    for i, p in enumerate(projectors):
        total += p
        for j, q in enumerate(projectors):
            want = p if i == j else np.zeros_like(p)
            if np.abs(p @ q - want).max() > TOL_ALGEBRA:
                raise RuntimeError("projectors fail orthogonality")
    if np.abs(total - np.eye(d)).max() > TOL_ALGEBRA:
        raise RuntimeError("projectors do not resolve the identity")
    for p in projectors:
        for u in unitaries:
            if np.abs(p @ u - u @ p).max() > TOL_ALGEBRA:
                raise RuntimeError("projector does not commute with the group")
    if sum(int(round(np.real(np.trace(p)))) for p in projectors) != d:
        raise RuntimeError("dimensions do not sum to 2^n")


def check_bell_applicability(
    psi: DenseState, group: TwirlingGroup, decomposition: IrrepDecomposition
) -> bool:
    """Bell scheme applies unless some other 1-dim component carries the same
    character as span{psi} (same phases for every group element)."""
    for j in range(1, len(decomposition.projectors)):
        if decomposition.dims[j] == 1 and decomposition.labels[j] == decomposition.labels[0]:
            return False
    return True


@dataclass
class WitnessComponent:
    """One irreducible component with the stabilizer witnesses found in it."""

    dimension: int
    witnesses: list[np.ndarray]
    witness_groups: list  # StabilizerGroup per witness

    @property
    def state(self) -> np.ndarray:
        return self.witnesses[0]


@dataclass
class SingleCopyCheck:
    applicable: bool
    components: list[WitnessComponent]


def check_single_copy_applicability(
    psi: DenseState,
    group: TwirlingGroup,
    decomposition: IrrepDecomposition,
    stab_set: StabilizerStateSet,
) -> SingleCopyCheck:
    """Single-copy scheme applies iff every irreducible component (in some
    valid decomposition) contains a stabilizer state; witnesses returned.

    Equivalence classes with more than one member are handled through orbit
    spans: the class subspace must split into per-class-size irreducible
    orbit spans, each generated by a stabilizer state.
    """
    if decomposition.n > 3:
        raise ValueError("single-copy check limited to n <= 3")
    vecs = stab_set.vectors()
    groups = stab_set.groups
    unitaries = group.unitaries()
    labels = decomposition.labels
    comps: list[WitnessComponent] = []
    for lab in sorted(set(labels[1:])):
        members = [j for j in range(1, len(labels)) if labels[j] == lab]
        if len(members) == 1:
            j = members[0]
            proj = decomposition.projectors[j]
            found, fgrp = [], []
            for v, g in zip(vecs, groups):
                if np.linalg.norm(proj @ v - v) < TOL_MEMBER:
                    found.append(v)
                    fgrp.append(g)
            if not found:
                return SingleCopyCheck(False, [])
            comps.append(WitnessComponent(decomposition.dims[j], found, fgrp))
        else:
            block = sum(decomposition.projectors[j] for j in members)
            dim_each = decomposition.dims[members[0]]
            cands = []
            for v, g in zip(vecs, groups):
                if np.linalg.norm(block @ v - v) >= TOL_MEMBER:
                    continue
                orbit = np.stack([u @ v for u in unitaries], axis=1)
                rank = np.linalg.matrix_rank(orbit, tol=1e-8)
                if rank == dim_each:
                    q, _ = np.linalg.qr(orbit)
                    basis = _column_space(orbit)
                    cands.append((v, g, basis))
            chosen = _search_direct_sum(cands, len(members), dim_each)
            if chosen is None:
                return SingleCopyCheck(False, [])
            for v, g, _ in chosen:
                comps.append(WitnessComponent(dim_each, [v], [g]))
    return SingleCopyCheck(True, comps)


def _column_space(mat, tol=1e-8):
    u, s, _ = np.linalg.svd(mat, full_matrices=False)
    return u[:, s > tol * s[0]]


def _search_direct_sum(cands, count, dim_each):
    """Find ``count`` irreducible orbit spans whose direct sum fills the block."""
    import itertools

    target_rank = count * dim_each
    for combo in itertools.combinations(range(len(cands)), count):
        stacked = np.concatenate([cands[i][2] for i in combo], axis=1)
        if np.linalg.matrix_rank(stacked, tol=1e-8) == target_rank:
            return [cands[i] for i in combo]
    return None


# -- named magic states and their twirling groups ---------------------------


def t_state() -> DenseState:
    """Bloch vector (1,1,1)/sqrt(3); written in closed form."""
    beta = np.arccos(1 / np.sqrt(3))
    amps = np.array(
        [np.cos(beta / 2), np.exp(1j * np.pi / 4) * np.sin(beta / 2)], dtype=complex
    )
    return DenseState(1, amps)


def h_state() -> DenseState:
    return DenseState(1, np.array([1.0, np.exp(1j * np.pi / 4)]) / np.sqrt(2))


def cz_state() -> DenseState:
    amps = np.zeros(4, dtype=complex)
    amps[0b00] = amps[0b01] = amps[0b10] = 1 / np.sqrt(3)
    return DenseState(2, amps)


def ccz_state() -> DenseState:
    amps = np.ones(8, dtype=complex) / np.sqrt(8)
    amps[0b111] *= -1
    return DenseState(3, amps)


def _tab(n, *gates) -> CliffordTableau:
    circ = Circuit(n)
    for name, *qubits in gates:
        circ.append(name, *qubits)
    return CliffordTableau.from_circuit(circ)


def t_group() -> TwirlingGroup:
    return close_group([_tab(1, ("U0", 0))])


def h_group() -> TwirlingGroup:
    # order-2 involution X<->Y, Z->-Z; the unique nontrivial Clifford fixing
    # the (1,1,0)/sqrt(2) Bloch axis
    return close_group([_tab(1, ("X", 0), ("S", 0))])


def cz_group() -> TwirlingGroup:
    gens = [
        _tab(2, ("CZ", 0, 1)),
        _tab(2, ("SWAP", 0, 1)),
        _tab(2, ("CNOT", 0, 1), ("X", 1)),
    ]
    return close_group(gens)


def plus3_group() -> TwirlingGroup:
    gens = [_tab(3, ("X", q)) for q in range(3)]
    gens += [
        _tab(3, ("CNOT", a, b)) for a in range(3) for b in range(3) if a != b
    ]
    return close_group(gens)


def _match_signed_pauli(mat: np.ndarray, n: int) -> PauliOperator:
    """Identify a matrix as +/- one Hermitian Pauli word, exactly."""
    d = 2**n
    col0 = mat[:, 0]
    x = int(np.argmax(np.abs(col0)))
    if abs(np.abs(col0[x]) - 1.0) > 1e-8:
        raise ValueError("matrix is not a signed Pauli word")
    z = 0
    for k in range(n):
        ratio = mat[(1 << k) ^ x, 1 << k] / col0[x]
        if abs(ratio - 1) < 1e-8:
            pass
        elif abs(ratio + 1) < 1e-8:
            z |= 1 << k
        else:
            raise ValueError("matrix is not a signed Pauli word")
    for ph in (0, 2):
        p = PauliOperator(n, x, z, ph)
        if np.abs(mat - pauli_matrix(p)).max() < 1e-8:
            return p
    raise ValueError("matrix is not a signed Pauli word")


def tableau_from_unitary(u: np.ndarray, n: int) -> CliffordTableau:
    """Extract (and thereby verify) a Clifford tableau from a dense unitary."""
    xs, zs = [], []
    for q in range(n):
        for store, letter in ((xs, "X"), (zs, "Z")):
            pm = pauli_matrix(PauliOperator.single(n, q, letter))
            store.append(_match_signed_pauli(u @ pm @ u.conj().T, n))
    tab = CliffordTableau(n, tuple(xs), tuple(zs))
    if not tab.is_valid():
        raise ValueError("conjugation images are not symplectic")
    return tab


def ccz_group() -> TwirlingGroup:
    """Conjugate every element of the |+++> twirling group by CCZ.

    CCZ is non-Clifford, but each conjugated element is verified to be a
    Clifford (tableau extraction fails otherwise) rather than assumed.
    """
    plus = plus3_group()
    ccz = GATE_MATRICES["CCZ"]
    elements, reps = [], []
    seen = set()
    for tab in plus.elements:
        v = ccz @ tableau_unitary(tab) @ ccz
        vt = tableau_from_unitary(v, 3)
        if vt.key() in seen:
            raise AssertionError("CCZ conjugation collided at tableau level")
        seen.add(vt.key())
        elements.append(vt)
        reps.append(v)
    gens = [tableau_from_unitary(ccz @ tableau_unitary(t) @ ccz, 3) for t in plus.generators]
    return TwirlingGroup(3, gens, elements, reps)


NAMED_STATES = {"T": t_state, "H": h_state, "CZ": cz_state, "CCZ": ccz_state}
NAMED_GROUPS = {"T": t_group, "H": h_group, "CZ": cz_group, "CCZ": ccz_group}
