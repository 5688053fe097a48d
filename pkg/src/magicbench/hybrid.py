"""Hybrid backend: Clifford frame over n qubits plus an exact density matrix
on k <= 12 designated magic-input qubits.

The represented global state is  F (|0^(n-k)><0^(n-k)| (x) rho_M) F^dag  for
the accumulated Clifford frame F.  Internally we track the pull-back images
A_q = F^dag Z_q F and B_q = F^dag X_q F as signed Paulis; gates, Pauli noise
insertions and Z measurements update these rows exactly.

Measurement rule for Z_q (pull-back A = F^dag Z_q F):

* If A acts as X or Y on some still-stabilized qubit j, the outcome is a
  fair coin and the frame absorbs the Clifford W = ((-1)^b A + Z_j)/sqrt(2);
  the magic density is untouched.
* Otherwise A restricted to the |0> register is a Z word (eigenvalue +1) and
  the outcome statistics and post-measurement update act on the magic
  density alone, through the projector (I + (-1)^b s sigma_M)/2.
"""

from __future__ import annotations

import numpy as np

from .circuits import Circuit, Gate
from .dense import DensityMatrix, popcount_array
from .paulis import PauliOperator, pauli_mul
from .tableau import conjugate_pauli_by_gate

MAGIC_QUBIT_CAP = 12


class TraceCollapseError(RuntimeError):
    """Magic-register trace fell below tolerance: impossible branch."""


def pauli_expectation_density(rho: np.ndarray, p: PauliOperator) -> float:
    """Tr[rho * P] for a Hermitian Pauli."""
    d = rho.shape[0]
    idx = np.arange(d)
    src = idx ^ p.x
    # Tr[rho P] = sum_i rho[i, i^x] * P[i^x, i]; P[i^x, i] = kappa (-1)^(z.i)
    signs = 1 - 2 * (popcount_array(idx & p.z) & 1)
    kappa = 1j ** ((p.phase + (p.x & p.z).bit_count()) % 4)
    val = kappa * np.sum(rho[idx, src] * signs)
    return float(np.real(val))


def project_density(rho: np.ndarray, p: PauliOperator, sign: int, outcome: int):
    """((I + (-1)^b s P)/2) rho (same)/2, renormalized; returns (rho', prob)."""
    d = rho.shape[0]
    idx = np.arange(d)
    src = idx ^ p.x
    lsigns = 1 - 2 * (popcount_array(src & p.z) & 1)  # (-1)^(z.(i^x)), left mult
    kappa = 1j ** ((p.phase + (p.x & p.z).bit_count()) % 4)
    c = sign * (1 if outcome == 0 else -1)
    prho = kappa * (rho[src, :] * lsigns[:, None])
    rhop = np.conj(kappa) * (rho[:, src] * lsigns[None, :])
    prhop = kappa * (rhop[src, :] * lsigns[:, None])
    new = 0.25 * (rho + c * prho + c * rhop + prhop)
    prob = float(np.real(np.trace(new)))
    if prob < 1e-12:
        raise TraceCollapseError(f"branch probability {prob}")
    return new / prob, prob


class HybridState:
    """Mutable per-trajectory simulator state; confine to one worker."""

    def __init__(self, n: int, magic_qubits=(), magic_density=None, magic_ket=None):
        self.n = n
        self.magic_qubits = tuple(sorted(magic_qubits))
        self.k = len(self.magic_qubits)
        if self.k > MAGIC_QUBIT_CAP:
            raise ValueError(f"magic register capped at {MAGIC_QUBIT_CAP} qubits")
        self.stab_mask = ((1 << n) - 1) & ~sum(1 << q for q in self.magic_qubits)
        self.zrows = [PauliOperator.single(n, q, "Z") for q in range(n)]
        self.xrows = [PauliOperator.single(n, q, "X") for q in range(n)]
        self.ket = None
        self.rho = None
        if magic_ket is not None:
            self.ket = np.asarray(magic_ket, dtype=complex).reshape(2**self.k)
        elif magic_density is None:
            rho = np.zeros((2**self.k, 2**self.k), dtype=complex)
            rho[0, 0] = 1.0
            self.rho = rho
        else:
            self.rho = np.asarray(magic_density, dtype=complex).reshape(
                2**self.k, 2**self.k
            )

    @classmethod
    def with_product_inputs(
        cls, n: int, inputs: dict[int, np.ndarray], pure: bool = False
    ) -> "HybridState":
        """Magic qubits given as single-qubit kets or 2x2 densities."""
        qubits = tuple(sorted(inputs))
        if pure:
            ket = np.array([1.0 + 0j])
            for q in qubits:
                v = np.asarray(inputs[q], dtype=complex)
                if v.ndim != 1:
                    raise ValueError("pure mode needs ket inputs")
                ket = np.kron(v, ket)
            return cls(n, qubits, magic_ket=ket)
        rho = np.array([[1.0 + 0j]])
        for q in qubits:
            v = np.asarray(inputs[q], dtype=complex)
            factor = np.outer(v, v.conj()) if v.ndim == 1 else v
            rho = np.kron(factor, rho)
        return cls(n, qubits, rho)

    def copy(self) -> "HybridState":
        new = HybridState.__new__(HybridState)
        new.n, new.magic_qubits, new.k = self.n, self.magic_qubits, self.k
        new.stab_mask = self.stab_mask
        new.zrows = list(self.zrows)
        new.xrows = list(self.xrows)
        new.rho = None if self.rho is None else self.rho.copy()
        new.ket = None if self.ket is None else self.ket.copy()
        return new

    @property
    def magic_density(self) -> DensityMatrix:
        if self.ket is not None:
            return DensityMatrix(self.k, np.outer(self.ket, self.ket.conj()))
        return DensityMatrix(self.k, self.rho)

    def _magic_expectation(self, sigma: PauliOperator) -> float:
        if self.ket is not None:
            from .dense import apply_pauli_to_vector

            return float(np.real(np.vdot(self.ket, apply_pauli_to_vector(self.ket, sigma))))
        return pauli_expectation_density(self.rho, sigma)

    def _magic_project(self, sigma: PauliOperator, sign: int, b: int) -> float:
        if self.ket is not None:
            from .dense import apply_pauli_to_vector

            coef = sign * (1 if b == 0 else -1)
            new = 0.5 * (self.ket + coef * apply_pauli_to_vector(self.ket, sigma))
            prob = float(np.linalg.norm(new) ** 2)
            if prob < 1e-12:
                raise TraceCollapseError(f"branch probability {prob}")
            self.ket = new / np.sqrt(prob)
            return prob
        self.rho, prob = project_density(self.rho, sigma, sign, b)
        return prob

    # -- frame updates -------------------------------------------------------

    def apply_gate(self, g: Gate):
        """F <- gF: pull-backs gain g^dag ... g on the inside."""
        ginv = g.inverse()
        n = self.n
        newz, newx = {}, {}
        for q in g.qubits:
            for rows, store, letter in ((self.zrows, newz, "Z"), (self.xrows, newx, "X")):
                local = conjugate_pauli_by_gate(ginv, PauliOperator.single(n, q, letter))
                store[q] = self._image_of(local)
        for q in g.qubits:
            self.zrows[q] = newz[q]
            self.xrows[q] = newx[q]

    def apply_circuit(self, circ: Circuit):
        for g in circ:
            self.apply_gate(g)

    def apply_pauli(self, p: PauliOperator):
        """F <- pF: flips row signs by the commutation pattern."""
        rem = p.x
        while rem:
            q = (rem & -rem).bit_length() - 1
            self.zrows[q] = self.zrows[q].negated()
            rem &= rem - 1
        rem = p.z
        while rem:
            q = (rem & -rem).bit_length() - 1
            self.xrows[q] = self.xrows[q].negated()
            rem &= rem - 1

    def _image_of(self, p: PauliOperator) -> PauliOperator:
        """F^dag p F from the stored generator rows."""
        out = PauliOperator(self.n, 0, 0, p.phase + (p.x & p.z).bit_count())
        rem = p.x
        while rem:
            q = (rem & -rem).bit_length() - 1
            out = pauli_mul(out, self.xrows[q])
            rem &= rem - 1
        rem = p.z
        while rem:
            q = (rem & -rem).bit_length() - 1
            out = pauli_mul(out, self.zrows[q])
            rem &= rem - 1
        return out

    def _magic_part(self, p: PauliOperator) -> PauliOperator:
        mx = mz = 0
        for i, q in enumerate(self.magic_qubits):
            mx |= ((p.x >> q) & 1) << i
            mz |= ((p.z >> q) & 1) << i
        return PauliOperator(self.k, mx, mz, 0)

    # -- measurement ---------------------------------------------------------

    def measure_z(self, qubit: int, rng=None, force: int | None = None):
        """Measure Z on ``qubit``; returns (outcome bit, branch probability)."""
        a = self.zrows[qubit]
        mixing = a.x & self.stab_mask
        if mixing:
            prob = 0.5
            b = force if force is not None else int(rng.random() < 0.5)
            j = (mixing & -mixing).bit_length() - 1
            self._absorb_random_measurement(a, j, b)
            return b, prob
        if not a.is_hermitian:
            raise AssertionError("non-Hermitian pull-back row")
        sigma = self._magic_part(a)
        sign = a.sign
        if sigma.x == 0 and sigma.z == 0:
            b = 0 if sign == 1 else 1
            if force is not None and force != b:
                return force, 0.0
            return b, 1.0
        exp = self._magic_expectation(sigma)
        p0 = 0.5 * (1 + sign * exp)
        if force is not None:
            b = force
        else:
            b = int(rng.random() >= p0)
        prob = p0 if b == 0 else 1 - p0
        if prob < 1e-12:
            raise TraceCollapseError(f"branch probability {prob}")
        self._magic_project(sigma, sign, b)
        return b, prob

    def _absorb_random_measurement(self, a: PauliOperator, j: int, b: int):
        # F <- F.W with W = ((-1)^b A + Z_j)/sqrt(2); conjugate all rows by W.
        asig = a if b == 0 else a.negated()
        bz = PauliOperator.single(self.n, j, "Z")
        for rows in (self.zrows, self.xrows):
            for q in range(self.n):
                row = rows[q]
                com_a = row.commutes_with(a)
                com_b = ((row.x >> j) & 1) == 0
                if com_a and com_b:
                    continue
                if not com_a and not com_b:
                    rows[q] = row.negated()
                    continue
                new = pauli_mul(pauli_mul(row, asig), bz)
                rows[q] = new if com_a else new.negated()

    # -- read-only queries ----------------------------------------------------

    def expectation(self, p: PauliOperator) -> float:
        """Tr[P . state] for a Hermitian Pauli on the full register."""
        img = self._image_of(p)
        if img.x & self.stab_mask:
            return 0.0
        if not img.is_hermitian:
            raise AssertionError("non-Hermitian expectation")
        sigma = self._magic_part(img)
        return img.sign * self._magic_expectation(sigma)

    def outcome_distribution(self, qubits=None) -> dict[int, float]:
        """Exact joint Z-measurement distribution (exponential in len(qubits))."""
        qubits = list(range(self.n)) if qubits is None else list(qubits)
        out: dict[int, float] = {}

        def recurse(state, idx, bits, weight):
            if weight < 1e-14:
                return
            if idx == len(qubits):
                out[bits] = out.get(bits, 0.0) + weight
                return
            for b in (0, 1):
                sub = state.copy()
                try:
                    _, prob = sub.measure_z(qubits[idx], force=b)
                except TraceCollapseError:
                    continue
                if prob > 0.0:
                    recurse(sub, idx + 1, bits | (b << idx), weight * prob)

        recurse(self, 0, 0, 1.0)
        return out
