"""Clifford tableaus: symplectic Heisenberg images of X_j / Z_j with exact signs.

A tableau stores, for every generator X_j and Z_j, its conjugation image
U P U^dag as a signed Pauli.  Global phases of the underlying unitary are not
represented; every protocol-level quantity used downstream (conjugation,
twirling channels, measurement statistics) is insensitive to them.
"""

from __future__ import annotations

from dataclasses import dataclass

from .circuits import Circuit, Gate
from .paulis import DimensionMismatchError, PauliOperator, pauli_mul


def conjugate_pauli_by_gate(g: Gate, p: PauliOperator) -> PauliOperator:
    """g P g^dag for a named Clifford gate, via local bit rules."""
    x, z, ph = p.x, p.z, p.phase
    name = g.name
    if name == "I":
        return p
    if name in ("X", "Y", "Z", "H", "S", "SDG", "U0", "U0DG"):
        (q,) = g.qubits
        b = 1 << q
        xq, zq = (x >> q) & 1, (z >> q) & 1
        if name == "X":
            ph += 2 * zq
        elif name == "Z":
            ph += 2 * xq
        elif name == "Y":
            ph += 2 * (xq ^ zq)
        elif name == "H":
            ph += 2 * (xq & zq)
            x, z = (x & ~b) | (zq << q), (z & ~b) | (xq << q)
        elif name == "S":
            ph += 2 * (xq & zq)
            z ^= xq << q
        elif name == "SDG":
            ph += 2 * (xq & (1 ^ zq))
            z ^= xq << q
        elif name == "U0":
            x, z = (x & ~b) | ((xq ^ zq) << q), (z & ~b) | (xq << q)
        elif name == "U0DG":
            x, z = (x & ~b) | (zq << q), (z & ~b) | ((xq ^ zq) << q)
        return PauliOperator(p.n, x, z, ph)
    if name == "CNOT":
        c, t = g.qubits
        xc, zc = (x >> c) & 1, (z >> c) & 1
        xt, zt = (x >> t) & 1, (z >> t) & 1
        ph += 2 * (xc & zt & (xt ^ zc ^ 1))
        x ^= xc << t
        z ^= zt << c
        return PauliOperator(p.n, x, z, ph)
    if name == "CZ":
        a, b_ = g.qubits
        xa, za = (x >> a) & 1, (z >> a) & 1
        xb, zb = (x >> b_) & 1, (z >> b_) & 1
        ph += 2 * (xa & xb & (za ^ zb))
        z ^= (xa << b_) | (xb << a)
        return PauliOperator(p.n, x, z, ph)
    if name == "SWAP":
        a, b_ = g.qubits
        xa, za = (x >> a) & 1, (z >> a) & 1
        xb, zb = (x >> b_) & 1, (z >> b_) & 1
        x = x & ~((1 << a) | (1 << b_)) | (xb << a) | (xa << b_)
        z = z & ~((1 << a) | (1 << b_)) | (zb << a) | (za << b_)
        return PauliOperator(p.n, x, z, ph)
    raise DimensionMismatchError(f"gate {name} is not Clifford")


@dataclass(frozen=True)
class CliffordTableau:
    """Symplectic map: images of X_j and Z_j under conjugation."""

    n: int
    x_images: tuple[PauliOperator, ...]
    z_images: tuple[PauliOperator, ...]

    @classmethod
    def identity(cls, n: int) -> "CliffordTableau":
        xs = tuple(PauliOperator.single(n, q, "X") for q in range(n))
        zs = tuple(PauliOperator.single(n, q, "Z") for q in range(n))
        return cls(n, xs, zs)

    @classmethod
    def from_circuit(cls, circuit: Circuit) -> "CliffordTableau":
        if not circuit.is_clifford:
            raise ValueError("circuit contains non-Clifford gates")
        xs = [PauliOperator.single(circuit.n, q, "X") for q in range(circuit.n)]
        zs = [PauliOperator.single(circuit.n, q, "Z") for q in range(circuit.n)]
        for g in circuit:
            xs = [conjugate_pauli_by_gate(g, p) for p in xs]
            zs = [conjugate_pauli_by_gate(g, p) for p in zs]
        return cls(circuit.n, tuple(xs), tuple(zs))

    def conjugate(self, p: PauliOperator) -> PauliOperator:
        """U P U^dag with the sign tracked exactly."""
        if p.n != self.n:
            raise DimensionMismatchError(f"{p.n} vs {self.n} qubits")
        out = PauliOperator(self.n, 0, 0, p.phase + (p.x & p.z).bit_count())
        rem = p.x
        while rem:
            q = (rem & -rem).bit_length() - 1
            out = pauli_mul(out, self.x_images[q])
            rem &= rem - 1
        rem = p.z
        while rem:
            q = (rem & -rem).bit_length() - 1
            out = pauli_mul(out, self.z_images[q])
            rem &= rem - 1
        return out

    def compose(self, other: "CliffordTableau") -> "CliffordTableau":
        """Tableau of self . other (other acts first)."""
        if other.n != self.n:
            raise DimensionMismatchError(f"{other.n} vs {self.n} qubits")
        xs = tuple(self.conjugate(p) for p in other.x_images)
        zs = tuple(self.conjugate(p) for p in other.z_images)
        return CliffordTableau(self.n, xs, zs)

    def inverse(self) -> "CliffordTableau":
        n = self.n
        # Binary symplectic inverse: M^-1 = J M^T J with J = [[0,I],[I,0]].
        # Row i of M is (x|z) of the i-th image; transposing swaps the roles of
        # generators and images, J swaps x- and z-halves on both sides.
        rows = list(self.x_images) + list(self.z_images)
        inv_bits = []
        for i in range(2 * n):
            x = z = 0
            # target generator for column i: i<n -> X_i, else Z_{i-n}
            for j in range(2 * n):
                rj = rows[j]
                if i < n:
                    bit = (rj.z >> i) & 1
                else:
                    bit = (rj.x >> (i - n)) & 1
                if bit:
                    if j < n:
                        z |= 1 << j
                    else:
                        x |= 1 << (j - n)
            inv_bits.append((x, z))
        xs, zs = [], []
        for i in range(2 * n):
            x, z = inv_bits[i]
            cand = PauliOperator(n, x, z, 0)
            img = self.conjugate(cand)
            want = PauliOperator.single(n, i % n, "X" if i < n else "Z")
            if (img.x, img.z) != (want.x, want.z):
                raise ValueError("tableau is not symplectic; cannot invert")
            if img.phase == 2:
                cand = cand.negated()
            elif img.phase != 0:
                raise AssertionError("non-Hermitian image in inverse")
            (xs if i < n else zs).append(cand)
        return CliffordTableau(n, tuple(xs), tuple(zs))

    def is_valid(self) -> bool:
        """Symplectic check: images preserve all commutation relations."""
        n = self.n
        for p in (*self.x_images, *self.z_images):
            if not p.is_hermitian:
                return False
        for i in range(n):
            if self.x_images[i].commutes_with(self.z_images[i]):
                return False
            for j in range(i + 1, n):
                if not self.x_images[i].commutes_with(self.x_images[j]):
                    return False
                if not self.z_images[i].commutes_with(self.z_images[j]):
                    return False
            for j in range(n):
                if j != i and not self.x_images[i].commutes_with(self.z_images[j]):
                    return False
        return True

    def key(self) -> tuple:
        return tuple(p.key() for p in self.x_images + self.z_images)

    def __hash__(self) -> int:
        return hash(self.key())

    def __eq__(self, other) -> bool:
        return isinstance(other, CliffordTableau) and self.key() == other.key()


def gate_tableau(name: str, qubits: tuple[int, ...], n: int) -> CliffordTableau:
    circ = Circuit(n, [Gate(name, qubits)])
    return CliffordTableau.from_circuit(circ)


def tableau_to_circuit(tab: CliffordTableau) -> Circuit:
    """Synthesize a gate sequence whose tableau equals ``tab`` exactly.

    Sweeps the tableau to the identity with left-multiplied elementary gates,
    then emits the inverses in reverse order.  Gate count is O(n^2).
    """
    n = tab.n
    xs = list(tab.x_images)
    zs = list(tab.z_images)
    applied: list[Gate] = []

    def lmul(name, *qubits):
        g = Gate(name, qubits)
        applied.append(g)
        for i in range(n):
            xs[i] = conjugate_pauli_by_gate(g, xs[i])
            zs[i] = conjugate_pauli_by_gate(g, zs[i])

    def bits(mask, lo):
        q = lo
        mask >>= lo
        while mask:
            if mask & 1:
                yield q
            mask >>= 1
            q += 1

    def reduce_to_x(row_get, j, allow_pivot_hunt):
        # Bring row to +X_j using ops on qubits >= j.
        p = row_get()
        if allow_pivot_hunt:
            if not (p.x >> j):
                lmul("H", next(bits(p.z, j)))
                p = row_get()
            piv = next(bits(p.x, j))
            if piv != j:
                lmul("SWAP", j, piv)
                p = row_get()
        for l in list(bits(p.x, j + 1)):
            lmul("CNOT", j, l)
        p = row_get()
        for l in list(bits(p.z, j + 1)):
            lmul("CZ", j, l)
        p = row_get()
        if (p.z >> j) & 1:
            lmul("S", j)
            p = row_get()
        if p.phase == 2:
            lmul("Z", j)
        p = row_get()
        assert p == PauliOperator.single(n, j, "X"), f"reduction failed: {p}"

    for j in range(n):
        reduce_to_x(lambda: xs[j], j, allow_pivot_hunt=True)
        lmul("H", j)
        # z-row now anticommutes with Z_j, hence has an X at qubit j already;
        # the restricted op set below leaves the fixed Z_j row untouched.
        reduce_to_x(lambda: zs[j], j, allow_pivot_hunt=False)
        lmul("H", j)

    ident = CliffordTableau.identity(n)
    assert tuple(xs) == ident.x_images and tuple(zs) == ident.z_images
    return Circuit(n, [g.inverse() for g in reversed(applied)])


def complete_tableau(
    z_targets: list[PauliOperator],
    x_targets: dict[int, PauliOperator] | None = None,
) -> CliffordTableau:
    """Build a tableau with prescribed Z_j images (and optionally some X_j images).

    ``z_targets`` must be n independent, mutually commuting Hermitian Paulis;
    missing X partners are completed by solving the symplectic constraints
    over GF(2), lowest index first.
    """
    n = z_targets[0].n
    if len(z_targets) != n:
        raise ValueError("need exactly n Z-image targets")
    x_targets = dict(x_targets or {})
    partners: list[PauliOperator | None] = [x_targets.get(j) for j in range(n)]

    def sympl_bits(p):
        # functional v -> <v, p>: dot of (v.x|v.z) with (p.z|p.x)
        return (p.z, p.x)

    for j in range(n):
        if partners[j] is not None:
            continue
        # Solve <v, z_k> = delta_jk, <v, partner_k> = 0 for known partners.
        constraints = []
        rhs = []
        for k in range(n):
            constraints.append(sympl_bits(z_targets[k]))
            rhs.append(1 if k == j else 0)
        for k in range(n):
            if partners[k] is not None and k != j:
                constraints.append(sympl_bits(partners[k]))
                rhs.append(0)
        sol = _solve_gf2(constraints, rhs, 2 * n)
        if sol is None:
            raise ValueError("symplectic completion failed; targets dependent?")
        partners[j] = PauliOperator(n, sol & ((1 << n) - 1), sol >> n, 0)
    tab = CliffordTableau(n, tuple(partners), tuple(z_targets))
    if not tab.is_valid():
        raise ValueError("completed tableau is not symplectic")
    return tab


def _solve_gf2(constraints, rhs, width):
    """Solve A v = b over GF(2); rows given as (xcoef, zcoef) int pairs.

    The unknown v is packed as x-bits | z-bits (low half x).  Returns one
    solution as an int, or None.
    """
    half = width // 2
    rows = [(xc | (zc << half), b) for (xc, zc), b in zip(constraints, rhs)]
    pivots = []
    for col in range(width):
        piv = None
        for i, (a, b) in enumerate(rows):
            if i in (p[0] for p in pivots):
                continue
            if (a >> col) & 1:
                piv = i
                break
        if piv is None:
            continue
        pa, pb = rows[piv]
        for i, (a, b) in enumerate(rows):
            if i != piv and (a >> col) & 1:
                rows[i] = (a ^ pa, b ^ pb)
        pivots.append((piv, col))
    v = 0
    for i, (a, b) in enumerate(rows):
        if a == 0:
            if b:
                return None
            continue
    for piv, col in pivots:
        a, b = rows[piv]
        # value of v at col determined by b minus contributions of free vars (set 0)
        if b:
            v |= 1 << col
    # verify
    for (xc, zc), b in zip(constraints, rhs):
        a = xc | (zc << half)
        if (a & v).bit_count() % 2 != b:
            return None
    return v


def random_clifford_circuit(n, rng, depth=None) -> Circuit:
    """Random Clifford circuit; dense enough to scramble for tests."""
    depth = depth if depth is not None else 12 * n
    names1 = ["H", "S", "SDG", "X", "Y", "Z", "U0", "U0DG"]
    names2 = ["CNOT", "CZ", "SWAP"]
    circ = Circuit(n)
    for _ in range(depth):
        if n >= 2 and rng.random() < 0.5:
            a, b = rng.choice(n, size=2, replace=False)
            circ.append(str(rng.choice(names2)), int(a), int(b))
        else:
            circ.append(str(rng.choice(names1)), int(rng.integers(n)))
    return circ
