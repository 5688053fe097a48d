"""Bit-packed signed Pauli operators.

An n-qubit Pauli is stored as two integer bit masks plus a phase exponent:

    P = i**phase * sigma(x, z),   sigma(x, z) = i**|x & z| * X^x * Z^z

where bit j of ``x``/``z`` refers to qubit j.  With this convention
``sigma(x, z)`` is always Hermitian (the single-qubit letters are I, X, Z, Y
for (x, z) = 00, 10, 01, 11), so a Pauli is Hermitian exactly when
``phase`` is even.  Phases are tracked exactly through products and
conjugations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

_LETTER = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}
_BITS = {v: k for k, v in _LETTER.items()}
_PHASE_STR = {0: "+", 1: "+i", 2: "-", 3: "-i"}


class DimensionMismatchError(ValueError):
    """Raised when operands act on different qubit counts."""


@dataclass(frozen=True)
class PauliOperator:
    """Signed n-qubit Pauli word, bit-packed.

    ``phase`` is the exponent k in i**k, reduced mod 4.  Hermitian operators
    have k in {0, 2} (sign +1 / -1).
    """

    n: int
    x: int
    z: int
    phase: int = 0

    def __post_init__(self):
        mask = (1 << self.n) - 1
        if self.x & ~mask or self.z & ~mask:
            raise ValueError("mask exceeds qubit count")
        object.__setattr__(self, "phase", self.phase % 4)

    # -- constructors ------------------------------------------------------

    @classmethod
    def identity(cls, n: int) -> "PauliOperator":
        return cls(n, 0, 0, 0)

    @classmethod
    def single(cls, n: int, qubit: int, letter: str) -> "PauliOperator":
        """Single-qubit X, Y or Z (or I) embedded in n qubits."""
        xb, zb = _BITS[letter.upper()]
        return cls(n, xb << qubit, zb << qubit)

    @classmethod
    def from_string(cls, text: str) -> "PauliOperator":
        """Parse '+XIZ' / '-ZZ' / 'iXY' style strings; leftmost letter is qubit 0."""
        text = text.strip()
        phase = 0
        if text.startswith(("+", "-")):
            phase = 0 if text[0] == "+" else 2
            text = text[1:]
        if text.startswith(("i", "j")):
            phase += 1
            text = text[1:]
        x = z = 0
        for q, ch in enumerate(text):
            xb, zb = _BITS[ch.upper()]
            x |= xb << q
            z |= zb << q
        return cls(len(text), x, z, phase)

    # -- queries -----------------------------------------------------------

    @property
    def is_hermitian(self) -> bool:
        return self.phase % 2 == 0

    @property
    def sign(self) -> int:
        """+1 or -1; only meaningful for Hermitian operators."""
        if not self.is_hermitian:
            raise ValueError("sign of a non-Hermitian Pauli")
        return 1 if self.phase == 0 else -1

    @property
    def weight(self) -> int:
        return (self.x | self.z).bit_count()

    def letter(self, qubit: int) -> str:
        return _LETTER[((self.x >> qubit) & 1, (self.z >> qubit) & 1)]

    def commutes_with(self, other: "PauliOperator") -> bool:
        if self.n != other.n:
            raise DimensionMismatchError(f"{self.n} vs {other.n} qubits")
        return ((self.x & other.z).bit_count() + (self.z & other.x).bit_count()) % 2 == 0

    def unsigned(self) -> "PauliOperator":
        return PauliOperator(self.n, self.x, self.z, 0)

    def negated(self) -> "PauliOperator":
        return PauliOperator(self.n, self.x, self.z, self.phase + 2)

    def __str__(self) -> str:
        word = "".join(self.letter(q) for q in range(self.n))
        return _PHASE_STR[self.phase] + word

    def key(self) -> tuple:
        return (self.x, self.z, self.phase)


def pauli_mul(p: PauliOperator, q: PauliOperator) -> PauliOperator:
    """Exact product P*Q with phase in {1, i, -1, -i}."""
    if p.n != q.n:
        raise DimensionMismatchError(f"{p.n} vs {q.n} qubits")
    x = p.x ^ q.x
    z = p.z ^ q.z
    # phase of sigma(x1,z1)*sigma(x2,z2) relative to sigma(x1^x2, z1^z2)
    e = (
        (p.x & p.z).bit_count()
        + (q.x & q.z).bit_count()
        + 2 * (p.z & q.x).bit_count()
        - (x & z).bit_count()
    )
    return PauliOperator(p.n, x, z, p.phase + q.phase + e)


def pauli_product(factors: Iterable[PauliOperator], n: int) -> PauliOperator:
    out = PauliOperator.identity(n)
    for f in factors:
        out = pauli_mul(out, f)
    return out


def symplectic_product(p: PauliOperator, q: PauliOperator) -> int:
    """0 if P and Q commute, 1 if they anticommute."""
    return ((p.x & q.z).bit_count() + (p.z & q.x).bit_count()) % 2
