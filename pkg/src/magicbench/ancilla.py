"""Constructive ancilla elimination for Clifford-plus-measurement circuits.

An (n+m)-qubit Clifford followed by computational measurement, with the last
m qubits prepared in |0>, is reduced to an n-qubit Clifford plus classical
post-processing with an identical outcome distribution.  One ancilla is
eliminated at a time.

For a single ancilla: pull back the measured operators g_i = U^dag Z_i U and
row-reduce the generating set (tracking the induced affine transform of the
outcome bits over GF(2)) until at most two generators touch the ancilla.
If the isolated ancilla action is a Z, the ancilla outcome bit is
deterministic; if it is X or Y, the bit is a fresh fair coin
(<0|X|0> = <0|Y|0> = 0).  The system parts of the remaining generators define
the reduced Clifford V via symplectic completion.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .paulis import PauliOperator, pauli_mul
from .tableau import CliffordTableau, complete_tableau


def _invert_bit_matrix(rows: list[int], width: int) -> list[int]:
    """Invert a GF(2) matrix given as row bitmasks."""
    aug = [(rows[i], 1 << i) for i in range(width)]
    for col in range(width):
        piv = next(i for i in range(col, width) if (aug[i][0] >> col) & 1)
        aug[col], aug[piv] = aug[piv], aug[col]
        pa, pb = aug[col]
        for i in range(width):
            if i != col and (aug[i][0] >> col) & 1:
                aug[i] = (aug[i][0] ^ pa, aug[i][1] ^ pb)
    return [b for _, b in aug]


@dataclass
class EliminationStage:
    """One ancilla removed: affine bijection w = A x + c over GF(2)^(n+1).

    Coordinate i of w is the bit attached to pull-back generator i; the
    ``retained`` coordinates are read from the reduced circuit's outcome and
    the ``pivot`` coordinate is filled in (constant for the deterministic
    case, a fair coin otherwise).  x is recovered through A^-1.
    """

    n_out: int
    rows: list[int]
    consts: int
    retained: list[int]
    pivot: int
    mode: str  # 'deterministic' or 'random'
    insert_value: int = 0
    _inv_rows: list[int] = field(default=None, repr=False)

    def __post_init__(self):
        if self._inv_rows is None:
            self._inv_rows = _invert_bit_matrix(self.rows, self.n_out)

    def _solve(self, w: int) -> int:
        t = w ^ self.consts
        x = 0
        for i, row in enumerate(self._inv_rows):
            if (row & t).bit_count() & 1:
                x |= 1 << i
        return x

    def apply(self, y: int, rng=None) -> int:
        """Map a reduced outcome (n_out-1 bits) to a full outcome (n_out bits)."""
        w = 0
        for out_pos, coord in enumerate(self.retained):
            if (y >> out_pos) & 1:
                w |= 1 << coord
        bit = self.insert_value if self.mode == "deterministic" else int(rng.random() < 0.5)
        w |= bit << self.pivot
        return self._solve(w)

    def push_distribution(self, dist: dict[int, float]) -> dict[int, float]:
        """Exact image distribution (used by the brute-force checks)."""
        out: dict[int, float] = {}
        for y, p in dist.items():
            if self.mode == "deterministic":
                branches = [(self.insert_value, p)]
            else:
                branches = [(0, p / 2), (1, p / 2)]
            for bit, q in branches:
                w = 0
                for out_pos, coord in enumerate(self.retained):
                    if (y >> out_pos) & 1:
                        w |= 1 << coord
                w |= bit << self.pivot
                x = self._solve(w)
                out[x] = out.get(x, 0.0) + q
        return out


@dataclass
class PostProcess:
    """Composed post-processing of an m-fold ancilla elimination."""

    n: int
    m: int
    stages: list[EliminationStage]  # stages[0] removed the outermost ancilla

    @property
    def mode(self) -> str:
        if all(s.mode == "deterministic" for s in self.stages):
            return "deterministic-case1"
        return "randomized-case2/3/4"

    @property
    def random_bit_positions(self) -> list[int]:
        return [s.pivot for s in self.stages if s.mode == "random"]

    def apply(self, y: int, rng=None) -> int:
        for stage in reversed(self.stages):
            y = stage.apply(y, rng)
        return y

    def push_distribution(self, dist: dict[int, float]) -> dict[int, float]:
        for stage in reversed(self.stages):
            dist = stage.push_distribution(dist)
        return dist

    def to_jsonable(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "mode": self.mode,
            "stages": [
                {
                    "n_out": s.n_out,
                    "rows": [f"{r:0{s.n_out}b}" for r in s.rows],
                    "consts": f"{s.consts:0{s.n_out}b}",
                    "retained": s.retained,
                    "pivot": s.pivot,
                    "mode": s.mode,
                    "insert_value": s.insert_value,
                }
                for s in self.stages
            ],
        }


_ANCILLA_LETTERS = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}


class _Gen:
    """Pull-back generator with its affine outcome-bit expression."""

    __slots__ = ("h", "row", "const")

    def __init__(self, h, row, const=0):
        self.h, self.row, self.const = h, row, const

    def mul(self, other: "_Gen"):
        self.h = pauli_mul(self.h, other.h)
        self.row ^= other.row
        self.const ^= other.const

    def ancilla_letter(self, anc: int) -> str:
        return _ANCILLA_LETTERS[((self.h.x >> anc) & 1, (self.h.z >> anc) & 1)]


def eliminate_one_ancilla(u: CliffordTableau):
    """Reduce one trailing |0> ancilla; returns (V over n, EliminationStage)."""
    n1 = u.n
    n = n1 - 1
    anc = n
    uinv = u.inverse()
    gens = [
        _Gen(uinv.conjugate(PauliOperator.single(n1, i, "Z")), 1 << i) for i in range(n1)
    ]
    letters = {i: g.ancilla_letter(anc) for i, g in enumerate(gens)}
    touching = [i for i, l in letters.items() if l != "I"]
    if not touching:
        raise AssertionError("no generator touches the ancilla; not symplectic")
    distinct = {letters[i] for i in touching}

    if len(distinct) == 1:
        t = distinct.pop()
        pivot = touching[0]
        for i in touching[1:]:
            gens[i].mul(gens[pivot])
        if t == "Z":
            _reduce_pivot_system_part(gens, pivot, n, anc)
            # valid branch: (-1)^(w_pivot) * sign(h) = +1
            mode, insert = "deterministic", gens[pivot].h.phase // 2
            retained = [i for i in range(n1) if i != pivot]
        else:
            mode, insert = "random", 0
            retained = [i for i in range(n1) if i != pivot]
    else:
        if "Z" not in distinct:
            # multiply an X-acting into a Y-acting (or vice versa) to make a Z
            i_first = touching[0]
            i_other = next(i for i in touching if letters[i] != letters[i_first])
            gens[i_other].mul(gens[i_first])
        letters = {i: g.ancilla_letter(anc) for i, g in enumerate(gens)}
        pa = next(i for i in range(n1) if letters[i] == "Z")
        pb = next(i for i in range(n1) if letters[i] in ("X", "Y"))
        zb_b = (gens[pb].h.z >> anc) & 1
        for i in range(n1):
            if i in (pa, pb) or letters[i] == "I":
                continue
            xb = (gens[i].h.x >> anc) & 1
            zb = (gens[i].h.z >> anc) & 1
            beta = xb
            alpha = zb ^ (xb & zb_b)
            if beta:
                gens[i].mul(gens[pb])
            if alpha:
                gens[i].mul(gens[pa])
            assert gens[i].ancilla_letter(anc) == "I"
        mode, insert = "random", 0
        pivot = pb
        retained = [i for i in range(n1) if i != pb]

    mask = (1 << n) - 1
    targets = []
    for i in retained:
        h = gens[i].h
        if i != pivot and _ANCILLA_LETTERS[((h.x >> anc) & 1, (h.z >> anc) & 1)] not in ("I", "Z"):
            raise AssertionError("retained generator still mixes the ancilla")
        targets.append(PauliOperator(n, h.x & mask, h.z & mask, h.phase))
    # complete_tableau prescribes W Z_i W^dag; the reduced circuit needs
    # V^dag Z_i V = h_i, so V is the inverse of the completed tableau
    v = complete_tableau(targets).inverse()
    stage = EliminationStage(
        n_out=n1,
        rows=[gens[i].row for i in range(n1)],
        consts=sum((gens[i].const & 1) << i for i in range(n1)),
        retained=retained,
        pivot=pivot,
        mode=mode,
        insert_value=insert,
    )
    return v, stage


def _reduce_pivot_system_part(gens, pivot, n, anc):
    """Multiply trivial-ancilla generators into the pivot until it is +-Z_anc."""
    mask = (1 << n) - 1
    others = [i for i in range(n + 1) if i != pivot]
    # GF(2) solve: which subset of the others' system parts multiplies to the
    # pivot's system part (it is always dependent: n+1 commuting on n qubits).
    cols = [(gens[i].h.x & mask) | ((gens[i].h.z & mask) << n) for i in others]
    target = (gens[pivot].h.x & mask) | ((gens[pivot].h.z & mask) << n)
    rows = list(cols)
    # gaussian elimination on the transposed system
    chosen = _solve_subset(rows, target, 2 * n)
    if chosen is None:
        raise AssertionError("pivot system part not in the span; case-1 logic broken")
    for idx in chosen:
        gens[pivot].mul(gens[others[idx]])
    h = gens[pivot].h
    assert h.x & mask == 0 and h.z & mask == 0 and (h.z >> anc) & 1 and not (h.x >> anc) & 1


def _solve_subset(vecs: list[int], target: int, width: int):
    """Subset of ``vecs`` XOR-summing to ``target``; None if infeasible."""
    basis: list[tuple[int, int]] = []  # (vector, subset mask)
    for i, v in enumerate(vecs):
        cur, curm = v, 1 << i
        for bv, bm in basis:
            low = bv & -bv
            if cur & low:
                cur ^= bv
                curm ^= bm
        if cur:
            basis.append((cur, curm))
            basis.sort(key=lambda t: t[0] & -t[0])
    cur, curm = target, 0
    for bv, bm in basis:
        low = bv & -bv
        if cur & low:
            cur ^= bv
            curm ^= bm
    if cur:
        return None
    return [i for i in range(len(vecs)) if (curm >> i) & 1]


def eliminate_ancillas(u: CliffordTableau, m: int):
    """Remove the last m |0> ancillas; returns (V over n, PostProcess)."""
    if m < 0 or m > u.n:
        raise ValueError("invalid ancilla count")
    n = u.n - m
    stages = []
    cur = u
    for _ in range(m):
        cur, stage = eliminate_one_ancilla(cur)
        stages.append(stage)
    return cur, PostProcess(n=n, m=m, stages=stages)
