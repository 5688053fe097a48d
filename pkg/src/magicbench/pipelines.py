"""Experiment pipelines.

Steane side: the full distillation experiment is a Clifford schedule (encode
five physical magic inputs, run the 5-to-1 distillation transversally at the
logical level, twirl, optionally Bell-couple two distilled copies, measure
everything) executed by the compiled Monte Carlo engine.

[[8,3,2]] side: the transversal-CCZ circuits are non-Clifford, so the
pipeline runs on a vectorized dense backend: a (batch, 256/1024) amplitude
array with per-row sampled Pauli faults.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codes import (
    C832_CNOT_RELABEL,
    STEANE_Z_SUPPORTS,
    c832_ccz_circuit,
    c832_detection_circuit,
    c832_logical_state,
    c832_ccz_logical_state,
    c832_plus_encoder,
    load_code,
    msd_logical_gates,
    msd_pattern_flip_mask,
    steane_encoder,
    steane_transversal_word,
)
from .compiled import CompiledPlan, compile_schedule, evaluate_observable, run_compiled, _distinct_rows
from .noise import NoiseModel
from .paulis import PauliOperator, pauli_mul
from .trajectory import Schedule
from .twirl import t_state, ccz_state

TWIRL_SET = ("I", "U0", "U0DG")


# ---------------------------------------------------------------------------
# Steane pipeline
# ---------------------------------------------------------------------------


def _append_logical_1q(s: Schedule, gate_name: str, block: int):
    if gate_name == "I":
        return
    for nm in steane_transversal_word(gate_name):
        for w in range(7):
            s.gate(nm, 7 * block + w)


def _append_msd(s: Schedule, base_block: int):
    for g in msd_logical_gates():
        if len(g.qubits) == 1:
            _append_logical_1q(s, g.name, base_block + g.qubits[0])
        else:
            a, b = (base_block + q for q in g.qubits)
            for w in range(7):
                s.gate(g.name, 7 * a + w, 7 * b + w)


def build_steane_schedule(kind: str, twirls: tuple[str, ...] = ()) -> Schedule:
    """kind: 'tomography' (35 qubits), 'bell' (70), 'fidelity' (35, no bench)."""
    copies = 2 if kind == "bell" else 1
    blocks = 5 * copies
    n = 7 * blocks
    tket = t_state().amplitudes
    s = Schedule(n, magic_inputs={7 * b: tket for b in range(blocks)})
    s.prep_all()
    enc = steane_encoder()
    for b in range(blocks):
        for g in enc:
            s.gate(g.name, *(q + 7 * b for q in g.qubits))
    for copy in range(copies):
        _append_msd(s, 5 * copy)
    if kind == "fidelity":
        s.measure(*range(7, 35))
        return s
    for copy in range(copies):
        _append_logical_1q(s, twirls[copy], 5 * copy)
    if kind == "bell":
        for w in range(7):
            s.gate("CNOT", w, 35 + w)
        _append_logical_1q(s, "H", 0)
    s.measure(*range(n))
    return s


def steane_fidelity_observables() -> tuple[list[PauliOperator], np.ndarray, int]:
    """Pauli expansion of |T_L><T_L| on block 0 of a 35-qubit register.

    Returns (paulis, coefficients, n_projector_terms); the first
    n_projector_terms entries expand the bare code projector (denominator).
    """
    code = load_code("steane")
    n = 35
    stab_elems = [PauliOperator(n, g.x, g.z, g.phase) for g in code.stabilizers.elements()]
    xl = PauliOperator(n, code.logical_x[0].x, 0, 0)
    zl = PauliOperator(n, 0, code.logical_z[0].z, 0)
    yl = pauli_mul(xl, zl)
    yl = PauliOperator(n, yl.x, yl.z, yl.phase + 1)
    terms = list(stab_elems)
    coeffs = [1 / 128.0] * len(stab_elems)
    for L in (xl, yl, zl):
        for sgen in stab_elems:
            terms.append(pauli_mul(sgen, L))
            coeffs.append(1 / (128.0 * np.sqrt(3)))
    for t in terms:
        if not t.is_hermitian:
            raise AssertionError("non-Hermitian fidelity term")
    return terms, np.array(coeffs), len(stab_elems)


@dataclass
class SteanePlanSet:
    kind: str
    noise: NoiseModel
    plans: dict[tuple[str, ...], CompiledPlan]
    observables: tuple | None = None


def compile_steane(kind: str, noise: NoiseModel) -> SteanePlanSet:
    if kind == "fidelity":
        terms, coeffs, nden = steane_fidelity_observables()
        sched = build_steane_schedule("fidelity")
        plan = compile_schedule(sched, noise, observables=terms)
        return SteanePlanSet(kind, noise, {(): plan}, (terms, coeffs, nden))
    variants = {}
    twirl_choices = (
        [(g,) for g in TWIRL_SET]
        if kind == "tomography"
        else [(g1, g2) for g1 in TWIRL_SET for g2 in TWIRL_SET]
    )
    for tw in twirl_choices:
        variants[tw] = compile_schedule(build_steane_schedule(kind, tw), noise)
    return SteanePlanSet(kind, noise, variants)


def _block_masks(blocks: int):
    det = []
    logical = []
    for b in range(blocks):
        base = 7 * b
        det.append([sum(1 << (base + q) for q in supp) for supp in STEANE_Z_SUPPORTS])
        logical.append(0x7F << base)
    return det, logical


@dataclass
class SteaneRound:
    """Vectorized per-round results of a Steane benchmark batch."""

    accept_msd: np.ndarray
    accept_detect: np.ndarray
    accept: np.ndarray
    samples: np.ndarray  # tomography bit or Bell parity, on accepted rounds


def analyze_steane_batch(kind: str, batch) -> SteaneRound:
    copies = 2 if kind == "bell" else 1
    blocks = 5 * copies
    det_masks, log_masks = _block_masks(blocks)
    size = batch.size
    detect_ok = np.ones(size, dtype=bool)
    for b in range(blocks):
        for mask in det_masks[b]:
            detect_ok &= batch.parity(mask) == 0
    msd_ok = np.ones(size, dtype=bool)
    for copy in range(copies):
        for m in range(1, 5):
            # raw zero syndrome reads as the accept pattern after relabeling
            msd_ok &= batch.parity(log_masks[5 * copy + m]) == 0
    accept = detect_ok & msd_ok
    if kind == "tomography":
        samples = batch.parity(log_masks[0])[accept]
    else:
        samples = (batch.parity(log_masks[0]) & batch.parity(log_masks[5]))[accept]
    return SteaneRound(msd_ok, detect_ok, accept, samples.astype(np.uint8))


def run_steane_benchmark(planset: SteanePlanSet, n_rounds: int, rng):
    """Sample rounds across twirl variants; returns pooled SteaneRound."""
    variants = list(planset.plans)
    sel = rng.integers(len(variants), size=n_rounds)
    parts = []
    for i, tw in enumerate(variants):
        cnt = int(np.sum(sel == i))
        if cnt == 0:
            continue
        batch = run_compiled(planset.plans[tw], planset.noise, cnt, rng)
        parts.append(analyze_steane_batch(planset.kind, batch))
    accept_msd = np.concatenate([p.accept_msd for p in parts])
    accept_detect = np.concatenate([p.accept_detect for p in parts])
    accept = np.concatenate([p.accept for p in parts])
    samples = np.concatenate([p.samples for p in parts])
    return SteaneRound(accept_msd, accept_detect, accept, samples)


def run_steane_fidelity(planset: SteanePlanSet, n_rounds: int, rng):
    """True infidelity of the distilled block: ratio-of-means of the
    |T_L><T_L| and code-projector expectations over accepted trajectories."""
    terms, coeffs, nden = planset.observables
    plan = planset.plans[()]
    batch = run_compiled(plan, planset.noise, n_rounds, rng)
    det_masks, log_masks = _block_masks(5)
    accept = np.ones(batch.size, dtype=bool)
    for b in range(1, 5):
        for mask in det_masks[b]:
            accept &= batch.parity(mask) == 0
        accept &= batch.parity(log_masks[b]) == 0
    idx = np.flatnonzero(accept)
    if idx.size == 0:
        return dict(accept_rate=0.0, epsilon_true=np.nan, n_accepted=0)
    num = np.zeros(idx.size)
    den = np.zeros(idx.size)
    sub = _subset_batch(batch, idx)
    for t in range(len(terms)):
        vals = evaluate_observable(plan, sub, t)
        num += coeffs[t] * vals
        if t < nden:
            den += vals / nden
    eps = 1.0 - float(np.sum(num) / np.sum(den))
    return dict(
        accept_rate=idx.size / batch.size,
        epsilon_true=eps,
        n_accepted=int(idx.size),
        num_mean=float(np.mean(num)),
        den_mean=float(np.mean(den)),
    )


def _subset_batch(batch, idx):
    from .compiled import TrajectoryBatch

    return TrajectoryBatch(
        idx.size,
        batch.x_lo[idx],
        batch.x_hi[idx],
        batch.leaf[idx],
        batch.b_lo[idx],
        batch.b_hi[idx],
        batch.fx_lo[idx],
        batch.fx_hi[idx],
        batch.fz_lo[idx],
        batch.fz_hi[idx],
    )


# ---------------------------------------------------------------------------
# [[8,3,2]] pipeline (vectorized dense)
# ---------------------------------------------------------------------------


def _monomial(p: PauliOperator, nq: int):
    """(perm, phase) column action of a Pauli on length-2^nq amplitude rows."""
    d = 1 << nq
    idx = np.arange(d)
    perm = idx ^ p.x
    signs = 1 - 2 * ((_popcount(perm & p.z)) & 1)
    kappa = 1j ** ((p.phase + (p.x & p.z).bit_count()) % 4)
    return perm, kappa * signs


def _popcount(arr):
    arr = arr.astype(np.int64).copy()
    out = np.zeros_like(arr)
    while arr.any():
        out += arr & 1
        arr >>= 1
    return out


class _DenseBatch:
    """Amplitude rows (B, 2^nq) with per-row sampled Pauli noise."""

    def __init__(self, size, nq, rng, noise):
        self.nq = nq
        self.d = 1 << nq
        self.amps = np.zeros((size, self.d), dtype=complex)
        self.amps[:, 0] = 1.0
        self.rng = rng
        self.noise = noise
        self._mono_cache = {}

    @property
    def size(self):
        return self.amps.shape[0]

    def _mono(self, key, p):
        if key not in self._mono_cache:
            self._mono_cache[key] = _monomial(p, self.nq)
        return self._mono_cache[key]

    def apply_gate(self, name, qubits):
        from .dense import GATE_MATRICES

        if name == "H":
            (q,) = qubits
            b = self.amps.reshape(self.size, 1 << (self.nq - 1 - q), 2, 1 << q)
            hi = (b[:, :, 0, :] + b[:, :, 1, :]) / np.sqrt(2)
            lo = (b[:, :, 0, :] - b[:, :, 1, :]) / np.sqrt(2)
            b[:, :, 0, :] = hi
            b[:, :, 1, :] = lo
            return
        idx = np.arange(self.d)
        if name == "CNOT":
            c, t = qubits
            perm = np.where((idx >> c) & 1 == 1, idx ^ (1 << t), idx)
            self.amps = self.amps[:, perm]
        elif name == "SWAP":
            a, bq = qubits
            ba, bb = (idx >> a) & 1, (idx >> bq) & 1
            perm = (idx & ~((1 << a) | (1 << bq))) | (bb << a) | (ba << bq)
            self.amps = self.amps[:, perm]
        elif name in ("T", "TDG", "S", "SDG", "Z"):
            (q,) = qubits
            phase = {
                "T": np.exp(1j * np.pi / 4),
                "TDG": np.exp(-1j * np.pi / 4),
                "S": 1j,
                "SDG": -1j,
                "Z": -1.0,
            }[name]
            col = np.where((idx >> q) & 1 == 1, phase, 1.0)
            self.amps *= col
        elif name == "CZ":
            a, bq = qubits
            col = np.where(((idx >> a) & (idx >> bq)) & 1 == 1, -1.0, 1.0)
            self.amps *= col
        elif name in ("X", "Y"):
            (q,) = qubits
            perm, phase = self._mono(("P", name, q), PauliOperator.single(self.nq, q, name))
            self.amps = self.amps[:, perm] * phase
        elif name == "I":
            pass
        else:
            raise ValueError(f"unsupported batched gate {name}")

    def scatter_pauli(self, rows, p: PauliOperator):
        if rows.size == 0:
            return
        perm, phase = self._mono((p.x, p.z, p.phase), p)
        self.amps[rows] = self.amps[rows][:, perm] * phase

    def noise_1q(self, q):
        p_any = 1.5 * self.noise.q1
        self._scatter_noise(p_any, [PauliOperator.single(self.nq, q, L) for L in "XYZ"])

    def noise_prep(self, q):
        p_any = 1.5 * self.noise.q_prep
        self._scatter_noise(p_any, [PauliOperator.single(self.nq, q, L) for L in "XYZ"])

    def noise_2q(self, a, b):
        p_any = 1.25 * self.noise.q2
        paulis = []
        for xa in range(2):
            for za in range(2):
                for xb in range(2):
                    for zb in range(2):
                        if not (xa | za | xb | zb):
                            continue
                        paulis.append(
                            PauliOperator(
                                self.nq, (xa << a) | (xb << b), (za << a) | (zb << b), 0
                            )
                        )
        self._scatter_noise(p_any, paulis)

    def _scatter_noise(self, p_any, paulis):
        if p_any <= 0:
            return
        count = self.rng.binomial(self.size, p_any)
        if count == 0:
            return
        rows = _distinct_rows(self.rng, self.size, count)
        kinds = self.rng.integers(len(paulis), size=count)
        for i, p in enumerate(paulis):
            self.scatter_pauli(rows[kinds == i], p)


def _gl3_elements():
    mats = []
    for bits in range(512):
        m = [(bits >> (3 * r)) & 7 for r in range(3)]
        # invertible over GF(2) iff every nonempty row combination is nonzero
        combos = [
            m[0], m[1], m[2], m[0] ^ m[1], m[0] ^ m[2], m[1] ^ m[2], m[0] ^ m[1] ^ m[2]
        ]
        if all(combos):
            mats.append(tuple(m))
    assert len(mats) == 168
    return mats


def _perm_for_gl(m_rows) -> np.ndarray:
    """Physical-qubit permutation realizing the logical CNOT word for M.

    M is decomposed into elementary row operations x_t ^= x_c, each of which
    is the noiseless two-SWAP relabeling from the code's table.
    """
    # decompose M = product of E_{c,t} acting on column vectors x -> Mx
    m = [list((row >> c) & 1 for c in range(3)) for row in m_rows]
    mat = np.array(m, dtype=np.uint8)
    ops = []  # elementary (c, t): row_t ^= row_c  (i.e. CNOT control c target t)
    work = mat.copy()
    for col in range(3):
        piv = next(r for r in range(col, 3) if work[r, col])
        if piv != col:
            work[col], work[piv] = work[piv].copy(), work[col].copy()
            ops.append(("swap", col, piv))
        for r in range(3):
            if r != col and work[r, col]:
                work[r] ^= work[col]
                ops.append(("add", col, r))
    # ops reduce M to I: M = inverse of the op product; replay inverses reversed
    perm = np.arange(8, dtype=np.int64)

    def apply_physical_cnot(c, t, perm):
        pairs = C832_CNOT_RELABEL[(c, t)]
        for a, b in pairs:
            perm[[a, b]] = perm[[b, a]]
        return perm

    for kind, a, b in reversed(ops):
        if kind == "add":
            # inverse of row_b ^= row_a is itself
            perm = apply_physical_cnot(a, b, perm)
        else:
            # swap of logical qubits a,b = three CNOTs
            for c, t in ((a, b), (b, a), (a, b)):
                perm = apply_physical_cnot(c, t, perm)
    return perm


class C832Pipeline:
    """Vectorized [[8,3,2]] CCZ-state preparation, twirl and benchmarking."""

    def __init__(self, noise: NoiseModel):
        self.noise = noise
        self.code = load_code("c832")
        self.enc = c832_plus_encoder()
        self.det = c832_detection_circuit()
        self.ccz = c832_ccz_circuit()
        self.plus = c832_logical_state(None).amplitudes
        self.cczL = c832_ccz_logical_state().amplitudes
        self.stab_elems = self.code.stabilizers.elements()
        self.gl3 = _gl3_elements()
        self.gl3_perms = np.stack([_index_perm(_perm_for_gl(m)) for m in self.gl3])
        self.xmask_logical = [self.code.logical_x[i].x for i in range(3)]
        # ZZX witness measurement operators
        self.z1 = self.code.logical_z[0]
        self.z2 = self.code.logical_z[1]
        self.x3 = self.code.logical_x[2]
        # tomography: the 63 logical Pauli words and their |CCZ> coefficients
        self.tomo_paulis, self.tomo_coeffs = self._tomography_set()

    def _tomography_set(self):
        ccz3 = ccz_state().amplitudes
        paulis = []
        coeffs = []
        from .dense import pauli_matrix

        for x in range(8):
            for z in range(8):
                if x == 0 and z == 0:
                    continue
                p3 = PauliOperator(3, x, z, 0)
                c = float(np.real(ccz3.conj() @ pauli_matrix(p3) @ ccz3))
                full = PauliOperator.identity(8)
                for i in range(3):
                    if p3.letter(i) == "X":
                        full = pauli_mul(full, self.code.logical_x[i])
                    elif p3.letter(i) == "Z":
                        full = pauli_mul(full, self.code.logical_z[i])
                    elif p3.letter(i) == "Y":
                        full = pauli_mul(full, self.code.logical_y(i))
                paulis.append(full)
                coeffs.append(c)
        return paulis, np.array(coeffs)

    # -- stages ---------------------------------------------------------------

    def prepare(self, size, rng):
        """Noisy encode + flagged detection + CCZ + twirl + perfect projection.

        Returns a dict with the surviving normalized rows and bookkeeping.
        """
        noise = self.noise
        b = _DenseBatch(size, 10, rng, noise)
        for q in range(10):
            b.noise_prep(q)
        for g in list(self.enc) + list(self.det):
            b.apply_gate(g.name, g.qubits)
            if len(g.qubits) == 1:
                b.noise_1q(g.qubits[0])
            else:
                b.noise_2q(*g.qubits)
        # measure ancillas 8 and 9 with read-out flips; accept both zero
        amps = b.amps.reshape(size, 4, 256)
        probs = np.sum(np.abs(amps) ** 2, axis=2)
        u = rng.random(size)
        cum = np.cumsum(probs, axis=1)
        outcome = (u[:, None] * cum[:, -1][:, None] > cum).sum(axis=1)
        flips = (rng.random(size) < noise.p_meas).astype(np.int64) | (
            ((rng.random(size) < noise.p_meas).astype(np.int64)) << 1
        )
        reported = outcome ^ flips
        det_accept = reported == 0
        rows = np.flatnonzero(det_accept)
        data = amps[rows, outcome[rows], :]
        nrm = np.linalg.norm(data, axis=1, keepdims=True)
        data = data / nrm
        # continue on the 8 data qubits only
        db = _DenseBatch(rows.size, 8, rng, noise)
        db.amps = data
        # preparation's transversal CCZ, then the twirl element
        # CCZ . (X^v relabel_M) . CCZ; both sandwich layers are physical
        self._ccz_layer(db)
        self._ccz_layer(db)
        msel = rng.integers(168, size=rows.size)
        vsel = rng.integers(8, size=rows.size)
        for mi in range(168):
            grp = np.flatnonzero(msel == mi)
            if grp.size:
                db.amps[grp] = db.amps[grp][:, self.gl3_perms[mi]]
        for vi in range(8):
            grp = np.flatnonzero(vsel == vi)
            if grp.size == 0:
                continue
            mask = 0
            for i in range(3):
                if (vi >> i) & 1:
                    mask ^= self.xmask_logical[i]
            if mask:
                idx = np.arange(256)
                db.amps[grp] = db.amps[grp][:, idx ^ mask]
        # noise on the physical X gates of the translation layer
        for q in range(8):
            hit = np.flatnonzero((_xlayer_masks(self.xmask_logical, vsel) >> q) & 1)
            if hit.size == 0:
                continue
            p_any = 1.5 * noise.q1
            cnt = rng.binomial(hit.size, p_any)
            if cnt:
                sub = hit[_distinct_rows(rng, hit.size, cnt)]
                kinds = rng.integers(3, size=cnt)
                for i, L in enumerate("XYZ"):
                    db.scatter_pauli(sub[kinds == i], PauliOperator.single(8, q, L))
        self._ccz_layer(db)
        # perfect projection: exact post-selection weights
        proj = np.zeros_like(db.amps)
        for s in self.stab_elems:
            perm, phase = _monomial(s, 8)
            proj += db.amps[:, perm] * phase
        proj /= len(self.stab_elems)
        f_den = np.sum(np.abs(proj) ** 2, axis=1)
        f_num = np.abs(proj @ self.cczL.conj()) ** 2
        return dict(
            det_accept_rate=rows.size / size,
            rows=rows,
            projected=proj,
            f_den=f_den,
            f_num=f_num,
        )

    def _ccz_layer(self, db: _DenseBatch):
        for g in self.ccz:
            db.apply_gate(g.name, g.qubits)
            db.noise_1q(g.qubits[0])

    def finish_projection(self, prep, rng):
        """Bernoulli post-selection on the projection weight; normalized rows."""
        f_den = prep["f_den"]
        keep = rng.random(f_den.size) < f_den
        rows = np.flatnonzero(keep)
        amps = prep["projected"][rows] / np.sqrt(f_den[rows])[:, None]
        return rows, amps

    def true_epsilon(self, prep) -> float:
        tot_den = float(np.sum(prep["f_den"]))
        if tot_den <= 0:
            return float("nan")
        return 1.0 - float(np.sum(prep["f_num"])) / tot_den

    def sample_zzx(self, amps, rng):
        """Ideal logical Z1,Z2,X3 joint measurement; witness hit = (0,0,1)."""
        idx = np.arange(256)
        s1 = 1 - 2 * (_popcount(idx & self.z1.z) & 1)
        s2 = 1 - 2 * (_popcount(idx & self.z2.z) & 1)
        p = np.abs(amps) ** 2
        b1 = _sample_sign_bit(p, s1, rng)
        sel1 = (s1[None, :] == 1 - 2 * b1[:, None])
        p1 = np.where(sel1, p, 0.0)
        p1sum = p1.sum(axis=1, keepdims=True)
        b2 = _sample_sign_bit(p1 / p1sum, s2, rng)
        sel2 = sel1 & (s2[None, :] == 1 - 2 * b2[:, None])
        v = np.where(sel2, amps, 0.0)
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        xperm = idx ^ self.x3.x
        xv = v[:, xperm]
        exp_x = np.real(np.sum(v.conj() * xv, axis=1))
        p_plus = np.clip((1 + exp_x) / 2, 0.0, 1.0)
        b3 = (rng.random(len(amps)) >= p_plus).astype(np.uint8)
        return np.stack([b1, b2, b3], axis=1)

    def sample_tomography(self, amps, rng):
        """Each row measures its scheduled logical Pauli; returns (pauli_idx, pm1)."""
        size = amps.shape[0]
        sched = np.arange(size) % 63
        outcomes = np.zeros(size, dtype=np.int8)
        idx = np.arange(256)
        for pi in range(63):
            rows = np.flatnonzero(sched == pi)
            if rows.size == 0:
                continue
            p = self.tomo_paulis[pi]
            perm, phase = _monomial(p, 8)
            pv = amps[rows][:, perm] * phase
            exp = np.real(np.sum(amps[rows].conj() * pv, axis=1))
            pp = np.clip((1 + exp) / 2, 0.0, 1.0)
            outcomes[rows] = np.where(rng.random(rows.size) < pp, 1, -1)
        return sched, outcomes

    def tomography_estimate(self, sched, outcomes):
        """Linear-inversion fidelity: F = (1 + sum c_P <P>)/8."""
        total = 1.0
        for pi in range(63):
            rows = outcomes[sched == pi]
            if rows.size:
                total += self.tomo_coeffs[pi] * float(np.mean(rows))
        f = total / 8.0
        return 1.0 - f


def _index_perm(qubit_perm: np.ndarray) -> np.ndarray:
    """Index permutation on amplitudes: bit q of the source moves to qubit_perm[q]."""
    idx = np.arange(256)
    out = np.zeros_like(idx)
    for q in range(8):
        out |= ((idx >> q) & 1) << int(qubit_perm[q])
    return out


def _xlayer_masks(xmask_logical, vsel):
    masks = np.zeros(8, dtype=np.int64)
    for vi in range(8):
        m = 0
        for i in range(3):
            if (vi >> i) & 1:
                m ^= xmask_logical[i]
        masks[vi] = m
    return masks[vsel]


def _sample_sign_bit(p, signs, rng):
    p_plus = np.sum(np.where(signs[None, :] == 1, p, 0.0), axis=1)
    p_plus = np.clip(p_plus / np.sum(p, axis=1), 0.0, 1.0)
    return (rng.random(p.shape[0]) >= p_plus).astype(np.uint8)
