"""Compiled Monte Carlo engine for Clifford schedules with magic inputs.

A noisy trajectory of a fixed Clifford schedule factorizes exactly:

* the ideal run's measurement record is affine over GF(2) in a set of fair
  coins (frame-mixing measurements) plus the joint outcome of a commuting
  magic-register measurement sequence (a small categorical distribution);
* every sampled Pauli fault commutes to the end of the circuit, XOR-ing its
  propagated X-mask into the readout; read-out flips XOR on top.

Compilation runs the hybrid simulator n_uniform+1 times (signs are affine in
the coin bits, so a base run plus one run per coin determines them exactly),
precomputes the magic-branch tree and per-location fault propagation tables,
and leaves a per-trajectory cost of a few dozen integer operations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dense import apply_pauli_to_vector
from .hybrid import HybridState
from .noise import NoiseModel
from .paulis import PauliOperator
from .tableau import conjugate_pauli_by_gate
from .trajectory import Schedule

_BRANCH_TOL = 1e-9


@dataclass
class _StepRecord:
    kind: str  # 'uniform' | 'det' | 'magic'
    qubit: int
    base: int = 0
    bmask: int = 0
    index: int = 0  # uniform-bit or magic-step index


@dataclass
class _ObsRecord:
    zero: bool
    sigma: tuple[int, int] = (0, 0)
    base: int = 0
    bmask: int = 0
    # original full-register masks, for the propagated-fault commutation sign
    px: int = 0
    pz: int = 0


@dataclass
class CompiledPlan:
    n: int
    measured: list[int]
    steps: list[_StepRecord]
    n_uniform: int
    magic_sigmas: list[tuple[int, int]]
    leaf_probs: np.ndarray
    leaf_cvecs: np.ndarray
    leaf_kets: list[np.ndarray]
    observables: list[_ObsRecord]
    obs_table: np.ndarray | None  # [n_leaves, n_obs]
    noise_locations: list  # (kind, strength_key, [(xmask, zmask) per fault])
    # affine readout model: y = base_y ^ (xor of cols for set coins) ^ leaf_mask
    base_y: int = 0
    coin_cols: list[int] = field(default_factory=list)
    leaf_masks: np.ndarray | None = None

    def exact_distribution(self) -> dict[int, float]:
        """Ideal (noise-free) readout distribution; exponential in n_uniform."""
        out: dict[int, float] = {}
        for b in range(1 << self.n_uniform):
            ymid = self.base_y
            for i in range(self.n_uniform):
                if (b >> i) & 1:
                    ymid ^= self.coin_cols[i]
            w = 1.0 / (1 << self.n_uniform)
            for lp, lm in zip(self.leaf_probs, self.leaf_masks):
                y = ymid ^ int(lm)
                out[y] = out.get(y, 0.0) + w * lp
        return out


def _record_run(schedule: Schedule, flip_coin: int | None):
    """One forced hybrid pass; returns (steps, magic sigma words, final state)."""
    state = HybridState.with_product_inputs(schedule.n, schedule.magic_inputs, pure=True)
    steps = []
    sigmas = []
    coin = 0
    for op in schedule.ops:
        if op[0] == "gate":
            state.apply_gate(op[1])
        elif op[0] == "measure":
            q = op[1]
            a = state.zrows[q]
            if a.x & state.stab_mask:
                bit = 1 if coin == flip_coin else 0
                state.measure_z(q, force=bit)
                steps.append(_StepRecord("uniform", q, index=coin, base=bit))
                coin += 1
            else:
                sigma = state._magic_part(a)
                sbit = 0 if a.sign == 1 else 1
                if sigma.x == 0 and sigma.z == 0:
                    state.measure_z(q, force=sbit)
                    steps.append(_StepRecord("det", q, base=sbit))
                else:
                    # follow the branch of positive weight; the c-process is
                    # sign-independent so every run takes the same branch
                    exp = state._magic_expectation(sigma)
                    c = 0 if (1 + exp) / 2 > _BRANCH_TOL else 1
                    state.measure_z(q, force=sbit ^ c)
                    steps.append(
                        _StepRecord("magic", q, base=sbit, index=len(sigmas))
                    )
                    sigmas.append((sigma.x, sigma.z))
    return steps, sigmas, state


def _record_observables(state: HybridState, observables):
    recs = []
    for p in observables:
        img = state._image_of(p)
        if img.x & state.stab_mask:
            recs.append(_ObsRecord(zero=True, px=p.x, pz=p.z))
        else:
            sigma = state._magic_part(img)
            recs.append(
                _ObsRecord(
                    False,
                    (sigma.x, sigma.z),
                    0 if img.sign == 1 else 1,
                    px=p.x,
                    pz=p.z,
                )
            )
    return recs


def _leaf_tree(magic_inputs, magic_qubits, sigmas):
    """Joint distribution of the sign-free magic outcome bits c_1..c_m."""
    ket = np.array([1.0 + 0j])
    for q in sorted(magic_qubits):
        ket = np.kron(np.asarray(magic_inputs[q], dtype=complex), ket)
    k = len(magic_qubits)
    leaves = []

    def recurse(v, depth, cbits, weight):
        if depth == len(sigmas):
            leaves.append((weight, cbits, v))
            return
        sx, sz = sigmas[depth]
        sigma = PauliOperator(k, sx, sz, 0)
        pv = apply_pauli_to_vector(v, sigma)
        for c in (0, 1):
            branch = 0.5 * (v + pv) if c == 0 else 0.5 * (v - pv)
            w = float(np.linalg.norm(branch) ** 2)
            if w * weight > 1e-14:
                recurse(branch / np.sqrt(w), depth + 1, cbits | (c << depth), weight * w)

    recurse(ket, 0, 0, 1.0)
    return leaves


def _propagation_tables(schedule: Schedule, noise: NoiseModel):
    """Per-location propagated fault masks (x, z) through the remaining gates."""
    n = schedule.n
    img_x = [(1 << q, 0) for q in range(n)]  # masks of forward image of X_q
    img_z = [(0, 1 << q) for q in range(n)]
    # walk the ops backwards, maintaining images under the remaining circuit
    locs = []
    for i in range(len(schedule.ops) - 1, -1, -1):
        op = schedule.ops[i]
        if op[0] == "gate":
            g = op[1]
            # record the location first: fault happens after the gate,
            # so it propagates through the circuit strictly beyond i
            if len(g.qubits) == 1 and g.name != "I":
                faults = _local_faults_1q(g.qubits[0], img_x, img_z)
                locs.append((i, "gate1", noise.q1, faults))
            elif len(g.qubits) == 2:
                faults = _local_faults_2q(g.qubits, img_x, img_z)
                locs.append((i, "gate2", noise.q2, faults))
            elif len(g.qubits) == 3:
                raise ValueError("compiled engine is Clifford-only")
            # then absorb the gate into the images
            new_x, new_z = {}, {}
            for q in g.qubits:
                for store, letter in ((new_x, "X"), (new_z, "Z")):
                    local = conjugate_pauli_by_gate(
                        g, PauliOperator.single(n, q, letter)
                    )
                    mx = mz = 0
                    rem = local.x
                    while rem:
                        b = (rem & -rem).bit_length() - 1
                        mx ^= img_x[b][0]
                        mz ^= img_x[b][1]
                        rem &= rem - 1
                    rem = local.z
                    while rem:
                        b = (rem & -rem).bit_length() - 1
                        mx ^= img_z[b][0]
                        mz ^= img_z[b][1]
                        rem &= rem - 1
                    store[q] = (mx, mz)
            for q in g.qubits:
                img_x[q] = new_x[q]
                img_z[q] = new_z[q]
        elif op[0] == "prep":
            q = op[1]
            faults = _local_faults_1q(q, img_x, img_z)
            locs.append((i, "prep", noise.q_prep, faults))
    locs.reverse()
    return [(kind, strength, faults) for _, kind, strength, faults in locs]


def _local_faults_1q(q, img_x, img_z):
    xq, zq = img_x[q], img_z[q]
    yq = (xq[0] ^ zq[0], xq[1] ^ zq[1])
    return [xq, yq, zq]


def _local_faults_2q(qubits, img_x, img_z):
    a, b = qubits
    basis = {"xa": img_x[a], "za": img_z[a], "xb": img_x[b], "zb": img_z[b]}
    out = []
    for xa in range(2):
        for za in range(2):
            for xb in range(2):
                for zb in range(2):
                    if not (xa | za | xb | zb):
                        continue
                    mx = mz = 0
                    for flag, key in ((xa, "xa"), (za, "za"), (xb, "xb"), (zb, "zb")):
                        if flag:
                            mx ^= basis[key][0]
                            mz ^= basis[key][1]
                    out.append((mx, mz))
    return out


def compile_schedule(
    schedule: Schedule, noise: NoiseModel, observables: list[PauliOperator] | None = None
) -> CompiledPlan:
    observables = observables or []
    base_steps, magic_sigmas, base_state = _record_run(schedule, None)
    base_obs = _record_observables(base_state, observables)
    n_uniform = sum(1 for s in base_steps if s.kind == "uniform")
    if n_uniform > 128:
        raise ValueError("more than 128 coin bits; extend the runtime packing")
    # one extra pass per coin determines the affine sign dependence exactly
    for i in range(n_uniform):
        steps_i, sigmas_i, state_i = _record_run(schedule, i)
        obs_i = _record_observables(state_i, observables)
        assert sigmas_i == magic_sigmas
        for s0, s1 in zip(base_steps, steps_i):
            assert s0.kind == s1.kind and s0.qubit == s1.qubit
            if s0.kind in ("det", "magic") and s1.base != s0.base:
                s0.bmask |= 1 << i
        for o0, o1 in zip(base_obs, obs_i):
            assert o0.zero == o1.zero
            if not o0.zero:
                assert o0.sigma == o1.sigma
                if o1.base != o0.base:
                    o0.bmask |= 1 << i
    for s in base_steps:
        if s.kind == "uniform":
            s.base = 0
    leaves = _leaf_tree(schedule.magic_inputs, sorted(schedule.magic_inputs), magic_sigmas)
    leaf_probs = np.array([w for w, _, _ in leaves])
    leaf_cvecs = np.array([c for _, c, _ in leaves], dtype=np.int64)
    leaf_kets = [v for _, _, v in leaves]
    obs_table = None
    if observables:
        k = len(schedule.magic_inputs)
        obs_table = np.zeros((len(leaves), len(observables)))
        for li, ket in enumerate(leaf_kets):
            for oi, rec in enumerate(base_obs):
                if rec.zero:
                    continue
                sigma = PauliOperator(k, rec.sigma[0], rec.sigma[1], 0)
                obs_table[li, oi] = float(
                    np.real(np.vdot(ket, apply_pauli_to_vector(ket, sigma)))
                )
    plan = CompiledPlan(
        n=schedule.n,
        measured=schedule.measured_qubits,
        steps=base_steps,
        n_uniform=n_uniform,
        magic_sigmas=magic_sigmas,
        leaf_probs=leaf_probs,
        leaf_cvecs=leaf_cvecs,
        leaf_kets=leaf_kets,
        observables=base_obs,
        obs_table=obs_table,
        noise_locations=_propagation_tables(schedule, noise),
    )
    _build_affine_model(plan)
    return plan


def _build_affine_model(plan: CompiledPlan):
    """y(b, leaf) = base ^ xor(cols @ b) ^ leaf_mask[leaf]."""

    def assemble(b, cvec):
        y = 0
        for s in plan.steps:
            if s.kind == "uniform":
                bit = (b >> s.index) & 1
            elif s.kind == "det":
                bit = s.base ^ ((s.bmask & b).bit_count() & 1)
            else:
                sigma_bit = s.base ^ ((s.bmask & b).bit_count() & 1)
                bit = sigma_bit ^ ((cvec >> s.index) & 1)
            y |= bit << s.qubit
        return y

    plan.base_y = assemble(0, 0)
    plan.coin_cols = [assemble(1 << i, 0) ^ plan.base_y for i in range(plan.n_uniform)]
    plan.leaf_masks = np.array(
        [assemble(0, int(c)) ^ plan.base_y for c in plan.leaf_cvecs], dtype=object
    )


@dataclass
class TrajectoryBatch:
    """Vectorized per-trajectory results of a compiled run."""

    size: int
    x_lo: np.ndarray
    x_hi: np.ndarray
    leaf: np.ndarray
    b_lo: np.ndarray
    b_hi: np.ndarray
    fx_lo: np.ndarray
    fx_hi: np.ndarray
    fz_lo: np.ndarray
    fz_hi: np.ndarray

    def bit(self, q: int) -> np.ndarray:
        if q < 64:
            return ((self.x_lo >> np.uint64(q)) & np.uint64(1)).astype(np.uint8)
        return ((self.x_hi >> np.uint64(q - 64)) & np.uint64(1)).astype(np.uint8)

    def parity(self, mask: int) -> np.ndarray:
        lo = np.uint64(mask & ((1 << 64) - 1))
        hi = np.uint64(mask >> 64)
        v = (self.x_lo & lo) ^ (self.x_hi & hi)
        return _parity64(v)


def _parity64(v: np.ndarray) -> np.ndarray:
    for shift in (32, 16, 8, 4, 2, 1):
        v = v ^ (v >> np.uint64(shift))
    return (v & np.uint64(1)).astype(np.uint8)


def _split(mask: int):
    return np.uint64(mask & ((1 << 64) - 1)), np.uint64(mask >> 64)


def _distinct_rows(rng, size: int, count: int) -> np.ndarray:
    """``count`` distinct uniform indices in [0, size); O(count) expected."""
    if count >= size:
        return np.arange(size)
    rows = np.unique(rng.integers(0, size, count))
    while rows.size < count:
        extra = rng.integers(0, size, 2 * (count - rows.size))
        rows = np.unique(np.concatenate([rows, extra]))
    if rows.size > count:
        rows = rng.permutation(rows)[:count]
    return rows


def run_compiled(plan: CompiledPlan, noise: NoiseModel, n_traj: int, rng) -> TrajectoryBatch:
    """Sample a batch of trajectories from a compiled plan."""
    size = n_traj
    b_lo = rng.integers(0, 2**64, size=size, dtype=np.uint64)
    b_hi = rng.integers(0, 2**64, size=size, dtype=np.uint64)
    if plan.n_uniform < 64:
        b_lo &= np.uint64((1 << plan.n_uniform) - 1)
        b_hi &= np.uint64(0)
    elif plan.n_uniform < 128:
        b_hi &= np.uint64((1 << (plan.n_uniform - 64)) - 1)
    # ideal readout
    y_lo = np.full(size, _split(plan.base_y)[0], dtype=np.uint64)
    y_hi = np.full(size, _split(plan.base_y)[1], dtype=np.uint64)
    for i, col in enumerate(plan.coin_cols):
        if col == 0:
            continue
        sel = (
            ((b_lo >> np.uint64(i)) & np.uint64(1)).astype(bool)
            if i < 64
            else ((b_hi >> np.uint64(i - 64)) & np.uint64(1)).astype(bool)
        )
        clo, chi = _split(col)
        y_lo[sel] ^= clo
        y_hi[sel] ^= chi
    if len(plan.leaf_probs) > 1:
        cum = np.cumsum(plan.leaf_probs)
        cum /= cum[-1]
        leaf = np.searchsorted(cum, rng.random(size)).astype(np.int64)
    else:
        leaf = np.zeros(size, dtype=np.int64)
    lm_lo = np.array([_split(int(m))[0] for m in plan.leaf_masks], dtype=np.uint64)
    lm_hi = np.array([_split(int(m))[1] for m in plan.leaf_masks], dtype=np.uint64)
    y_lo ^= lm_lo[leaf]
    y_hi ^= lm_hi[leaf]
    # faults
    fx_lo = np.zeros(size, dtype=np.uint64)
    fx_hi = np.zeros(size, dtype=np.uint64)
    fz_lo = np.zeros(size, dtype=np.uint64)
    fz_hi = np.zeros(size, dtype=np.uint64)
    for kind, strength, faults in plan.noise_locations:
        p_any = 1.5 * strength if kind in ("gate1", "prep") else 1.25 * strength
        if p_any <= 0:
            continue
        count = rng.binomial(size, p_any)
        if count == 0:
            continue
        rows = _distinct_rows(rng, size, count)
        kinds = rng.integers(len(faults), size=count)
        for fi in range(len(faults)):
            sub = rows[kinds == fi]
            if sub.size == 0:
                continue
            mx, mz = faults[fi]
            xlo, xhi = _split(mx)
            zlo, zhi = _split(mz)
            fx_lo[sub] ^= xlo
            fx_hi[sub] ^= xhi
            fz_lo[sub] ^= zlo
            fz_hi[sub] ^= zhi
    # measurement read-out flips
    flip_lo = np.zeros(size, dtype=np.uint64)
    flip_hi = np.zeros(size, dtype=np.uint64)
    for q in plan.measured:
        count = rng.binomial(size, noise.p_meas)
        if count == 0:
            continue
        rows = _distinct_rows(rng, size, count)
        if q < 64:
            flip_lo[rows] ^= np.uint64(1 << q)
        else:
            flip_hi[rows] ^= np.uint64(1 << (q - 64))
    x_lo = y_lo ^ fx_lo ^ flip_lo
    x_hi = y_hi ^ fx_hi ^ flip_hi
    return TrajectoryBatch(
        size, x_lo, x_hi, leaf, b_lo, b_hi, fx_lo, fx_hi, fz_lo, fz_hi
    )


def evaluate_observable(plan: CompiledPlan, batch: TrajectoryBatch, obs_index: int):
    """Per-trajectory expectation of a compiled observable on the
    post-measurement state, including the propagated-fault conjugation sign."""
    rec = plan.observables[obs_index]
    if rec.zero:
        return np.zeros(batch.size)
    vals = plan.obs_table[batch.leaf, obs_index].copy()
    sbits = np.zeros(batch.size, dtype=np.uint8)
    if rec.bmask:
        blo, bhi = _split(rec.bmask)
        sbits ^= _parity64((batch.b_lo & blo) ^ (batch.b_hi & bhi))
    if rec.base:
        sbits ^= np.uint8(1)
    # conjugation by the total propagated fault: F P F = (-1)^<F,P> P
    pzlo, pzhi = _split(rec.pz)
    pxlo, pxhi = _split(rec.px)
    fsign = _parity64(
        (batch.fx_lo & pzlo)
        ^ (batch.fx_hi & pzhi)
        ^ (batch.fz_lo & pxlo)
        ^ (batch.fz_hi & pxhi)
    )
    sbits ^= fsign
    vals[sbits.astype(bool)] *= -1
    return vals
