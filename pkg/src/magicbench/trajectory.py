"""Trajectory-sampled noisy-circuit simulation.

A Schedule is the noisy-circuit contract shared by the direct simulators and
the compiled Monte Carlo engine: preparations, gates and terminal
measurements in program order.  Noise placement follows the single-parameter
model: a sampled Pauli after every preparation and gate, a classical
read-out flip at every measurement.

RNG contract: one master seed; trajectory i draws from
SeedSequence(master, spawn_key=(i,)), so results are independent of
execution order and worker count.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .circuits import Circuit, Gate
from .dense import (
    CapacityError,
    STATE_QUBIT_CAP,
    apply_gate_to_vector,
    apply_pauli_to_vector,
)
from .hybrid import HybridState
from .noise import NoiseModel, flip_measurement, sample_pauli_noise
from .paulis import PauliOperator


@dataclass
class Schedule:
    """Ideal circuit with explicit preparation and measurement events."""

    n: int
    ops: list = field(default_factory=list)  # ('prep', q) | ('gate', Gate) | ('measure', q)
    magic_inputs: dict[int, np.ndarray] = field(default_factory=dict)

    def prep_all(self):
        for q in range(self.n):
            self.ops.append(("prep", q))
        return self

    def gate(self, name, *qubits):
        g = Gate(name, tuple(qubits))
        if any(q >= self.n for q in qubits):
            raise ValueError("qubit index out of range")
        self.ops.append(("gate", g))
        return self

    def extend_gates(self, gates):
        for g in gates:
            self.ops.append(("gate", g))
        return self

    def measure(self, *qubits):
        for q in qubits:
            self.ops.append(("measure", q))
        return self

    @property
    def measured_qubits(self) -> list[int]:
        return [op[1] for op in self.ops if op[0] == "measure"]

    @property
    def gates(self) -> list[Gate]:
        return [op[1] for op in self.ops if op[0] == "gate"]

    def is_clifford(self) -> bool:
        return all(g.is_clifford for g in self.gates)

    def noise_locations(self, noise: NoiseModel):
        """(op index, kind, qubits, strength) for every stochastic location."""
        locs = []
        for i, op in enumerate(self.ops):
            if op[0] == "prep":
                locs.append((i, "prep", (op[1],), noise.q_prep))
            elif op[0] == "gate":
                g = op[1]
                if len(g.qubits) == 1:
                    if g.name != "I":
                        locs.append((i, "gate1", g.qubits, noise.q1))
                elif len(g.qubits) >= 2:
                    # CCZ is decomposed upstream; 2q channel for 2q gates
                    locs.append((i, "gate2", g.qubits, noise.q2))
        return locs


@dataclass
class TrajectoryRecord:
    trajectory_id: int
    seed: int
    accepted: bool | None
    bits: list[int]
    aux_flags: dict = field(default_factory=dict)

    def outcome_hex(self) -> str:
        val = 0
        for i, b in enumerate(self.bits):
            val |= (b & 1) << i
        width = max(1, (len(self.bits) + 3) // 4)
        return f"{val:0{width}x}"


def trajectory_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(index,)))


def _embed(p: PauliOperator, qubits, n: int) -> PauliOperator:
    x = z = 0
    for i, q in enumerate(qubits):
        x |= ((p.x >> i) & 1) << q
        z |= ((p.z >> i) & 1) << q
    return PauliOperator(n, x, z, p.phase)


def simulate_trajectory(
    schedule: Schedule,
    noise: NoiseModel,
    seed: int,
    index: int = 0,
    backend: str = "hybrid",
) -> TrajectoryRecord:
    """One noisy trajectory; deterministic given (seed, index)."""
    rng = trajectory_rng(seed, index)
    n = schedule.n
    if backend == "hybrid":
        if not schedule.is_clifford():
            raise ValueError("hybrid backend is Clifford-only")
        state = HybridState.with_product_inputs(n, schedule.magic_inputs, pure=True)
        apply_gate = state.apply_gate
        apply_pauli = state.apply_pauli
        measure = lambda q: state.measure_z(q, rng=rng)[0]
    elif backend == "dense":
        if n > STATE_QUBIT_CAP:
            raise CapacityError(f"dense backend capped at {STATE_QUBIT_CAP} qubits")
        box = {"amps": _product_state(n, schedule.magic_inputs)}

        def apply_gate(g):
            box["amps"] = apply_gate_to_vector(box["amps"], g, n)

        def apply_pauli(p):
            box["amps"] = apply_pauli_to_vector(box["amps"], p)

        def measure(q):
            a = box["amps"].reshape(2 ** (n - 1 - q), 2, 2**q)
            p0 = float(np.sum(np.abs(a[:, 0, :]) ** 2))
            b = int(rng.random() >= p0)
            sel = a.copy()
            sel[:, 1 - b, :] = 0.0
            norm = np.sqrt(p0 if b == 0 else 1 - p0)
            box["amps"] = (sel / norm).reshape(-1)
            return b
    else:
        raise ValueError(f"unknown backend {backend!r}")

    bits = []
    for op in schedule.ops:
        kind = op[0]
        if kind == "prep":
            fault = sample_pauli_noise("prep", noise.q_prep, rng)
            if fault is not None:
                apply_pauli(_embed(fault, (op[1],), n))
        elif kind == "gate":
            g = op[1]
            apply_gate(g)
            if len(g.qubits) == 1 and g.name != "I":
                fault = sample_pauli_noise("gate1", noise.q1, rng)
            elif len(g.qubits) == 2:
                fault = sample_pauli_noise("gate2", noise.q2, rng)
            else:
                fault = None
            if fault is not None:
                apply_pauli(_embed(fault, g.qubits, n))
        elif kind == "measure":
            raw = measure(op[1])
            bits.append(flip_measurement(raw, noise.p_meas, rng))
    return TrajectoryRecord(index, seed, None, bits)


def _product_state(n: int, magic_inputs: dict[int, np.ndarray]) -> np.ndarray:
    amps = np.array([1.0 + 0j])
    for q in range(n):
        ket = magic_inputs.get(q, np.array([1.0, 0.0], dtype=complex))
        amps = np.kron(np.asarray(ket, dtype=complex), amps)
    return amps


def write_trajectory_csv(path, records):
    """Stream trajectory records: trajectory_id, seed, accepted, bits, flags."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["trajectory_id", "seed", "accepted", "outcome_bits", "aux_flags"])
        for r in records:
            flags = ";".join(f"{k}={v}" for k, v in sorted(r.aux_flags.items()))
            acc = "" if r.accepted is None else int(r.accepted)
            w.writerow([r.trajectory_id, r.seed, acc, r.outcome_hex(), flags])
