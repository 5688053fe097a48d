"""Benchmarking schemes and sample planning.

Three estimators:

* tomography baseline  — twirl-then-measure-Z rounds, Bern(p0 + eps/sqrt(3));
* Bell measurement     — transversal CNOT+H on two twirled copies; the odd
  pair-parity probability is (1 - Tr[rho1 rho2])/2, a Bern(Theta(eps)) coin;
* single-copy          — per-irrep stabilizer witness hits, eps = sum_i
  lambda_i * dim_i.

Planners are the Chernoff-based sample-size rules; the tomography planner
uses the Gaussian Std[eps_hat] = r*eps convention (68% confidence).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .circuits import Circuit

P0_OFFSET = 0.5 * (1 - 1 / math.sqrt(3))


@dataclass
class BenchmarkEstimate:
    """Estimated infidelity with standard error and shot accounting."""

    scheme: str
    epsilon_hat: float
    std_err: float
    shots_used: int
    epsilon_raw: float  # unclamped value; clamping is ours, not the scheme's
    witness_counts: list[tuple[int, int]] = field(default_factory=list)
    clamped: bool = False

    def __post_init__(self):
        if not 0.0 <= self.epsilon_hat <= 1.0:
            raise ValueError("epsilon_hat outside [0, 1]")
        if self.shots_used <= 0:
            raise ValueError("shots_used must be positive")


@dataclass
class SamplePlan:
    r: float
    delta: float
    epsilon_guess: float
    scheme: str
    copies: int
    rounds: int | None = None
    per_witness: list[int] | None = None

    def __post_init__(self):
        if not 0.0 < self.r < 1.0:
            raise ValueError("r outside (0, 1)")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta outside (0, 1)")


def build_bell_circuit(n: int) -> Circuit:
    """Bell-basis measurement circuit on 2n qubits (copy 2 on qubits n..2n-1).

    Computational readout after this circuit samples the Bell basis
    CNOT(H x I)|x>; for n = 1 the outcome-11 projector is the singlet.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    circ = Circuit(2 * n)
    for i in range(n):
        circ.append("CNOT", i, i + n)
    for i in range(n):
        circ.append("H", i)
    return circ


def bell_parity(outcome_bits) -> int:
    """Parity of sum_i x_i * x_{i+n} over a 2n-bit outcome."""
    bits = list(outcome_bits)
    if len(bits) % 2:
        raise ValueError("outcome length must be even")
    n = len(bits) // 2
    return sum(bits[i] & bits[i + n] for i in range(n)) % 2


def bell_estimate(parities) -> BenchmarkEstimate:
    """eps_hat = mean parity indicator; E[eps_hat] = eps(1 + O(eps))."""
    arr = np.asarray(list(parities), dtype=float)
    if arr.size == 0:
        raise ValueError("no samples")
    rounds = arr.size
    mean = float(arr.mean())
    std = math.sqrt(mean * (1 - mean) / rounds)
    return BenchmarkEstimate(
        scheme="bell",
        epsilon_hat=mean,
        std_err=std,
        shots_used=2 * rounds,
        epsilon_raw=mean,
    )


def single_copy_estimate(witness_counts, dims) -> BenchmarkEstimate:
    """eps_hat = sum_i (hits_i / shots_i) * dim_i."""
    counts = list(witness_counts)
    dims = list(dims)
    if len(counts) != len(dims):
        raise ValueError("dims/counts length mismatch")
    total = 0.0
    var = 0.0
    shots = 0
    for (hits, n_i), d_i in zip(counts, dims):
        if n_i <= 0:
            raise ValueError("shots_i must be positive")
        lam = hits / n_i
        total += lam * d_i
        var += d_i**2 * lam * (1 - lam) / n_i
        shots += n_i
    clamped = not 0.0 <= total <= 1.0
    return BenchmarkEstimate(
        scheme="single-copy",
        epsilon_hat=min(max(total, 0.0), 1.0),
        std_err=math.sqrt(var),
        shots_used=shots,
        epsilon_raw=total,
        witness_counts=[(int(h), int(n)) for h, n in counts],
        clamped=clamped,
    )


def tomography_baseline(samples) -> BenchmarkEstimate:
    """eps_hat = sqrt(3) * (sample mean - p0), clamped to [0, 1].

    Each sample is the Z-measurement bit of a twirl-then-measure round on the
    single-qubit twirled state; the mean estimates p0 + eps/sqrt(3).
    """
    arr = np.asarray(list(samples), dtype=float)
    if arr.size == 0:
        raise ValueError("no samples")
    mean = float(arr.mean())
    raw = math.sqrt(3) * (mean - P0_OFFSET)
    std = math.sqrt(3 * mean * (1 - mean) / arr.size)
    return BenchmarkEstimate(
        scheme="tomography",
        epsilon_hat=min(max(raw, 0.0), 1.0),
        std_err=std,
        shots_used=arr.size,
        epsilon_raw=raw,
        clamped=not 0.0 <= raw <= 1.0,
    )


def plan_samples(
    r: float,
    delta: float,
    epsilon_guess: float,
    scheme: str,
    dims=None,
) -> SamplePlan:
    """Chernoff sample-size planner.

    Bell: N = ceil(3/(r^2 eps) * (ln(1/delta) + ln 2)) copies, rounded up to
    an even count (two copies per round).  Single-copy: per-witness
    N_i = ceil(3 k d_i/(r^2 eps) * (ln(k/delta) + ln 2)).  Tomography uses
    the Gaussian Std[eps_hat] = r*eps target instead.
    """
    if epsilon_guess <= 0:
        raise ValueError("epsilon_guess must be positive")
    if scheme == "bell":
        n = math.ceil(3.0 / (r * r * epsilon_guess) * (math.log(1 / delta) + math.log(2)))
        if n % 2:
            n += 1
        return SamplePlan(r, delta, epsilon_guess, scheme, copies=n, rounds=n // 2)
    if scheme == "single-copy":
        if not dims:
            raise ValueError("single-copy planning needs the component dimensions")
        k = len(dims)
        per = [
            math.ceil(
                3.0 * k * d / (r * r * epsilon_guess) * (math.log(k / delta) + math.log(2))
            )
            for d in dims
        ]
        return SamplePlan(
            r, delta, epsilon_guess, scheme, copies=sum(per), per_witness=per
        )
    if scheme == "tomography":
        pbar = P0_OFFSET + epsilon_guess / math.sqrt(3)
        n = math.ceil(3.0 * pbar * (1 - pbar) / (r * epsilon_guess) ** 2)
        return SamplePlan(r, delta, epsilon_guess, scheme, copies=n)
    raise ValueError(f"unknown scheme {scheme!r}")


def pilot_epsilon_guess(samples, scheme: str = "bell", floor: float = 1e-6) -> float:
    """Planning guess from a pilot run; floored away from zero."""
    if scheme == "bell":
        est = bell_estimate(samples)
    else:
        est = tomography_baseline(samples)
    return max(est.epsilon_hat, floor)
