"""Phase-state fingerprints and the controlled-SWAP comparison test.

A fingerprint of an m-bit word y is the state with amplitude (-1)^(y_j)/sqrt(m)
on basis state |j>. Such states are fully described by their classical phase
pattern: the inner product of two fingerprints is (m - 2d)/m where d is the
Hamming distance of the patterns, and the comparison test accepts (control
qubit measures 0) with probability (1 + ip^2)/2. All protocol probabilities
can therefore be computed exactly from integer Hamming distances, which keeps
million-trial Monte Carlo cheap.

cswap_statevector_prob is the guard against modeling error: it runs the actual
H / controlled-SWAP / H circuit on a dense statevector and must agree with the
analytic swap_accept_prob to 1e-10 (the circuit uses 2*log2(m) + 1 qubits, so
floating-point error stays far below that).

Measured copies are assumed to be discarded by the caller: each sampled test
consumes one copy of each input state in the caller's resource accounting, and
no post-measurement state is tracked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bits import as_bits

# Dense oracle limit: m = 64 means 13 qubits, 8192 amplitudes.
MAX_ORACLE_M = 64


class Fingerprint:
    """Immutable classical description of a phase state: the m-bit phase pattern.

    Two fingerprints are equal iff their phase patterns are equal; global phase
    never enters because the amplitude on j is pinned to (-1)^(phases_j)/sqrt(m).
    """

    __slots__ = ("phases",)

    def __init__(self, phases) -> None:
        arr = as_bits(phases, name="phases")
        arr.setflags(write=False)
        object.__setattr__(self, "phases", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Fingerprint is immutable")

    @property
    def m(self) -> int:
        return self.phases.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, Fingerprint):
            return NotImplemented
        return self.phases.shape == other.phases.shape and bool(
            np.array_equal(self.phases, other.phases)
        )

    def __hash__(self) -> int:
        return hash(self.phases.tobytes())

    def __repr__(self) -> str:
        body = "".join(str(int(b)) for b in self.phases[:16])
        tail = "..." if self.m > 16 else ""
        return f"Fingerprint({body}{tail}, m={self.m})"


@dataclass(frozen=True)
class SwapOutcome:
    """Measurement of the comparison test's control qubit: 0 accepts, 1 rejects."""

    bit: int

    def __post_init__(self) -> None:
        if self.bit not in (0, 1):
            raise ValueError(f"outcome bit must be 0 or 1, got {self.bit}")


def make_fingerprint(word) -> Fingerprint:
    """Fingerprint of a codeword or of raw memory contents: phases = word bits, verbatim."""
    return Fingerprint(word)


def amplitudes(fp: Fingerprint) -> np.ndarray:
    """Amplitude vector of the phase state: (-1)^(phases_j) / sqrt(m). Real by construction."""
    return ((-1.0) ** fp.phases.astype(np.int64)) / math.sqrt(fp.m)


def _check_same_m(a: Fingerprint, b: Fingerprint) -> int:
    if a.m != b.m:
        raise ValueError(f"fingerprint length mismatch: {a.m} vs {b.m}")
    return a.m


def inner_product(a: Fingerprint, b: Fingerprint) -> float:
    """<a|b> = (m - 2d)/m with d the Hamming distance of the phase patterns.

    The states are real, so the inner product is real and lies in [-1, 1].
    Computed in integers up to the single final division.
    """
    m = _check_same_m(a, b)
    d = int(np.count_nonzero(a.phases != b.phases))
    return (m - 2 * d) / m


def swap_accept_prob(a: Fingerprint, b: Fingerprint) -> float:
    """Probability the comparison test accepts: (1 + <a|b>^2) / 2, in [1/2, 1]."""
    ip = inner_product(a, b)
    return (1.0 + ip * ip) / 2.0


def sample_swap_test(a: Fingerprint, b: Fingerprint, rng: np.random.Generator) -> SwapOutcome:
    """Sample one comparison test: 0 with probability swap_accept_prob(a, b), else 1.

    Consumes one copy of each state in the caller's accounting; the sampled
    copies must not be reused.
    """
    p = swap_accept_prob(a, b)
    return SwapOutcome(0 if rng.random() < p else 1)


def cswap_statevector_prob(a: Fingerprint, b: Fingerprint) -> float:
    """Accept probability from a dense simulation of the actual test circuit.

    Builds |0>|psi_a>|psi_b> on 2*log2(m) + 1 qubits, applies a Hadamard on
    the control, a register swap controlled on it (log2(m) qubit-pair swaps),
    a second Hadamard, and returns the probability of measuring the control
    as 0. Serves as the independent oracle for swap_accept_prob; requires m
    to be a power of two and at most 64.
    """
    m = _check_same_m(a, b)
    if m & (m - 1) != 0:
        raise ValueError(f"statevector oracle requires m to be a power of two, got {m}")
    if m > MAX_ORACLE_M:
        raise ValueError(f"statevector oracle limited to m <= {MAX_ORACLE_M}, got {m}")
    n_reg = m.bit_length() - 1  # qubits per register

    state = np.zeros((2, m, m))
    state[0] = np.outer(amplitudes(a), amplitudes(b))

    def hadamard_on_control(s: np.ndarray) -> np.ndarray:
        out = np.empty_like(s)
        out[0] = (s[0] + s[1]) / math.sqrt(2)
        out[1] = (s[0] - s[1]) / math.sqrt(2)
        return out

    state = hadamard_on_control(state)
    # Controlled register swap: exchange qubit i of each register on the |1> branch.
    branch = state[1].reshape([2] * (2 * n_reg)) if n_reg else state[1]
    for i in range(n_reg):
        branch = np.swapaxes(branch, i, n_reg + i)
    state[1] = branch.reshape(m, m)
    state = hadamard_on_control(state)

    return float(np.sum(state[0] ** 2))
