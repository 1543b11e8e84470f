"""Locally decodable codes: abstract interface plus a concrete Hadamard instance.

The Hadamard code maps an n-bit message x to the 2^n parities <x, a> mod 2,
one per mask a. Codeword position a is the integer whose binary expansion is
the mask (message bit i carries integer weight 2^(n-1-i), i.e. the bit string
read MSB-first). Any two distinct codewords differ in exactly half their
positions, and any single message bit can be recovered from two codeword
positions: x_i = E(x)_a xor E(x)_{a xor e_i} for every mask a, where e_i is
the unit mask of bit i. That makes the code 2-query locally decodable: with
at most a delta_dec fraction of positions corrupted, a uniformly random mask
yields the correct bit with probability at least 1 - 2*delta_dec.

The decoder performs exactly one plan/answers round per call; amplification
(repeating the decode) is deliberately left to callers so that per-request
query counts stay honest.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .bits import as_bits

# Hadamard codeword length is 2^n; keep n at desk scale.
MAX_HADAMARD_N = 20


@dataclass(frozen=True)
class CodeParams:
    """Static parameters of a locally decodable code.

    n          message length in bits
    m          codeword length in bits
    q          maximum codeword positions a single local decode may read
    delta      relative minimum distance: distinct codewords differ in >= delta*m positions
    delta_dec  corruption radius (fraction of m) the local decoder tolerates
    eps_dec    decoder advantage: success probability >= 1/2 + eps_dec within the radius
    """

    n: int
    m: int
    q: int
    delta: float
    delta_dec: float
    eps_dec: float

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.m < self.n:
            raise ValueError(f"m must be >= n, got m={self.m}, n={self.n}")
        if self.q < 1:
            raise ValueError(f"q must be >= 1, got {self.q}")
        if not 0.0 < self.delta <= 1.0:
            raise ValueError(f"delta must be in (0, 1], got {self.delta}")
        if not 0.0 <= self.delta_dec < self.delta / 2:
            raise ValueError(
                f"delta_dec must be in [0, delta/2), got {self.delta_dec} with delta={self.delta}"
            )
        if not 0.0 < self.eps_dec <= 0.5:
            raise ValueError(f"eps_dec must be in (0, 1/2], got {self.eps_dec}")


class LocallyDecodableCode(ABC):
    """Encoding plus probabilistic local decoding under bounded corruption.

    Implementations must be pure: encode is deterministic, and
    decode_from_answers depends only on (index, plan, answers). Randomness
    enters solely through the caller-supplied generator in decode_query_plan,
    which keeps every operation safe to use from concurrent workers.
    """

    @property
    @abstractmethod
    def params(self) -> CodeParams: ...

    @abstractmethod
    def encode(self, msg) -> np.ndarray:
        """Deterministically encode an n-bit message into an m-bit codeword."""

    @abstractmethod
    def decode_query_plan(self, index: int, rng: np.random.Generator) -> list[int]:
        """Sample the <= q codeword positions a local decode of bit *index* will read.

        Returns the positions without reading them, so the caller can route
        the reads through whatever oracle holds the codeword and count them.
        """

    @abstractmethod
    def decode_from_answers(self, index: int, plan: list[int], answers) -> int:
        """Recover message bit *index* from the answers to a previously emitted plan."""

    # -- shared validation -------------------------------------------------

    def _check_index(self, index: int) -> None:
        n = self.params.n
        if not 0 <= index < n:
            raise IndexError(f"bit index {index} out of range [0, {n})")


class HadamardCode(LocallyDecodableCode):
    """The Hadamard code: m = 2^n, q = 2, relative distance 1/2.

    delta_dec defaults to 1/8, which gives decoder advantage
    eps_dec = 1/2 - 2*delta_dec = 1/4 (the decoder fails only when exactly
    one of its two reads is corrupted, so its failure probability is at most
    2*delta_dec over the uniform mask).
    """

    def __init__(self, n: int, delta_dec: float = 0.125):
        if not 1 <= n <= MAX_HADAMARD_N:
            raise ValueError(f"n must be in [1, {MAX_HADAMARD_N}], got {n}")
        if not 0.0 <= delta_dec < 0.25:
            raise ValueError(f"delta_dec must be in [0, 0.25), got {delta_dec}")
        m = 1 << n
        self._params = CodeParams(
            n=n,
            m=m,
            q=2,
            delta=0.5,
            delta_dec=delta_dec,
            eps_dec=0.5 - 2.0 * delta_dec,
        )
        self._masks = np.arange(m, dtype=np.uint64)

    @property
    def params(self) -> CodeParams:
        return self._params

    def unit_mask(self, index: int) -> int:
        """Integer mask with a single 1 at message bit *index* (MSB-first weights)."""
        self._check_index(index)
        return 1 << (self._params.n - 1 - index)

    def encode(self, msg) -> np.ndarray:
        bits = as_bits(msg, name="message")
        n = self._params.n
        if bits.size != n:
            raise ValueError(f"message length {bits.size} != n={n}")
        x = 0
        for b in bits:
            x = (x << 1) | int(b)
        # parity of (x AND a) for every mask a
        return (np.bitwise_count(self._masks & np.uint64(x)) & 1).astype(np.uint8)

    def plan_for_mask(self, index: int, mask: int) -> list[int]:
        """The two positions read for a given sampled mask: [a, a xor e_index]."""
        self._check_index(index)
        m = self._params.m
        if not 0 <= mask < m:
            raise ValueError(f"mask {mask} out of range [0, {m})")
        return [mask, mask ^ self.unit_mask(index)]

    def decode_query_plan(self, index: int, rng: np.random.Generator) -> list[int]:
        self._check_index(index)
        mask = int(rng.integers(self._params.m))
        return self.plan_for_mask(index, mask)

    def decode_from_answers(self, index: int, plan: list[int], answers) -> int:
        self._check_index(index)
        answers = np.asarray(answers)
        if len(plan) != 2:
            raise ValueError(f"plan must hold exactly 2 positions, got {len(plan)}")
        if answers.shape != (2,):
            raise ValueError(f"answers length {answers.size} does not match plan length 2")
        if plan[0] ^ plan[1] != self.unit_mask(index):
            raise ValueError(f"plan {plan} is not a valid query pair for bit {index}")
        return int(answers[0]) ^ int(answers[1])
