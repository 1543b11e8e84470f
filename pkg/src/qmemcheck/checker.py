"""The online memory checker: store/retrieve protocols over adversarial public memory.

The checker keeps k fingerprints of the codeword it last wrote. On every
retrieve it fetches k fresh summary fingerprints of the public memory, runs
one comparison test per (stored, summary) pair, and replies "buggy" the moment
any test rejects. Otherwise it answers the requested bit via one local decode
routed through counted memory reads, then replaces its private fingerprints
with k new summaries of the current memory (measured copies are never reused,
so a retrieve fetches 2k summaries in total: k for testing, k for refresh;
both are charged to the query log).

Store runs the same verification phase against the current memory first
(skipped on the very first store, when there is nothing to verify), then
writes the fresh codeword and regenerates its k fingerprints locally.

Complexity accounting: private memory holds k fingerprints of ceil(log2 m)
qubits each; one retrieve is served 2k summaries of ceil(log2 m) qubits each
plus at most q codeword bits for the local decode.

A CheckerState plus its PublicMemory form one sequential protocol session;
distinct sessions are independent and may run in parallel workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bits import as_bits
from .code import LocallyDecodableCode
from .fingerprint import Fingerprint, make_fingerprint, sample_swap_test


class ProtocolError(RuntimeError):
    """An operation was invoked outside its protocol preconditions."""


@dataclass(frozen=True)
class Verdict:
    """Checker reply to a user request: an answer bit, or "buggy".

    Exactly one variant: kind == "answer" carries a bit, kind == "buggy" does not.
    """

    kind: str
    bit: int | None = None

    @classmethod
    def answer(cls, bit: int) -> "Verdict":
        if bit not in (0, 1):
            raise ValueError(f"answer bit must be 0 or 1, got {bit}")
        return cls(kind="answer", bit=bit)

    @classmethod
    def buggy(cls) -> "Verdict":
        return cls(kind="buggy", bit=None)

    def __post_init__(self) -> None:
        if self.kind not in ("answer", "buggy"):
            raise ValueError(f"invalid verdict kind {self.kind!r}")
        if (self.kind == "answer") != (self.bit is not None):
            raise ValueError("answer verdicts carry a bit; buggy verdicts do not")

    @property
    def is_buggy(self) -> bool:
        return self.kind == "buggy"


@dataclass(frozen=True)
class RetrieveLog:
    """Memory traffic of a single retrieve: summaries served and bits read."""

    summaries_fetched: int
    bits_read: int


@dataclass(frozen=True)
class ComplexityReport:
    """Measured resource usage: private qubits held and qubits served per retrieve."""

    s_qubits: int
    t_qubits_per_retrieve: int

    def __post_init__(self) -> None:
        if self.s_qubits < 0 or self.t_qubits_per_retrieve < 0:
            raise ValueError("complexity figures must be nonnegative")


class PublicMemory:
    """The adversary-writable m-bit array, with a log of traffic served to the checker.

    read_log counts individual bit positions served for local decoding;
    summary_log counts summary fingerprints served. Adversary mutations go
    through adversary_flip / adversary_overwrite and are never logged: the
    logs meter checker queries only.
    """

    def __init__(self) -> None:
        self._bits: np.ndarray | None = None
        self.read_log = 0
        self.summary_log = 0

    @property
    def initialized(self) -> bool:
        return self._bits is not None

    @property
    def m(self) -> int:
        self._require_initialized()
        return self._bits.size

    @property
    def bits(self) -> np.ndarray:
        """Read-only view of the current contents (uncounted; for inspection)."""
        self._require_initialized()
        view = self._bits.view()
        view.setflags(write=False)
        return view

    def _require_initialized(self) -> None:
        if self._bits is None:
            raise ProtocolError("public memory has no contents yet (no store has run)")

    # -- checker-facing (counted where the protocol counts) ----------------

    def write(self, word) -> None:
        """Store a codeword. The first write fixes m; later writes must match it."""
        arr = as_bits(word, name="codeword")
        if self._bits is not None and arr.size != self._bits.size:
            raise ValueError(f"codeword length {arr.size} != established m={self._bits.size}")
        self._bits = arr.copy()

    def read_bits(self, positions) -> np.ndarray:
        """Serve individual codeword bits; each position served counts once."""
        self._require_initialized()
        idx = np.asarray(positions, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self._bits.size):
            raise IndexError(f"read positions out of range [0, {self._bits.size})")
        self.read_log += int(idx.size)
        return self._bits[idx].copy()

    def fetch_summaries(self, count: int) -> list[Fingerprint]:
        """Serve *count* summary fingerprints of the current contents."""
        self._require_initialized()
        if count < 1:
            raise ValueError(f"summary count must be >= 1, got {count}")
        self.summary_log += count
        snapshot = make_fingerprint(self._bits)
        # Identical physical copies of one snapshot; Fingerprint is immutable,
        # so sharing the pattern is observationally equivalent.
        return [snapshot] * count

    # -- adversary-facing (uncounted) ---------------------------------------

    def adversary_flip(self, positions) -> None:
        """Flip the given positions in place. Corruption, not checker traffic."""
        self._require_initialized()
        idx = np.asarray(positions, dtype=np.int64)
        if idx.size == 0:
            return
        if idx.min() < 0 or idx.max() >= self._bits.size:
            raise IndexError(f"flip positions out of range [0, {self._bits.size})")
        if np.unique(idx).size != idx.size:
            raise ValueError("flip positions must be distinct")
        self._bits[idx] ^= 1

    def adversary_overwrite(self, word) -> None:
        """Replace the whole contents. Corruption, not checker traffic."""
        self._require_initialized()
        arr = as_bits(word, name="replacement")
        if arr.size != self._bits.size:
            raise ValueError(f"replacement length {arr.size} != m={self._bits.size}")
        self._bits = arr.copy()


@dataclass
class CheckerState:
    """Private, reliable side of the checker: k stored fingerprints plus parameters."""

    code: LocallyDecodableCode
    epsilon: float
    k: int
    fingerprints: list[Fingerprint] = field(default_factory=list)
    last_retrieve: RetrieveLog | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.epsilon < 0.5:
            raise ValueError(f"epsilon must be in (0, 1/2), got {self.epsilon}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")

    @property
    def initialized(self) -> bool:
        return len(self.fingerprints) == self.k


def new_checker(code: LocallyDecodableCode, epsilon: float, k: int | None = None) -> CheckerState:
    """Fresh checker state; k defaults to required_k(epsilon, code distance)."""
    if k is None:
        k = required_k(epsilon, code.params.delta)
    return CheckerState(code=code, epsilon=epsilon, k=k)


def required_k(epsilon: float, delta: float) -> int:
    """Copies needed to push the all-accept probability below epsilon.

    A single comparison against memory at relative distance >= delta accepts
    with probability at most 1 - 2*delta + 2*delta^2, so
    k = ceil(log(epsilon) / log(1 - 2*delta + 2*delta^2)) suffices.
    """
    if not 0.0 < epsilon < 0.5:
        raise ValueError(f"epsilon must be in (0, 1/2), got {epsilon}")
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must be in (0, 1], got {delta}")
    base = 1.0 - 2.0 * delta + 2.0 * delta * delta
    if base >= 1.0:
        # delta == 1: a full complement is a global phase flip, invisible to the
        # comparison test; no finite k reaches the target error rate.
        raise ValueError(f"no finite k for delta={delta}: per-test accept probability is 1")
    ratio = math.log(epsilon) / math.log(base)
    # Nudge guards against float noise at exact-integer ratios; the true k is
    # any integer >= ratio, so rounding a hair down is always safe.
    return max(1, math.ceil(ratio - 1e-12))


def _verification_accepts(
    state: CheckerState, memory: PublicMemory, rng: np.random.Generator
) -> bool:
    """Fetch k summaries and test them pairwise against the stored fingerprints.

    Stored fingerprint i is tested against summary i (all honest copies are
    identical, so the pairing is arbitrary; a fixed one keeps runs
    deterministic). All k tests are sampled even after a rejection, which
    keeps the Monte Carlo statistics simple; the verdict is "reject" the
    moment any outcome is 1, within this same operation.
    """
    summaries = memory.fetch_summaries(state.k)
    outcomes = [
        sample_swap_test(stored, summary, rng)
        for stored, summary in zip(state.fingerprints, summaries)
    ]
    return all(o.bit == 0 for o in outcomes)


def store(
    state: CheckerState, memory: PublicMemory, msg, rng: np.random.Generator
) -> Verdict:
    """Handle a store request: verify current memory, then write the new codeword.

    The verification phase runs against the memory as found (and returns
    "buggy" with the state untouched if any test rejects); the very first
    store skips it since nothing has been stored yet. On success the checker
    writes E(msg), regenerates its k fingerprints locally from that codeword,
    and acknowledges with Answer(1).
    """
    bits = as_bits(msg, name="message")
    if bits.size != state.code.params.n:
        raise ValueError(f"message length {bits.size} != n={state.code.params.n}")

    if state.initialized:
        if not _verification_accepts(state, memory, rng):
            return Verdict.buggy()

    word = state.code.encode(bits)
    memory.write(word)
    # k identical copies; the object is immutable, so one allocation serves all
    fp = make_fingerprint(word)
    state.fingerprints = [fp] * state.k
    return Verdict.answer(1)


def retrieve(
    state: CheckerState, memory: PublicMemory, index: int, rng: np.random.Generator
) -> Verdict:
    """Handle a retrieve request for message bit *index* (0-based).

    Verification first: k summaries fetched and tested; any rejection yields
    "buggy" immediately, with no decode and no refresh. Otherwise one local
    decode runs through counted memory reads, the private fingerprints are
    replaced by k fresh summaries of the current memory, and the decoded bit
    is returned.
    """
    if not state.initialized:
        raise ProtocolError("retrieve before any store: checker holds no fingerprints")
    code = state.code
    if not 0 <= index < code.params.n:
        raise IndexError(f"bit index {index} out of range [0, {code.params.n})")

    if not _verification_accepts(state, memory, rng):
        state.last_retrieve = RetrieveLog(summaries_fetched=state.k, bits_read=0)
        return Verdict.buggy()

    plan = code.decode_query_plan(index, rng)
    answers = memory.read_bits(plan)
    decoded = code.decode_from_answers(index, plan, answers)

    state.fingerprints = memory.fetch_summaries(state.k)
    state.last_retrieve = RetrieveLog(summaries_fetched=2 * state.k, bits_read=len(plan))
    return Verdict.answer(decoded)


def qubits_per_summary(m: int) -> int:
    """Qubits in one fingerprint of an m-bit word: ceil(log2 m)."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    return (m - 1).bit_length()


def complexity_report(state: CheckerState, log: RetrieveLog | None = None) -> ComplexityReport:
    """Resource usage: private qubits held, and qubits served by the last retrieve.

    s = k * ceil(log2 m). t charges ceil(log2 m) qubits per summary served
    (testing and refresh copies alike) plus one qubit per codeword bit read
    for decoding. Recomputed from the log on every call.
    """
    if log is None:
        log = state.last_retrieve
    if log is None:
        raise ProtocolError("complexity report requires at least one completed retrieve")
    per_summary = qubits_per_summary(state.code.params.m)
    return ComplexityReport(
        s_qubits=state.k * per_summary,
        t_qubits_per_retrieve=log.summaries_fetched * per_summary + log.bits_read,
    )
