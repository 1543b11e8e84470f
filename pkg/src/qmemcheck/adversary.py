"""Scripted corruption strategies applied to public memory between user operations.

One adversary step runs between consecutive user operations: after the
checker's fingerprint refresh, before the next retrieve. Under that placement
each retrieve compares the memory against fingerprints of the previous memory
state, so a step flipping a fraction delta of fresh positions is accepted per
comparison with probability exactly 1 - 2*delta + 2*delta^2.

Schedules are immutable config values; all per-session mutable bookkeeping
(which positions have flipped, distance from the stored codeword) lives in
AdversaryLog. Strategies are information-theoretic scripts: they never observe
checker verdicts or measurement outcomes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .bits import as_bits, hamming_distance
from .checker import PublicMemory
from .code import CodeParams, LocallyDecodableCode

POSITION_POLICIES = ("uniform", "prefix")


class ScheduleError(ValueError):
    """A schedule step cannot be applied (exhausted positions, bad step index, ...)."""


def round_half_up(x: float) -> int:
    """Nearest integer, ties away from zero for nonnegative x. The rounding rule
    for converting per-step flip fractions into whole bit counts."""
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class NoOpAttack:
    """Leaves the memory untouched; a placeholder step for honest runs."""

    @property
    def intrinsic_steps(self) -> int | None:
        return None  # any number of steps; driven by the operation script


@dataclass(frozen=True)
class SubstituteCodeword:
    """Overwrite the memory with the codeword of another message, in one step.

    target is the message as a bitstring, or "random" for a per-session
    uniform draw distinct from the currently stored message (resolved by the
    harness before the step applies).
    """

    target: str = "random"

    @property
    def intrinsic_steps(self) -> int | None:
        return 1


@dataclass(frozen=True)
class FlipCount:
    """Flip a fixed number of positions each step.

    policy "uniform" samples the positions without replacement per step
    (independent across steps, so later steps may undo earlier flips);
    "prefix" deterministically flips the first bits_per_step positions.
    """

    bits_per_step: int
    policy: str = "uniform"

    def __post_init__(self) -> None:
        if self.bits_per_step < 0:
            raise ValueError(f"bits_per_step must be >= 0, got {self.bits_per_step}")
        if self.policy not in POSITION_POLICIES:
            raise ValueError(f"unknown position policy {self.policy!r}")

    @property
    def intrinsic_steps(self) -> int | None:
        return None


@dataclass(frozen=True)
class IncrementalAttack:
    """Drift toward another codeword: step i flips round(deltas[i] * m) fresh positions.

    Positions flipped across steps are pairwise disjoint (a flipped bit is
    never flipped back), so after step i the distance from the original
    codeword is exactly the running sum of per-step flip counts. policy
    "uniform" samples fresh positions uniformly; "prefix" takes the lowest
    unflipped indices, for reproducible unit tests. If require_reach is set,
    config validation rejects the schedule unless the rounded flip total
    covers the code distance (see codeword_reachability_check).
    """

    deltas: tuple[float, ...]
    policy: str = "uniform"
    require_reach: bool = False

    def __post_init__(self) -> None:
        if not self.deltas:
            raise ValueError("incremental schedule needs at least one step")
        for i, d in enumerate(self.deltas):
            if not 0.0 <= d <= 1.0:
                raise ValueError(f"deltas[{i}] must be in [0, 1], got {d}")
        if sum(self.deltas) > 1.0 + 1e-9:
            raise ValueError(f"sum of deltas must be <= 1, got {sum(self.deltas)}")
        if self.policy not in POSITION_POLICIES:
            raise ValueError(f"unknown position policy {self.policy!r}")

    @property
    def intrinsic_steps(self) -> int | None:
        return len(self.deltas)

    def step_flip_counts(self, m: int) -> list[int]:
        """Whole-bit flip counts per step for codeword length m."""
        return [round_half_up(d * m) for d in self.deltas]


AttackSchedule = Union[NoOpAttack, SubstituteCodeword, FlipCount, IncrementalAttack]


class AdversaryLog:
    """Per-session corruption bookkeeping: flipped positions per step, distance tracking."""

    def __init__(self, baseline) -> None:
        self.baseline = as_bits(baseline, name="baseline").copy()
        self.step_positions: list[np.ndarray] = []

    @property
    def steps_applied(self) -> int:
        return len(self.step_positions)

    def flipped_union(self) -> np.ndarray:
        """All positions touched so far (sorted, without duplicates)."""
        if not self.step_positions:
            return np.empty(0, dtype=np.int64)
        return np.unique(np.concatenate(self.step_positions))

    def record_step(self, positions) -> None:
        self.step_positions.append(np.asarray(positions, dtype=np.int64))

    def relative_distance(self, memory: PublicMemory) -> float:
        """Current Hamming distance from the original codeword, as a fraction of m.

        Recomputed from the live contents, never cached."""
        return hamming_distance(self.baseline, memory.bits) / self.baseline.size


def _unflipped_positions(log: AdversaryLog, m: int) -> np.ndarray:
    touched = log.flipped_union()
    keep = np.ones(m, dtype=bool)
    keep[touched] = False
    return np.flatnonzero(keep)


def apply_step(
    schedule: AttackSchedule,
    step: int,
    memory: PublicMemory,
    code: LocallyDecodableCode,
    log: AdversaryLog,
    rng: np.random.Generator,
) -> None:
    """Apply step *step* (0-based) of the schedule, mutating memory and updating the log."""
    intrinsic = schedule.intrinsic_steps
    if step < 0 or (intrinsic is not None and step >= intrinsic):
        raise ScheduleError(f"step {step} out of range for schedule with {intrinsic} steps")
    m = memory.m

    if isinstance(schedule, NoOpAttack):
        log.record_step(np.empty(0, dtype=np.int64))
        return

    if isinstance(schedule, SubstituteCodeword):
        if schedule.target == "random":
            raise ScheduleError(
                'unresolved "random" substitution target; resolve it to concrete bits first'
            )
        before = memory.bits.copy()
        word = code.encode(as_bits(schedule.target, name="target"))
        memory.adversary_overwrite(word)
        log.record_step(np.flatnonzero(before != word))
        return

    if isinstance(schedule, FlipCount):
        d = min(schedule.bits_per_step, m)
        if schedule.policy == "prefix":
            positions = np.arange(d, dtype=np.int64)
        else:
            positions = rng.choice(m, size=d, replace=False)
        memory.adversary_flip(positions)
        log.record_step(positions)
        return

    if isinstance(schedule, IncrementalAttack):
        d = schedule.step_flip_counts(m)[step]
        fresh = _unflipped_positions(log, m)
        if d > fresh.size:
            raise ScheduleError(
                f"step {step} needs {d} fresh positions but only {fresh.size} remain unflipped"
            )
        if schedule.policy == "prefix":
            positions = fresh[:d]
        else:
            positions = rng.choice(fresh, size=d, replace=False) if d else fresh[:0]
        memory.adversary_flip(positions)
        log.record_step(positions)
        return

    raise TypeError(f"unknown schedule type {type(schedule).__name__}")


def codeword_reachability_check(schedule: IncrementalAttack, params: CodeParams) -> bool:
    """Whether the rounded per-step flips add up to the code distance.

    True iff sum_i round(deltas[i] * m) >= delta * m, i.e. the scheduled
    drift is large enough to have turned one codeword into another.
    """
    if not isinstance(schedule, IncrementalAttack):
        raise TypeError("reachability is defined for incremental schedules only")
    total = sum(schedule.step_flip_counts(params.m))
    return total >= params.delta * params.m - 1e-9
