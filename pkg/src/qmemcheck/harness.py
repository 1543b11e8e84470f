"""Config-driven Monte Carlo experiment runner.

A run executes N independent checker sessions against a public memory under a
scheduled adversary, aggregates verdicts into rates, attaches the matching
analytic bounds, and emits structured results. Everything downstream of the
(config, seed) pair is deterministic: per-trial RNGs come from counter-mode
hashing of the master seed, and the JSON results document is byte-identical
across runs. Wall-clock facts live in a separate metadata sidecar so they
never break that guarantee.

The default session script is one store followed by alternating
(adversary step, retrieve) rounds; an explicit op list can replace it.
"""

from __future__ import annotations

import csv
import datetime
import hashlib
import io
import json
import platform
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .adversary import (
    POSITION_POLICIES,
    AdversaryLog,
    AttackSchedule,
    FlipCount,
    IncrementalAttack,
    NoOpAttack,
    SubstituteCodeword,
    apply_step,
    codeword_reachability_check,
)
from .analysis import BoundReport, lemma1_bound, p_single
from .bits import as_bits, bits_to_str, random_bits
from .checker import (
    PublicMemory,
    complexity_report,
    new_checker,
    retrieve,
    store,
)
from .code import MAX_HADAMARD_N, HadamardCode

RESULTS_SCHEMA = "qmemcheck.results.v1"

OP_KINDS = ("store", "attack", "retrieve")
ATTACK_KINDS = ("noop", "substitute", "flip_count", "incremental")
INDEX_POLICIES = ("random", "cycle")


class ConfigError(ValueError):
    """Invalid experiment configuration; carries the offending field's path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


def _is_int(value) -> bool:
    # bool is an int subclass; a config saying trials=true is a mistake, not a 1
    return isinstance(value, int) and not isinstance(value, bool)


def _is_bitstring(value) -> bool:
    return isinstance(value, str) and len(value) > 0 and set(value) <= {"0", "1"}


@dataclass(frozen=True)
class OpSpec:
    """One scripted operation: a store, an adversary step, or a retrieve.

    message applies to store ops only (None defers to the config-level
    message); index applies to retrieve ops only (None defers to the
    config-level retrieve_index).
    """

    op: str
    message: str | None = None
    index: int | str | None = None

    def __post_init__(self) -> None:
        if self.op not in OP_KINDS:
            raise ConfigError("op", f"unknown op {self.op!r}, expected one of {OP_KINDS}")
        if self.op != "store" and self.message is not None:
            raise ConfigError("message", f"message only applies to store ops, not {self.op!r}")
        if self.op != "retrieve" and self.index is not None:
            raise ConfigError("index", f"index only applies to retrieve ops, not {self.op!r}")

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"op": self.op}
        if self.message is not None:
            out["message"] = self.message
        if self.index is not None:
            out["index"] = self.index
        return out


def _op_from_dict(raw, path: str) -> OpSpec:
    if not isinstance(raw, dict):
        raise ConfigError(path, f"expected an object, got {type(raw).__name__}")
    unknown = set(raw) - {"op", "message", "index"}
    if unknown:
        raise ConfigError(path, f"unknown keys {sorted(unknown)}")
    if "op" not in raw:
        raise ConfigError(path, "missing required key 'op'")
    op = raw["op"]
    if op not in OP_KINDS:
        raise ConfigError(f"{path}.op", f"unknown op {op!r}, expected one of {OP_KINDS}")
    message = raw.get("message")
    if message is not None and not isinstance(message, str):
        raise ConfigError(f"{path}.message", "expected a string")
    index = raw.get("index")
    if index is not None and not (_is_int(index) or index in INDEX_POLICIES):
        raise ConfigError(f"{path}.index", f"expected an integer or one of {INDEX_POLICIES}")
    try:
        return OpSpec(op=op, message=message, index=index)
    except ConfigError as exc:
        raise ConfigError(f"{path}.{exc.path}", str(exc).split(": ", 1)[1]) from None


def _attack_to_dict(schedule: AttackSchedule) -> dict[str, Any]:
    if isinstance(schedule, NoOpAttack):
        return {"kind": "noop"}
    if isinstance(schedule, SubstituteCodeword):
        return {"kind": "substitute", "target": schedule.target}
    if isinstance(schedule, FlipCount):
        return {
            "kind": "flip_count",
            "bits_per_step": schedule.bits_per_step,
            "policy": schedule.policy,
        }
    if isinstance(schedule, IncrementalAttack):
        return {
            "kind": "incremental",
            "deltas": list(schedule.deltas),
            "policy": schedule.policy,
            "require_reach": schedule.require_reach,
        }
    raise TypeError(f"unknown schedule type {type(schedule).__name__}")


def _attack_from_dict(raw, path: str) -> AttackSchedule:
    if not isinstance(raw, dict):
        raise ConfigError(path, f"expected an object, got {type(raw).__name__}")
    kind = raw.get("kind")
    if kind not in ATTACK_KINDS:
        raise ConfigError(f"{path}.kind", f"unknown attack kind {kind!r}, expected one of {ATTACK_KINDS}")

    allowed = {
        "noop": {"kind"},
        "substitute": {"kind", "target"},
        "flip_count": {"kind", "bits_per_step", "policy"},
        "incremental": {"kind", "deltas", "policy", "require_reach"},
    }[kind]
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(path, f"unknown keys {sorted(unknown)} for attack kind {kind!r}")

    try:
        if kind == "noop":
            return NoOpAttack()
        if kind == "substitute":
            target = raw.get("target", "random")
            if not isinstance(target, str):
                raise ConfigError(f"{path}.target", "expected a string")
            return SubstituteCodeword(target=target)
        if kind == "flip_count":
            bits = raw.get("bits_per_step")
            if not _is_int(bits):
                raise ConfigError(f"{path}.bits_per_step", "expected an integer")
            return FlipCount(bits_per_step=bits, policy=raw.get("policy", "uniform"))
        deltas = raw.get("deltas")
        if not isinstance(deltas, (list, tuple)) or not all(
            isinstance(d, (int, float)) and not isinstance(d, bool) for d in deltas
        ):
            raise ConfigError(f"{path}.deltas", "expected a list of numbers")
        require_reach = raw.get("require_reach", False)
        if not isinstance(require_reach, bool):
            raise ConfigError(f"{path}.require_reach", "expected a boolean")
        return IncrementalAttack(
            deltas=tuple(float(d) for d in deltas),
            policy=raw.get("policy", "uniform"),
            require_reach=require_reach,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        # schedule dataclasses validate themselves; re-raise with the config path
        raise ConfigError(path, str(exc)) from None


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run needs; fully validated on construction.

    k=None means "derive from epsilon and the code distance". script=None
    means the default script: one store, then `steps` rounds of
    (attack, retrieve); steps defaults to the schedule's intrinsic step count
    (1 for schedules without one).
    """

    n: int
    delta_dec: float = 0.125
    epsilon: float = 0.01
    k: int | None = None
    attack: AttackSchedule = field(default_factory=NoOpAttack)
    steps: int | None = None
    retrieve_index: int | str = "random"
    message: str = "random"
    script: tuple[OpSpec, ...] | None = None
    trials: int = 1000
    seed: int = 0
    record_trials: bool = False
    out_dir: str | None = None

    def __post_init__(self) -> None:
        if not _is_int(self.n) or not 1 <= self.n <= MAX_HADAMARD_N:
            raise ConfigError("n", f"expected an integer in [1, {MAX_HADAMARD_N}], got {self.n!r}")
        if not isinstance(self.delta_dec, (int, float)) or not 0.0 <= self.delta_dec < 0.25:
            raise ConfigError("delta_dec", f"expected a number in [0, 0.25), got {self.delta_dec!r}")
        if not isinstance(self.epsilon, (int, float)) or not 0.0 < self.epsilon < 0.5:
            raise ConfigError("epsilon", f"expected a number in (0, 1/2), got {self.epsilon!r}")
        if self.k is not None and (not _is_int(self.k) or self.k < 1):
            raise ConfigError("k", f"expected an integer >= 1 or null, got {self.k!r}")
        if self.steps is not None and (not _is_int(self.steps) or self.steps < 0):
            raise ConfigError("steps", f"expected an integer >= 0 or null, got {self.steps!r}")
        if not _is_int(self.trials) or self.trials < 1:
            raise ConfigError("trials", f"expected an integer >= 1, got {self.trials!r}")
        if not _is_int(self.seed) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed", f"expected an integer in [0, 2^64), got {self.seed!r}")
        if not isinstance(self.record_trials, bool):
            raise ConfigError("record_trials", f"expected a boolean, got {self.record_trials!r}")
        if self.out_dir is not None and not isinstance(self.out_dir, str):
            raise ConfigError("out_dir", f"expected a string or null, got {self.out_dir!r}")

        if not (self.retrieve_index in INDEX_POLICIES or _is_int(self.retrieve_index)):
            raise ConfigError(
                "retrieve_index", f"expected an integer or one of {INDEX_POLICIES}, got {self.retrieve_index!r}"
            )
        if _is_int(self.retrieve_index) and not 0 <= self.retrieve_index < self.n:
            raise ConfigError("retrieve_index", f"index {self.retrieve_index} out of range [0, {self.n})")

        self._check_message(self.message, "message")

        if isinstance(self.attack, SubstituteCodeword) and self.attack.target != "random":
            if not _is_bitstring(self.attack.target) or len(self.attack.target) != self.n:
                raise ConfigError(
                    "attack.target", f"expected 'random' or a {self.n}-bit string, got {self.attack.target!r}"
                )
        if isinstance(self.attack, IncrementalAttack) and self.attack.require_reach:
            params = HadamardCode(self.n, delta_dec=self.delta_dec).params
            if not codeword_reachability_check(self.attack, params):
                raise ConfigError(
                    "attack.deltas",
                    f"rounded flip total never reaches the code distance {params.delta} for m={params.m}",
                )

        self._check_script(self.build_script())

    def _check_message(self, message, path: str) -> None:
        if message == "random":
            return
        if not _is_bitstring(message) or len(message) != self.n:
            raise ConfigError(path, f"expected 'random' or a {self.n}-bit string, got {message!r}")

    def _check_script(self, script: tuple[OpSpec, ...]) -> None:
        where = "script" if self.script is not None else "steps"
        seen_store = False
        attack_ops = 0
        for i, op in enumerate(script):
            if op.op == "store":
                seen_store = True
                if op.message is not None:
                    self._check_message(op.message, f"script[{i}].message")
            elif not seen_store:
                raise ConfigError(f"script[{i}]", f"{op.op} before the first store")
            elif op.op == "attack":
                attack_ops += 1
            elif op.index is not None and _is_int(op.index) and not 0 <= op.index < self.n:
                raise ConfigError(f"script[{i}].index", f"index {op.index} out of range [0, {self.n})")
        intrinsic = self.attack.intrinsic_steps
        if intrinsic is not None and attack_ops > intrinsic:
            raise ConfigError(
                where, f"schedule provides {intrinsic} attack step(s) but the script uses {attack_ops}"
            )

    def build_script(self) -> tuple[OpSpec, ...]:
        """The op sequence a session runs: explicit script, or the default shape."""
        if self.script is not None:
            return self.script
        steps = self.steps
        if steps is None:
            steps = self.attack.intrinsic_steps or 1
        ops = [OpSpec(op="store")]
        for _ in range(steps):
            ops.append(OpSpec(op="attack"))
            ops.append(OpSpec(op="retrieve"))
        return tuple(ops)

    def resolved_k(self) -> int:
        if self.k is not None:
            return self.k
        code = HadamardCode(self.n, delta_dec=self.delta_dec)
        return new_checker(code, self.epsilon).k

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "delta_dec": self.delta_dec,
            "epsilon": self.epsilon,
            "k": "auto" if self.k is None else self.k,
            "attack": _attack_to_dict(self.attack),
            "steps": self.steps,
            "retrieve_index": self.retrieve_index,
            "message": self.message,
            "script": None if self.script is None else [op.to_dict() for op in self.script],
            "trials": self.trials,
            "seed": self.seed,
            "record_trials": self.record_trials,
            "out_dir": self.out_dir,
        }

    @classmethod
    def from_dict(cls, raw) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config", f"expected an object, got {type(raw).__name__}")
        known = {
            "n", "delta_dec", "epsilon", "k", "attack", "steps", "retrieve_index",
            "message", "script", "trials", "seed", "record_trials", "out_dir",
        }
        unknown = set(raw) - known
        if unknown:
            raise ConfigError("config", f"unknown keys {sorted(unknown)}")
        if "n" not in raw:
            raise ConfigError("n", "missing required key")

        kwargs: dict[str, Any] = {"n": raw["n"]}
        if "delta_dec" in raw:
            kwargs["delta_dec"] = raw["delta_dec"]
        if "epsilon" in raw:
            kwargs["epsilon"] = raw["epsilon"]
        if "k" in raw:
            k = raw["k"]
            kwargs["k"] = None if k in (None, "auto") else k
        if "attack" in raw:
            kwargs["attack"] = _attack_from_dict(raw["attack"], "attack")
        if "steps" in raw:
            kwargs["steps"] = raw["steps"]
        if "retrieve_index" in raw:
            kwargs["retrieve_index"] = raw["retrieve_index"]
        if "message" in raw:
            kwargs["message"] = raw["message"]
        if "script" in raw and raw["script"] is not None:
            if not isinstance(raw["script"], list):
                raise ConfigError("script", f"expected a list, got {type(raw['script']).__name__}")
            kwargs["script"] = tuple(
                _op_from_dict(op, f"script[{i}]") for i, op in enumerate(raw["script"])
            )
        if "trials" in raw:
            kwargs["trials"] = raw["trials"]
        if "seed" in raw:
            kwargs["seed"] = raw["seed"]
        if "record_trials" in raw:
            kwargs["record_trials"] = raw["record_trials"]
        if "out_dir" in raw:
            kwargs["out_dir"] = raw["out_dir"]
        return cls(**kwargs)

    def with_overrides(
        self,
        seed: int | None = None,
        trials: int | None = None,
        out_dir: str | None = None,
    ) -> "ExperimentConfig":
        """Copy with seed/trials/out_dir replaced (CLI and environment overrides)."""
        out = self
        if seed is not None:
            out = replace(out, seed=seed)
        if trials is not None:
            out = replace(out, trials=trials)
        if out_dir is not None:
            out = replace(out, out_dir=out_dir)
        return out


def derive_trial_seed(master_seed: int, trial_index: int) -> int:
    """Per-trial RNG seed: counter-mode hash of (master seed, trial index).

    SHA-256 over a domain tag plus both values as 8-byte little-endian words,
    truncated to 128 bits. Distinct indices hash distinct inputs, so seeds are
    (cryptographically) collision-free within a run, and the derivation is
    platform-independent.
    """
    if not 0 <= master_seed < 2**64:
        raise ValueError(f"master seed must be in [0, 2^64), got {master_seed}")
    if not 0 <= trial_index < 2**64:
        raise ValueError(f"trial index must be in [0, 2^64), got {trial_index}")
    digest = hashlib.sha256(
        b"qmemcheck-trial"
        + master_seed.to_bytes(8, "little")
        + trial_index.to_bytes(8, "little")
    ).digest()
    return int.from_bytes(digest[:16], "little")


@dataclass
class _TrialOutcome:
    buggy: bool = False
    false_buggy: bool = False
    answers: int = 0
    correct: int = 0
    reached: list[bool] = field(default_factory=list)
    accepted: list[bool] = field(default_factory=list)
    verdicts: list[str] = field(default_factory=list)


def _resolve_index(spec, n: int, cycle_state: list[int], rng: np.random.Generator) -> int:
    if spec == "random":
        return int(rng.integers(n))
    if spec == "cycle":
        idx = cycle_state[0] % n
        cycle_state[0] += 1
        return idx
    return int(spec)


def _draw_distinct_message(current: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    while True:
        candidate = random_bits(n, rng)
        if not np.array_equal(candidate, current):
            return candidate


def _run_trial(
    config: ExperimentConfig,
    code: HadamardCode,
    script: Sequence[OpSpec],
    n_retrieves: int,
    rng: np.random.Generator,
) -> _TrialOutcome:
    out = _TrialOutcome(reached=[False] * n_retrieves, accepted=[False] * n_retrieves)
    state = new_checker(code, config.epsilon, config.k)
    memory = PublicMemory()
    log: AdversaryLog | None = None
    current_msg: np.ndarray | None = None
    attack_step = 0
    retrieve_pos = 0
    cycle_state = [0]

    def memory_is_honest() -> bool:
        # "false buggy" means rejecting a memory that matches the stored
        # codeword; the adversary-log baseline is that codeword verbatim
        return log is not None and np.array_equal(memory.bits, log.baseline)

    for op in script:
        if op.op == "store":
            msg_spec = op.message if op.message is not None else config.message
            msg = random_bits(config.n, rng) if msg_spec == "random" else as_bits(msg_spec)
            verdict = store(state, memory, msg, rng)
            if verdict.is_buggy:
                out.buggy = True
                out.false_buggy = memory_is_honest()
                out.verdicts.append("store:buggy")
                break
            current_msg = msg
            log = AdversaryLog(memory.bits)
            out.verdicts.append(f"store:{verdict.bit}")
        elif op.op == "attack":
            schedule = config.attack
            if isinstance(schedule, SubstituteCodeword) and schedule.target == "random":
                assert current_msg is not None
                target = _draw_distinct_message(current_msg, config.n, rng)
                schedule = SubstituteCodeword(target=bits_to_str(target))
            assert log is not None
            apply_step(schedule, attack_step, memory, code, log, rng)
            attack_step += 1
        else:
            idx_spec = op.index if op.index is not None else config.retrieve_index
            idx = _resolve_index(idx_spec, config.n, cycle_state, rng)
            out.reached[retrieve_pos] = True
            verdict = retrieve(state, memory, idx, rng)
            if verdict.is_buggy:
                out.buggy = True
                out.false_buggy = memory_is_honest()
                out.verdicts.append("retrieve:buggy")
                break
            out.accepted[retrieve_pos] = True
            retrieve_pos += 1
            out.answers += 1
            assert current_msg is not None
            out.correct += int(verdict.bit == int(current_msg[idx]))
            out.verdicts.append(f"retrieve:{verdict.bit}")
    return out


def _probe_complexity(config: ExperimentConfig, code: HadamardCode) -> dict[str, int]:
    """Resource counts measured on a live honest session, not recomputed formulas."""
    rng = np.random.default_rng(derive_trial_seed(config.seed, config.trials))
    state = new_checker(code, config.epsilon, config.k)
    memory = PublicMemory()
    store(state, memory, "0" * config.n, rng)
    retrieve(state, memory, 0, rng)
    report = complexity_report(state)
    return {"s_qubits": report.s_qubits, "t_qubits_per_retrieve": report.t_qubits_per_retrieve}


def _attach_bounds(
    config: ExperimentConfig, code: HadamardCode, aggregates: dict[str, Any]
) -> list[BoundReport]:
    """Analytic predictions matching the default script, compared 4 sigma wide.

    Sigma is computed from the analytic rate, so a prediction of exactly 0 or
    1 demands an exact empirical match. Explicit scripts get no attack-shaped
    bounds; their structure is the caller's, not the default one these
    formulas describe.
    """
    k = config.resolved_k()
    n_trials = config.trials
    rates = aggregates["rates"]
    reports: list[BoundReport] = []

    def band(p: float) -> float:
        return 4.0 * float(np.sqrt(p * (1.0 - p) / n_trials))

    if isinstance(config.attack, NoOpAttack):
        correctness = rates["correctness"]
        ok = correctness == 1.0 and rates["buggy"] == 0.0 and rates["false_buggy"] == 0.0
        reports.append(
            BoundReport(
                name="honest_completeness",
                analytic={"correctness": 1.0, "buggy": 0.0},
                empirical=correctness,
                samples=n_trials,
                std_error=0.0,
                tolerance=0.0,
                passed=ok,
                details={"buggy_rate": rates["buggy"], "false_buggy_rate": rates["false_buggy"]},
            )
        )

    if config.script is not None:
        return reports

    if isinstance(config.attack, SubstituteCodeword):
        bound_accept = lemma1_bound(code.params.delta, k)
        # distinct codewords here sit at exactly half distance: inner product 0
        exact_accept = 0.5**k
        detect_floor = 1.0 - bound_accept
        tol = band(1.0 - exact_accept)
        reports.append(
            BoundReport(
                name="substitution_detection",
                analytic={
                    "detect_lower_bound": detect_floor,
                    "detect_exact_orthogonal": 1.0 - exact_accept,
                },
                empirical=rates["buggy"],
                samples=n_trials,
                std_error=tol / 4.0,
                tolerance=tol,
                passed=rates["buggy"] >= detect_floor - tol,
                details={"k": k, "all_accept_bound": bound_accept},
            )
        )

    if isinstance(config.attack, IncrementalAttack):
        m = code.params.m
        counts = config.attack.step_flip_counts(m)
        steps = config.steps if config.steps is not None else len(counts)
        used = counts[:steps]
        # flips land on whole bits, so the analytic per-step accept uses the
        # rounded flip fractions actually applied, not the requested deltas
        per_step = [p_single(c / m) ** k for c in used]
        analytic_all = float(np.prod(per_step)) if per_step else 1.0
        tol = band(analytic_all)
        reports.append(
            BoundReport(
                name="incremental_all_accept",
                analytic={"all_accept": analytic_all},
                empirical=rates["all_accept"],
                samples=n_trials,
                std_error=tol / 4.0,
                tolerance=tol,
                passed=abs(rates["all_accept"] - analytic_all) <= tol,
                details={
                    "k": k,
                    "flip_counts": list(used),
                    "per_step_accept": per_step,
                },
            )
        )

    if isinstance(config.attack, FlipCount):
        steps_info = aggregates["per_step_accept"]
        if steps_info:
            m = code.params.m
            d = min(config.attack.bits_per_step, m) / m
            analytic_first = p_single(d) ** k
            first = steps_info[0]
            reached = first["reached"]
            rate = first["rate"]
            tol = 4.0 * float(np.sqrt(analytic_first * (1.0 - analytic_first) / max(reached, 1)))
            reports.append(
                BoundReport(
                    name="first_step_accept",
                    analytic={"accept": analytic_first},
                    empirical=rate,
                    samples=reached,
                    std_error=tol / 4.0,
                    tolerance=tol,
                    passed=rate is not None and abs(rate - analytic_first) <= tol,
                    details={"k": k, "flip_fraction": d},
                )
            )

    return reports


@dataclass
class ExperimentResult:
    """Aggregated run outcome plus the exact config that produced it.

    aggregates (and the results JSON built from them) are a pure function of
    (config, seed); run_meta holds the wall-clock and platform facts and is
    written to its own sidecar file.
    """

    config: ExperimentConfig
    aggregates: dict[str, Any]
    trial_verdicts: list[list[str]] | None
    run_meta: dict[str, Any]

    def result_document(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "schema": RESULTS_SCHEMA,
            "config": self.config.to_dict(),
            "aggregates": self.aggregates,
        }
        if self.trial_verdicts is not None:
            doc["trial_verdicts"] = self.trial_verdicts
        return doc

    def aggregates_json(self) -> str:
        return canonical_json(self.aggregates)

    def results_json(self) -> str:
        return canonical_json(self.result_document())

    def render_csv(self) -> str:
        """One flat table: metric, step, numerator, denominator, value."""
        agg = self.aggregates
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["metric", "step", "numerator", "denominator", "value"])
        counts = agg["counts"]
        sessions = agg["sessions"]
        n_trials = agg["trials"]
        writer.writerow(
            ["correctness", "", counts["answers_correct"], counts["answers_total"], agg["rates"]["correctness"]]
        )
        for name, num in (
            ("buggy", sessions["buggy"]),
            ("false_buggy", sessions["false_buggy"]),
            ("all_accept", sessions["all_accept"]),
        ):
            writer.writerow([name, "", num, n_trials, agg["rates"][name]])
        for entry in agg["per_step_accept"]:
            writer.writerow(
                ["step_accept", entry["step"], entry["accepted"], entry["reached"],
                 "" if entry["rate"] is None else entry["rate"]]
            )
        writer.writerow(["s_qubits", "", "", "", agg["complexity"]["s_qubits"]])
        writer.writerow(["t_qubits_per_retrieve", "", "", "", agg["complexity"]["t_qubits_per_retrieve"]])
        for bound in agg["bounds"]:
            writer.writerow(
                ["bound:" + bound["name"], "", "", "", "pass" if bound["passed"] else "FAIL"]
            )
        return buf.getvalue()

    def write_outputs(self, out_dir) -> dict[str, Path]:
        """Write results.json, results.csv, and the run_meta.json sidecar."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "json": out / "results.json",
            "csv": out / "results.csv",
            "meta": out / "run_meta.json",
        }
        paths["json"].write_text(self.results_json())
        paths["csv"].write_text(self.render_csv())
        paths["meta"].write_text(canonical_json(self.run_meta))
        return paths


def canonical_json(payload) -> str:
    """Deterministic JSON: sorted keys, no whitespace drift, no NaN, one trailing newline."""
    return json.dumps(payload, sort_keys=True, separators=(",", ": "), allow_nan=False) + "\n"


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Execute config.trials independent sessions and aggregate their verdicts.

    Trials are isolated: each gets its own memory, checker state, adversary
    log, and RNG seeded by derive_trial_seed, so the aggregate is independent
    of execution order. A session ends at its first "buggy" verdict.
    """
    started = datetime.datetime.now(datetime.timezone.utc)
    t0 = time.monotonic()

    code = HadamardCode(config.n, delta_dec=config.delta_dec)
    script = config.build_script()
    n_retrieves = sum(1 for op in script if op.op == "retrieve")

    buggy = 0
    false_buggy = 0
    all_accept = 0
    answers_total = 0
    answers_correct = 0
    reached = [0] * n_retrieves
    accepted = [0] * n_retrieves
    verdict_streams: list[list[str]] | None = [] if config.record_trials else None

    for i in range(config.trials):
        rng = np.random.default_rng(derive_trial_seed(config.seed, i))
        outcome = _run_trial(config, code, script, n_retrieves, rng)
        buggy += outcome.buggy
        false_buggy += outcome.false_buggy
        all_accept += not outcome.buggy
        answers_total += outcome.answers
        answers_correct += outcome.correct
        for pos in range(n_retrieves):
            reached[pos] += outcome.reached[pos]
            accepted[pos] += outcome.accepted[pos]
        if verdict_streams is not None:
            verdict_streams.append(outcome.verdicts)

    n_trials = config.trials
    per_step = [
        {
            "step": pos,
            "reached": reached[pos],
            "accepted": accepted[pos],
            "rate": (accepted[pos] / reached[pos]) if reached[pos] else None,
        }
        for pos in range(n_retrieves)
    ]
    aggregates: dict[str, Any] = {
        "trials": n_trials,
        "k": config.resolved_k(),
        "sessions": {
            "buggy": buggy,
            "clean": n_trials - buggy,
            "false_buggy": false_buggy,
            "all_accept": all_accept,
        },
        "counts": {
            "answers_total": answers_total,
            "answers_correct": answers_correct,
        },
        "rates": {
            # no answers means no answer was ever wrong; answers_total disambiguates
            "correctness": (answers_correct / answers_total) if answers_total else 1.0,
            "buggy": buggy / n_trials,
            "false_buggy": false_buggy / n_trials,
            "all_accept": all_accept / n_trials,
        },
        "std_errors": {
            "buggy": _std_error(buggy / n_trials, n_trials),
            "all_accept": _std_error(all_accept / n_trials, n_trials),
        },
        "per_step_accept": per_step,
        "complexity": _probe_complexity(config, code),
    }
    aggregates["bounds"] = [r.to_dict() for r in _attach_bounds(config, code, aggregates)]

    run_meta = {
        "started_utc": started.isoformat(),
        "elapsed_seconds": time.monotonic() - t0,
        "python": platform.python_version(),
        "platform": platform.platform(),
        "numpy": np.__version__,
    }
    result = ExperimentResult(
        config=config,
        aggregates=aggregates,
        trial_verdicts=verdict_streams,
        run_meta=run_meta,
    )
    if config.out_dir is not None:
        result.write_outputs(config.out_dir)
    return result


def _std_error(p_hat: float, n: int) -> float:
    return float(np.sqrt(p_hat * (1.0 - p_hat) / n))
