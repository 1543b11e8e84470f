"""Desk-scale simulator for a fingerprint-based online memory checker.

A checker relays store/retrieve requests between a user and an adversarial
public memory, holding only a few logarithmic-size summaries privately. The
package provides the encoder (a 2-query locally decodable code), the
comparison-test model with a statevector oracle backing it, the checker
protocol with honest resource accounting, adversary schedules, closed-form
detection bounds with brute-force verification, and a deterministic Monte
Carlo harness with a CLI.
"""

from .adversary import (
    AdversaryLog,
    AttackSchedule,
    FlipCount,
    IncrementalAttack,
    NoOpAttack,
    ScheduleError,
    SubstituteCodeword,
    apply_step,
    codeword_reachability_check,
)
from .analysis import (
    BoundReport,
    lemma1_bound,
    p_multi,
    p_single,
    verify_lemma2,
    verify_swap_oracle,
)
from .bits import (
    as_bits,
    bits_to_int,
    bits_to_str,
    hamming_distance,
    int_to_bits,
    random_bits,
)
from .checker import (
    CheckerState,
    ComplexityReport,
    ProtocolError,
    PublicMemory,
    RetrieveLog,
    Verdict,
    complexity_report,
    new_checker,
    required_k,
    retrieve,
    store,
)
from .code import CodeParams, HadamardCode, LocallyDecodableCode
from .fingerprint import (
    Fingerprint,
    SwapOutcome,
    amplitudes,
    cswap_statevector_prob,
    inner_product,
    make_fingerprint,
    sample_swap_test,
    swap_accept_prob,
)
from .harness import (
    ConfigError,
    ExperimentConfig,
    ExperimentResult,
    OpSpec,
    derive_trial_seed,
    run_experiment,
)

__version__ = "0.1.0"

__all__ = [
    "AdversaryLog",
    "AttackSchedule",
    "BoundReport",
    "CheckerState",
    "CodeParams",
    "ComplexityReport",
    "ConfigError",
    "ExperimentConfig",
    "ExperimentResult",
    "Fingerprint",
    "FlipCount",
    "HadamardCode",
    "IncrementalAttack",
    "LocallyDecodableCode",
    "NoOpAttack",
    "OpSpec",
    "ProtocolError",
    "PublicMemory",
    "RetrieveLog",
    "ScheduleError",
    "SubstituteCodeword",
    "SwapOutcome",
    "Verdict",
    "amplitudes",
    "apply_step",
    "as_bits",
    "bits_to_int",
    "bits_to_str",
    "codeword_reachability_check",
    "complexity_report",
    "cswap_statevector_prob",
    "derive_trial_seed",
    "hamming_distance",
    "inner_product",
    "int_to_bits",
    "lemma1_bound",
    "make_fingerprint",
    "new_checker",
    "p_multi",
    "p_single",
    "random_bits",
    "required_k",
    "retrieve",
    "run_experiment",
    "sample_swap_test",
    "store",
    "swap_accept_prob",
    "verify_lemma2",
    "verify_swap_oracle",
    "__version__",
]
