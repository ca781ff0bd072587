"""Minimal-HMM construction from process models via joint non-negative
tensor/matrix factorization with stability-based model selection."""

from ntfhmm._core import (
    DivergenceError,
    FactorSet,
    Hmm,
    JointStats,
    ProcessModel,
    RankDiagnostics,
    RunTimeline,
    SelectionReport,
    ValidationError,
    __version__,
    accumulate,
    build_rate_matrix,
    distance,
    enumerate_states,
    estimate_reference_hmm,
    expm,
    factorize,
    factors_to_hmm,
    mean_durations,
    nmi,
    objective,
    perturb,
    sample_state_sequences,
    select_rank,
    simulate_ensemble,
    transition_matrix,
)

__all__ = [
    "DivergenceError",
    "FactorSet",
    "Hmm",
    "JointStats",
    "ProcessModel",
    "RankDiagnostics",
    "RunTimeline",
    "SelectionReport",
    "ValidationError",
    "__version__",
    "accumulate",
    "build_rate_matrix",
    "distance",
    "enumerate_states",
    "estimate_reference_hmm",
    "expm",
    "factorize",
    "factors_to_hmm",
    "mean_durations",
    "nmi",
    "objective",
    "perturb",
    "sample_state_sequences",
    "select_rank",
    "simulate_ensemble",
    "transition_matrix",
]
