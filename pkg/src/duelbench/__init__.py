"""Dueling-bandit evaluation toolkit built around MergeDTS."""

from .core import (
    ComparisonMatrix,
    DuelOutcome,
    EnvDiagnostics,
    EnvironmentSpec,
    PreferenceMatrix,
    RegretLedger,
    RunConfig,
    borda_scores,
    condorcet_step_regret,
    condorcet_winner,
    copeland_scores,
    copeland_step_regret,
)
from .environments import diagnose, duel, generate_cycle, generate_utility, load_matrix, save_matrix
from .harness import aggregate, bound_audit, checkpoint_schedule, run_replicates
from .mergedts import c_of_epsilon, lemma_comparison_cap, theorem_bound

__version__ = "0.1.0"

__all__ = [
    "ComparisonMatrix",
    "DuelOutcome",
    "EnvDiagnostics",
    "EnvironmentSpec",
    "PreferenceMatrix",
    "RegretLedger",
    "RunConfig",
    "aggregate",
    "borda_scores",
    "bound_audit",
    "c_of_epsilon",
    "checkpoint_schedule",
    "condorcet_step_regret",
    "condorcet_winner",
    "copeland_scores",
    "copeland_step_regret",
    "diagnose",
    "duel",
    "generate_cycle",
    "generate_utility",
    "lemma_comparison_cap",
    "load_matrix",
    "run_replicates",
    "save_matrix",
    "theorem_bound",
]
