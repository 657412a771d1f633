"""Shared value types plus the scoring and regret arithmetic.

Rankers are plain 0-based integer indices. Nothing here permutes a matrix so
that the Condorcet winner sits at index 0; diagnostics carry the winner's
index instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    DegenerateInputError,
    InvalidParameterError,
    MatrixValidationError,
    UnsupportedEnvironmentError,
)

#: absolute tolerance for p_ij + p_ji = 1 and for "p_ij is exactly one half"
PROB_TOL = 1e-9

ALGORITHMS = ("MergeDTS", "MergeRUCB", "SelfSparring")
REGRET_MODES = ("auto", "condorcet", "copeland")


class PreferenceMatrix:
    """Immutable K x K matrix of pairwise win probabilities.

    The constructor validates complementarity to within ``PROB_TOL`` and then
    rewrites the lower triangle as ``1 - upper`` and the diagonal as exactly
    0.5, so downstream code sees exact complements.
    """

    __slots__ = ("_p",)

    def __init__(self, p) -> None:
        arr = np.array(p, dtype=float, copy=True)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise MatrixValidationError(f"preference matrix must be square, got shape {arr.shape}")
        k = arr.shape[0]
        if k < 1:
            raise MatrixValidationError("preference matrix needs at least one ranker")
        if not np.all(np.isfinite(arr)):
            raise MatrixValidationError("preference matrix contains non-finite entries")
        if np.any(arr < -PROB_TOL) or np.any(arr > 1 + PROB_TOL):
            raise MatrixValidationError("preference probabilities must lie in [0, 1]")
        diag = np.diagonal(arr)
        if np.any(np.abs(diag - 0.5) > PROB_TOL):
            bad = int(np.argmax(np.abs(diag - 0.5)))
            raise MatrixValidationError(f"p[{bad}][{bad}] = {diag[bad]!r}, expected 0.5")
        excess = np.abs(arr + arr.T - 1.0)
        if np.any(excess > PROB_TOL):
            i, j = np.unravel_index(int(np.argmax(excess)), excess.shape)
            raise MatrixValidationError(
                f"p[{i}][{j}] + p[{j}][{i}] = {arr[i, j] + arr[j, i]!r}, expected 1"
            )
        arr = np.clip(arr, 0.0, 1.0)
        lower = np.tril_indices(k, -1)
        arr[lower] = 1.0 - arr.T[lower]
        np.fill_diagonal(arr, 0.5)
        arr.setflags(write=False)
        self._p = arr

    @property
    def p(self) -> np.ndarray:
        return self._p

    @property
    def k(self) -> int:
        return self._p.shape[0]

    def __getitem__(self, idx):
        return self._p[idx]

    def __eq__(self, other) -> bool:
        if not isinstance(other, PreferenceMatrix):
            return NotImplemented
        return np.array_equal(self._p, other._p)

    def __hash__(self) -> int:
        return hash(self._p.tobytes())

    def __repr__(self) -> str:
        return f"PreferenceMatrix(k={self.k})"


@dataclass
class ComparisonMatrix:
    """Running duel counts: ``w[i, j]`` is how often ranker i has beaten j."""

    k: int
    w: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.k < 1:
            raise InvalidParameterError("k must be positive")
        if self.w is None:
            self.w = np.zeros((self.k, self.k), dtype=np.int64)
        else:
            self.w = np.asarray(self.w, dtype=np.int64)
            if self.w.shape != (self.k, self.k):
                raise InvalidParameterError("comparison matrix shape does not match k")
            if np.any(self.w < 0):
                raise InvalidParameterError("comparison counts must be non-negative")

    def record(self, winner: int, loser: int) -> None:
        self.w[winner, loser] += 1

    @property
    def total(self) -> int:
        return int(self.w.sum())

    def copy(self) -> "ComparisonMatrix":
        return ComparisonMatrix(self.k, self.w.copy())


@dataclass(frozen=True)
class DuelOutcome:
    step: int
    first: int
    second: int
    winner: int

    def __post_init__(self) -> None:
        if self.winner not in (self.first, self.second):
            raise InvalidParameterError("winner must be one of the two duelling rankers")

    @property
    def loser(self) -> int:
        return self.second if self.winner == self.first else self.first


@dataclass(frozen=True)
class EnvDiagnostics:
    condorcet: Optional[int]
    copeland_scores: np.ndarray
    copeland_value: float
    borda_scores: np.ndarray
    gaps: np.ndarray
    delta_min: Optional[float]
    uninformative_count: int
    assumption1_holds: bool
    assumption2_holds: bool

    @property
    def k(self) -> int:
        return len(self.borda_scores)

    @property
    def copeland_winners(self) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.copeland_scores == self.copeland_value)]


@dataclass
class RegretLedger:
    """Checkpointed cumulative regret of a single replicate."""

    steps: np.ndarray
    cum_regret: np.ndarray
    total_steps: int
    final_winner: Optional[int] = None

    def __post_init__(self) -> None:
        self.steps = np.asarray(self.steps, dtype=np.int64)
        self.cum_regret = np.asarray(self.cum_regret, dtype=float)
        if self.steps.shape != self.cum_regret.shape or self.steps.ndim != 1 or len(self.steps) == 0:
            raise InvalidParameterError("ledger needs equal-length, non-empty step and regret arrays")
        if np.any(np.diff(self.steps) <= 0) or self.steps[0] < 1:
            raise InvalidParameterError("ledger steps must be positive and strictly increasing")
        if int(self.steps[-1]) != self.total_steps:
            raise InvalidParameterError("last checkpoint must equal total_steps")

    @property
    def checkpoints(self) -> list[tuple[int, float]]:
        return [(int(s), float(r)) for s, r in zip(self.steps, self.cum_regret)]

    @property
    def final_regret(self) -> float:
        return float(self.cum_regret[-1])

    def __eq__(self, other) -> bool:
        if not isinstance(other, RegretLedger):
            return NotImplemented
        return (
            self.total_steps == other.total_steps
            and self.final_winner == other.final_winner
            and np.array_equal(self.steps, other.steps)
            and np.array_equal(self.cum_regret, other.cum_regret)
        )


@dataclass(frozen=True)
class EnvironmentSpec:
    """Recipe for a preference matrix: a file, a Cycle construction or utilities."""

    kind: str
    path: Optional[str] = None
    n_suboptimal: Optional[int] = None
    p_condorcet: Optional[float] = None
    p_cycle: Optional[float] = None
    utilities: Optional[tuple[float, ...]] = None

    def __post_init__(self) -> None:
        required = {
            "file": ("path",),
            "cycle": ("n_suboptimal", "p_condorcet", "p_cycle"),
            "utility": ("utilities",),
        }
        if self.kind not in required:
            raise InvalidParameterError(f"unknown environment kind {self.kind!r}")
        for name in required[self.kind]:
            if getattr(self, name) is None:
                raise InvalidParameterError(f"environment kind {self.kind!r} requires {name}")
        extra = [
            name
            for name in ("path", "n_suboptimal", "p_condorcet", "p_cycle", "utilities")
            if name not in required[self.kind] and getattr(self, name) is not None
        ]
        if extra:
            raise InvalidParameterError(
                f"environment kind {self.kind!r} does not take {', '.join(extra)}"
            )
        if self.kind == "cycle":
            for name in ("p_condorcet", "p_cycle"):
                v = getattr(self, name)
                if not 0.5 < v <= 1.0:
                    raise InvalidParameterError(f"{name} must be in (0.5, 1], got {v}")
        if self.utilities is not None:
            object.__setattr__(self, "utilities", tuple(float(u) for u in self.utilities))


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce a batch of replicates."""

    env: EnvironmentSpec
    algorithm: str = "MergeDTS"
    alpha: float = 1.01
    batch_size: int = 4
    horizon: int = 10_000
    epsilon: Optional[float] = None
    c_override: Optional[float] = None
    base_seed: int = 0
    replicates: int = 50
    checkpoint_count: int = 100
    regret: str = "auto"

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise InvalidParameterError(
                f"unknown algorithm {self.algorithm!r}; expected one of {', '.join(ALGORITHMS)}"
            )
        if self.regret not in REGRET_MODES:
            raise InvalidParameterError(f"unknown regret mode {self.regret!r}")
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise InvalidParameterError("alpha must be a positive real")
        if self.batch_size < 1:
            raise InvalidParameterError("batch_size must be >= 1")
        if self.horizon < 1:
            raise InvalidParameterError("horizon must be >= 1")
        if self.epsilon is not None and not 0.0 < self.epsilon < 1.0:
            raise InvalidParameterError("epsilon must be in (0, 1)")
        if self.c_override is not None and not self.c_override > 0:
            raise InvalidParameterError("c_override must be positive")
        if not 0 <= self.base_seed < 2**64:
            raise InvalidParameterError("base_seed must be an unsigned 64-bit integer")
        if self.replicates < 1:
            raise InvalidParameterError("replicates must be >= 1")
        if self.checkpoint_count < 1:
            raise InvalidParameterError("checkpoint_count must be >= 1")

    @property
    def failure_probability(self) -> float:
        """Epsilon, defaulting to 1/T; a one-step horizon gets 0.5 to stay inside (0, 1)."""
        if self.epsilon is not None:
            return self.epsilon
        return 1.0 / self.horizon if self.horizon > 1 else 0.5


# ---------------------------------------------------------------------------
# scoring


def condorcet_winner(p: PreferenceMatrix) -> Optional[int]:
    """Index of the ranker beating every other with probability > 0.5, if any."""
    arr = p.p
    beats = arr > 0.5
    np.fill_diagonal(beats, True)
    winners = np.flatnonzero(beats.all(axis=1))
    return int(winners[0]) if len(winners) else None


def copeland_scores(p: PreferenceMatrix) -> np.ndarray:
    """Fraction of the other K-1 rankers each ranker beats strictly."""
    k = p.k
    if k < 2:
        raise DegenerateInputError("Copeland scores need at least two rankers")
    beats = p.p > 0.5
    np.fill_diagonal(beats, False)
    return beats.sum(axis=1) / (k - 1)


def borda_scores(p: PreferenceMatrix) -> np.ndarray:
    # includes the 0.5 diagonal term
    return p.p.sum(axis=1)


def condorcet_step_regret(diag: EnvDiagnostics, p: PreferenceMatrix, i: int, j: int) -> float:
    if diag.condorcet is None:
        raise UnsupportedEnvironmentError(
            "no Condorcet winner: use copeland_step_regret for this environment"
        )
    c = diag.condorcet
    row = p.p[c]
    return ((row[i] - 0.5) + (row[j] - 0.5)) / 2.0


def copeland_step_regret(diag: EnvDiagnostics, i: int, j: int) -> float:
    z = diag.copeland_scores
    return float(diag.copeland_value - 0.5 * (z[i] + z[j]))


def resolve_regret_mode(mode: str, diag: EnvDiagnostics) -> str:
    """Turn ``auto`` into a concrete functional; Condorcet whenever a winner exists."""
    if mode == "auto":
        return "condorcet" if diag.condorcet is not None else "copeland"
    if mode == "condorcet" and diag.condorcet is None:
        raise UnsupportedEnvironmentError("Condorcet regret requested but no Condorcet winner exists")
    if mode not in ("condorcet", "copeland"):
        raise InvalidParameterError(f"unknown regret mode {mode!r}")
    return mode


def regret_weights(diag: EnvDiagnostics, p: PreferenceMatrix, mode: str) -> np.ndarray:
    """Per-ranker sub-optimality g with step regret (g[i] + g[j]) / 2.

    Both regret functionals are separable this way, which lets simulators
    count plays per ranker and settle regret at checkpoints.
    """
    mode = resolve_regret_mode(mode, diag)
    if mode == "condorcet":
        g = p.p[diag.condorcet] - 0.5
        g = g.copy()
        g[diag.condorcet] = 0.0
        return g
    return diag.copeland_value - np.asarray(diag.copeland_scores, dtype=float)


def step_regret(diag: EnvDiagnostics, p: PreferenceMatrix, mode: str, i: int, j: int) -> float:
    if resolve_regret_mode(mode, diag) == "condorcet":
        return condorcet_step_regret(diag, p, i, j)
    return copeland_step_regret(diag, i, j)

