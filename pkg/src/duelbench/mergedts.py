"""MergeDTS: batched UCB elimination with double Thompson sampling inside a batch.

The module exposes every building block (confidence bounds, elimination,
the two tournaments, merging and repartitioning) as a plain function so the
pieces can be tested in isolation, plus ``step`` for a single reference
iteration and ``run`` for a full checkpointed replicate. ``run`` delegates
stretches of steps that cannot change batch membership to a compiled loop
and executes every other step through ``step`` itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import _kernels
from .core import (
    PROB_TOL,
    ComparisonMatrix,
    DuelOutcome,
    PreferenceMatrix,
    RegretLedger,
    RunConfig,
    regret_weights,
)
from .environments import diagnose, duel
from .errors import InvalidParameterError, UndefinedBoundError


# ---------------------------------------------------------------------------
# constants and bounds


def c_of_epsilon(alpha: float, k: int, epsilon: float) -> float:
    """Exploration constant ((4a - 1) K^2 / ((2a - 1) eps)) ** (1 / (2a - 1))."""
    if not alpha > 0.5:
        raise InvalidParameterError(f"C(epsilon) needs alpha > 0.5, got {alpha}")
    if k < 1:
        raise InvalidParameterError("k must be positive")
    if not 0.0 < epsilon <= 1.0:
        raise InvalidParameterError(f"epsilon must be in (0, 1], got {epsilon}")
    log_c = (math.log(4 * alpha - 1) + 2 * math.log(k) - math.log(2 * alpha - 1) - math.log(epsilon)) / (
        2 * alpha - 1
    )
    if log_c > 709.0:
        raise InvalidParameterError(f"C(epsilon) overflows a double for alpha={alpha}")
    return ((4 * alpha - 1) * k * k / ((2 * alpha - 1) * epsilon)) ** (1.0 / (2 * alpha - 1))


def theorem_bound(
    alpha: float,
    m_param: int,
    k: int,
    t_horizon: int,
    epsilon: float,
    delta_min: float,
    expected: bool = False,
    c: Optional[float] = None,
) -> float:
    """High-probability regret bound 8 a M K ln(T + C(eps)) / delta_min^2.

    With ``expected=True`` returns the expected-regret form, which adds one.
    ``c`` replaces C(eps) when given (alpha must still exceed 0.5).
    """
    if not delta_min or delta_min <= 0:
        raise UndefinedBoundError("the regret bound is undefined for a zero gap")
    if not alpha > 0.5:
        raise InvalidParameterError(f"the regret bound needs alpha > 0.5, got {alpha}")
    if c is None:
        c = c_of_epsilon(alpha, k, epsilon)
    bound = 8.0 * alpha * m_param * k * math.log(t_horizon + c) / delta_min**2
    return bound + 1.0 if expected else bound


def lemma_comparison_cap(alpha: float, t_horizon: int, c: float, delta_batch_min: float) -> float:
    """Most comparisons a distinguishable pair should need before one side is dropped."""
    if not delta_batch_min or delta_batch_min <= 0:
        raise UndefinedBoundError("comparison cap is undefined for a zero gap")
    return 4.0 * alpha * math.log(t_horizon + c) / delta_batch_min**2


# ---------------------------------------------------------------------------
# confidence bounds and elimination


@dataclass(frozen=True)
class UcbSnapshot:
    u: np.ndarray
    at_step: int


def ucb_matrix(w, t: int, c: float, alpha: float) -> UcbSnapshot:
    """Element-wise w/(w + w^T) + sqrt(alpha ln(t + c) / (w + w^T)).

    Pairs that have never met get u = 1.
    """
    if t < 1:
        raise InvalidParameterError("t must be >= 1")
    w = w.w if isinstance(w, ComparisonMatrix) else np.asarray(w)
    n = w + w.T
    logterm = alpha * math.log(t + c)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = w / n + np.sqrt(logterm / n)
    u[n == 0] = 1.0
    return UcbSnapshot(u, t)


def eliminate(batch: Sequence[int], u) -> list[int]:
    """Rankers in ``batch`` that some batch member beats even optimistically.

    Flags use the membership before any removal. The returned list is in
    ascending index order and never covers the whole batch: when every member
    is flagged, the highest index is kept.
    """
    u = u.u if isinstance(u, UcbSnapshot) else np.asarray(u)
    members = list(batch)
    flagged = sorted(
        i for i in members if any(u[i, j] < 0.5 for j in members if j != i)
    )
    if len(flagged) == len(members):
        flagged = flagged[:-1]
    return flagged


# ---------------------------------------------------------------------------
# tournaments


@dataclass
class SampledPreferences:
    """Draws made while choosing one pair; ``nan`` marks entries never drawn."""

    members: list[int]
    theta: np.ndarray
    kappa: np.ndarray
    phi: np.ndarray
    first: int
    second: int


def _pick(rng: np.random.Generator, candidates: list[int]) -> int:
    if len(candidates) == 1:
        return candidates[0]
    return candidates[int(rng.random() * len(candidates))]


def _sample_tournament(w: np.ndarray, members: list[int], rng):
    s = len(members)
    theta = np.full((s, s), np.nan)
    wins = np.zeros(s, dtype=np.int64)
    for a in range(s):
        i = members[a]
        for b in range(a + 1, s):
            j = members[b]
            th = rng.beta(w[i, j] + 1.0, w[j, i] + 1.0)
            theta[a, b] = th
            theta[b, a] = 1.0 - th
            if th > 0.5:
                wins[a] += 1
            if 1.0 - th > 0.5:
                wins[b] += 1
    kappa = wins / (s - 1) if s > 1 else np.ones(1)
    best = wins.max()
    first = _pick(rng, [members[a] for a in range(s) if wins[a] == best])
    return first, theta, kappa


def _relative_tournament(w: np.ndarray, members: list[int], first: int, rng):
    s = len(members)
    phi = np.ones(s)
    if s == 1:
        return first, phi
    for a, j in enumerate(members):
        if j != first:
            phi[a] = rng.beta(w[j, first] + 1.0, w[first, j] + 1.0)
    others = [a for a in range(s) if members[a] != first]
    lo = min(phi[a] for a in others)
    # an opponent is always preferred over first: phi_first = 1 only ties a draw of exactly 1.0
    second = _pick(rng, [members[a] for a in others if phi[a] == lo])
    return second, phi


def sample_tournament(w, batch: Sequence[int], rng: np.random.Generator) -> int:
    """First candidate: the batch member winning most sampled duels (ties uniform)."""
    w = w.w if isinstance(w, ComparisonMatrix) else np.asarray(w)
    members = sorted(int(x) for x in batch)
    if not members:
        raise InvalidParameterError("batch must be non-empty")
    return _sample_tournament(w, members, rng)[0]


def relative_tournament(w, batch: Sequence[int], first: int, rng: np.random.Generator) -> int:
    """Second candidate: the member with the lowest sampled chance of beating ``first``."""
    w = w.w if isinstance(w, ComparisonMatrix) else np.asarray(w)
    members = sorted(int(x) for x in batch)
    if first not in members:
        raise InvalidParameterError(f"first candidate {first} is not in the batch")
    return _relative_tournament(w, members, first, rng)[0]


def select_pair(w, batch: Sequence[int], rng: np.random.Generator) -> SampledPreferences:
    """Run both tournaments and keep every sampled quantity."""
    w = w.w if isinstance(w, ComparisonMatrix) else np.asarray(w)
    members = sorted(int(x) for x in batch)
    first, theta, kappa = _sample_tournament(w, members, rng)
    second, phi = _relative_tournament(w, members, first, rng)
    return SampledPreferences(members, theta, kappa, phi, first, second)


# ---------------------------------------------------------------------------
# batches


@dataclass(frozen=True)
class BatchSet:
    stage: int
    batches: tuple[tuple[int, ...], ...]
    initial_k: int

    @classmethod
    def initial(cls, k: int, m_param: int) -> "BatchSet":
        if k < 1 or m_param < 1:
            raise InvalidParameterError("k and batch size must be positive")
        batches = tuple(tuple(range(lo, min(lo + m_param, k))) for lo in range(0, k, m_param))
        return cls(1, batches, k)

    @property
    def count(self) -> int:
        return len(self.batches)

    @property
    def total(self) -> int:
        return sum(len(b) for b in self.batches)

    @property
    def rankers(self) -> list[int]:
        return sorted(x for b in self.batches for x in b)


def merge_singleton(batches: BatchSet, m: int) -> BatchSet:
    """Append the lone ranker of batch m to batch (m + 1) mod b_s and drop batch m."""
    b = batches.count
    if b <= 1 or len(batches.batches[m]) != 1:
        raise InvalidParameterError("merge_singleton needs b_s > 1 and a singleton batch m")
    target = (m + 1) % b
    new = [list(x) for x in batches.batches]
    new[target].extend(new[m])
    del new[m]
    return BatchSet(batches.stage, tuple(tuple(x) for x in new), batches.initial_k)


def repartition_due(batches: BatchSet) -> bool:
    # sum |B_m| <= K / 2^s, kept in integers
    return batches.total * 2**batches.stage <= batches.initial_k


def maybe_repartition(batches: BatchSet, m_param: int) -> BatchSet:
    """Start a new stage once at most K / 2^s rankers survive.

    Old batches are packed largest first into whichever new batch is currently
    smallest and still has room (at most floor(1.5 M) members), opening a new
    batch when none has room. New batches under ceil(0.5 M) are then merged
    into the smallest other batch if that fits, and topped up from the largest
    batch otherwise, so all sizes end up in [ceil(0.5 M), floor(1.5 M)] once
    more than floor(1.5 M) rankers survive. Fewer survivors share one batch.
    """
    if not repartition_due(batches):
        return batches
    lo, hi = math.ceil(0.5 * m_param), max(1, math.floor(1.5 * m_param))
    old = sorted(
        (list(b) for b in batches.batches if b),
        key=lambda b: (-len(b), min(b)),
    )
    total = sum(len(b) for b in old)
    if total <= hi:
        new = [[x for b in old for x in b]]
    else:
        new: list[list[int]] = []
        for b in old:
            fits = [n for n in new if len(n) + len(b) <= hi]
            if fits:
                min(fits, key=len).extend(b)
            else:
                new.append(list(b))
        while len(new) > 1:
            small = min(new, key=len)
            if len(small) >= lo:
                break
            others = [n for n in new if n is not small]
            target = min(others, key=len)
            if len(target) + len(small) <= hi:
                target.extend(small)
                new.remove(small)
            else:
                donor = max(others, key=len)
                while len(small) < lo:
                    small.append(donor.pop())
    return BatchSet(batches.stage + 1, tuple(tuple(b) for b in new if b), batches.initial_k)


# ---------------------------------------------------------------------------
# state and stepping


@dataclass
class MergeDtsState:
    w: ComparisonMatrix
    batches: BatchSet
    alpha: float
    batch_size: int
    c: float
    rng: np.random.Generator
    t: int = 1
    declared_winner: Optional[int] = None
    counts: np.ndarray = None  # type: ignore[assignment]
    audit: Optional["PairAudit"] = None

    def __post_init__(self) -> None:
        if self.counts is None:
            self.counts = np.zeros(self.w.k, dtype=np.int64)

    @classmethod
    def start(cls, k: int, alpha: float, batch_size: int, c: float, rng, audit=None) -> "MergeDtsState":
        return cls(
            w=ComparisonMatrix(k),
            batches=BatchSet.initial(k, batch_size),
            alpha=alpha,
            batch_size=batch_size,
            c=c,
            rng=rng,
            audit=audit,
        )


Selector = Callable[[MergeDtsState, list, UcbSnapshot], tuple]


def dts_selector(state: MergeDtsState, batch: list, u: UcbSnapshot) -> tuple[int, int]:
    sp = select_pair(state.w, batch, state.rng)
    return sp.first, sp.second


def framework_step(state: MergeDtsState, p: PreferenceMatrix, select: Selector):
    """One iteration of the shared eliminate / merge / duel / repartition loop."""
    t = state.t
    batches = state.batches
    m = t % batches.count
    batch = list(batches.batches[m])

    if batches.count == 1 and len(batch) == 1:
        a = batch[0]
        state.declared_winner = a
        outcome = _play(state, p, a, a)
        return outcome, state

    u = ucb_matrix(state.w, t, state.c, state.alpha)
    removed = eliminate(batch, u)
    if removed:
        gone = set(removed)
        batch = [x for x in batch if x not in gone]
        new = list(batches.batches)
        new[m] = tuple(batch)
        batches = BatchSet(batches.stage, tuple(new), batches.initial_k)
    if batches.count > 1 and len(batch) == 1:
        target = (m + 1) % batches.count
        batches = merge_singleton(batches, m)
        m = target if target < m else target - 1
        batch = list(batches.batches[m])
    state.batches = batches
    if batches.count == 1 and len(batch) == 1:
        state.declared_winner = batch[0]

    first, second = select(state, batch, u)
    outcome = _play(state, p, first, second, batch)
    state.batches = maybe_repartition(state.batches, state.batch_size)
    return outcome, state


def _play(state: MergeDtsState, p: PreferenceMatrix, first: int, second: int, batch=None) -> DuelOutcome:
    outcome = duel(p, first, second, state.rng, step=state.t)
    state.w.record(outcome.winner, outcome.loser)
    state.counts[first] += 1
    state.counts[second] += 1
    if state.audit is not None and batch is not None:
        state.audit.record(state.batches.stage, batch, first, second)
    state.t += 1
    return outcome


def step(state: MergeDtsState, p: PreferenceMatrix):
    """Execute exactly one MergeDTS iteration; returns (outcome, state)."""
    return framework_step(state, p, dts_selector)


# ---------------------------------------------------------------------------
# instrumentation


class PairAudit:
    """Per-stage comparison counts and the smallest in-batch gap seen per pair."""

    def __init__(self, gaps: np.ndarray):
        self.gaps = np.asarray(gaps)
        self.k = self.gaps.shape[0]
        self.counts: dict[int, np.ndarray] = {}
        self.batch_gap: dict[int, np.ndarray] = {}
        self._gap_cache: dict[tuple, float] = {}

    def _batch_min_gap(self, batch) -> float:
        key = tuple(sorted(batch))
        if key not in self._gap_cache:
            idx = np.array(key)
            g = self.gaps[np.ix_(idx, idx)]
            pos = g[g > PROB_TOL]
            self._gap_cache[key] = float(pos.min()) if len(pos) else 0.0
        return self._gap_cache[key]

    def record(self, stage: int, batch, first: int, second: int) -> None:
        if first == second:
            return
        if stage not in self.counts:
            self.counts[stage] = np.zeros((self.k, self.k), dtype=np.int64)
            self.batch_gap[stage] = np.full((self.k, self.k), np.inf)
        i, j = min(first, second), max(first, second)
        self.counts[stage][i, j] += 1
        bg = self._batch_min_gap(batch)
        if bg < self.batch_gap[stage][i, j]:
            self.batch_gap[stage][i, j] = bg

    def violations(self, alpha: float, t_horizon: int, c: float) -> list[tuple[int, int, int, int, float]]:
        """(stage, i, j, count, cap) for each distinguishable pair compared more than its cap."""
        out = []
        for stage, counts in sorted(self.counts.items()):
            for i, j in zip(*np.nonzero(counts)):
                if self.gaps[i, j] <= PROB_TOL:
                    continue
                cap = lemma_comparison_cap(alpha, t_horizon, c, self.batch_gap[stage][i, j])
                if counts[i, j] > cap:
                    out.append((stage, int(i), int(j), int(counts[i, j]), cap))
        return out


# ---------------------------------------------------------------------------
# full runs


def exploration_constant(config: RunConfig, k: int) -> float:
    if config.c_override is not None:
        return float(config.c_override)
    return c_of_epsilon(config.alpha, k, config.failure_probability)


def _pack(batches: BatchSet) -> tuple[np.ndarray, np.ndarray]:
    width = max(len(b) for b in batches.batches)
    members = np.zeros((batches.count, width), dtype=np.int64)
    sizes = np.zeros(batches.count, dtype=np.int64)
    for m, b in enumerate(batches.batches):
        members[m, : len(b)] = sorted(b)
        sizes[m] = len(b)
    return members, sizes


def advance(state: MergeDtsState, p: PreferenceMatrix, t_end: int, select: Selector, rucb: bool, fast: bool = True) -> None:
    """Run steps until ``state.t == t_end + 1``."""
    while state.t <= t_end:
        if fast and state.declared_winner is not None:
            # the remaining steps are self-duels of the winner
            n = t_end - state.t + 1
            a = state.declared_winner
            state.counts[a] += 2 * n
            state.w.w[a, a] += n
            state.t = t_end + 1
            return
        if fast and not repartition_due(state.batches):
            members, sizes = _pack(state.batches)
            state.t = int(
                _kernels.merge_segment(
                    state.rng, p.p, state.w.w, members, sizes, state.batches.count,
                    state.t, t_end, float(state.alpha), float(state.c), state.counts, rucb,
                )
            )
            if state.t > t_end:
                return
        framework_step(state, p, select)


def run_framework(
    config: RunConfig,
    env: PreferenceMatrix,
    seed: int,
    schedule: Sequence[int],
    select: Selector,
    rucb: bool,
    fast: bool = True,
    audit: Optional[PairAudit] = None,
) -> RegretLedger:
    if audit is not None:
        fast = False  # the compiled loop does not report pairs
    diag = diagnose(env)
    g = regret_weights(diag, env, config.regret)
    c = exploration_constant(config, env.k)
    state = MergeDtsState.start(env.k, config.alpha, config.batch_size, c, np.random.default_rng(seed), audit)
    cum = []
    for cp in schedule:
        advance(state, env, int(cp), select, rucb, fast)
        cum.append(float(np.dot(state.counts, g)) / 2.0)
    return RegretLedger(np.asarray(schedule), np.asarray(cum), config.horizon, state.declared_winner)


def run(
    config: RunConfig,
    env: PreferenceMatrix,
    seed: Optional[int] = None,
    schedule: Optional[Sequence[int]] = None,
    fast: bool = True,
    audit: Optional[PairAudit] = None,
) -> RegretLedger:
    """One MergeDTS replicate of ``config.horizon`` steps.

    ``seed`` defaults to ``config.base_seed``. ``fast=False`` executes every
    step through :func:`step`; the ledgers agree either way.
    """
    from .harness import checkpoint_schedule

    if schedule is None:
        schedule = checkpoint_schedule(config.horizon, config.checkpoint_count)
    seed = config.base_seed if seed is None else seed
    return run_framework(config, env, seed, schedule, dts_selector, False, fast, audit)
