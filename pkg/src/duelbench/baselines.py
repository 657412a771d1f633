"""Comparison policies: MergeRUCB, Self-Sparring and a generic policy slot.

MergeRUCB reuses the MergeDTS elimination/merge machinery unchanged and only
swaps the way a pair is picked inside the batch. Self-Sparring keeps one
Beta posterior per ranker and Thompson-samples twice per step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Protocol, Sequence

import numpy as np

from . import _kernels
from .core import (
    DuelOutcome,
    PreferenceMatrix,
    RegretLedger,
    RunConfig,
    regret_weights,
)
from .environments import diagnose, duel
from .mergedts import (
    MergeDtsState,
    UcbSnapshot,
    framework_step,
    run_framework,
)


# ---------------------------------------------------------------------------
# MergeRUCB


def mergerucb_select(w, batch: Sequence[int], u, rng: np.random.Generator) -> tuple[int, int]:
    """Uniform first ranker; opponent maximising u[j][first] over the rest of the batch."""
    u = u.u if isinstance(u, UcbSnapshot) else np.asarray(u)
    members = sorted(int(x) for x in batch)
    if not members:
        raise ValueError("batch must be non-empty")
    first = members[int(rng.random() * len(members))]
    if len(members) == 1:
        return first, first
    others = [j for j in members if j != first]
    hi = max(u[j, first] for j in others)
    ties = [j for j in others if u[j, first] == hi]
    second = ties[0] if len(ties) == 1 else ties[int(rng.random() * len(ties))]
    return first, second


def rucb_selector(state: MergeDtsState, batch: list, u: UcbSnapshot) -> tuple[int, int]:
    return mergerucb_select(state.w, batch, u, state.rng)


def mergerucb_step(state: MergeDtsState, p: PreferenceMatrix):
    return framework_step(state, p, rucb_selector)


def run_mergerucb(
    config: RunConfig,
    env: PreferenceMatrix,
    seed: Optional[int] = None,
    schedule: Optional[Sequence[int]] = None,
    fast: bool = True,
) -> RegretLedger:
    from .harness import checkpoint_schedule

    if schedule is None:
        schedule = checkpoint_schedule(config.horizon, config.checkpoint_count)
    seed = config.base_seed if seed is None else seed
    return run_framework(config, env, seed, schedule, rucb_selector, True, fast)


# ---------------------------------------------------------------------------
# Self-Sparring


@dataclass
class SelfSparringState:
    wins: np.ndarray
    losses: np.ndarray
    rng: np.random.Generator
    t: int = 1

    @classmethod
    def start(cls, k: int, rng: np.random.Generator) -> "SelfSparringState":
        return cls(np.zeros(k, dtype=np.int64), np.zeros(k, dtype=np.int64), rng)

    @property
    def k(self) -> int:
        return len(self.wins)


def _thompson_argmax(state: SelfSparringState) -> int:
    theta = np.array([state.rng.beta(a + 1.0, b + 1.0) for a, b in zip(state.wins, state.losses)])
    ties = np.flatnonzero(theta == theta.max())
    if len(ties) == 1:
        return int(ties[0])
    return int(ties[int(state.rng.random() * len(ties))])


def selfsparring_select(state: SelfSparringState) -> tuple[int, int]:
    """Two independent Thompson rounds; both may land on the same ranker."""
    first = _thompson_argmax(state)
    second = _thompson_argmax(state)
    return first, second


def selfsparring_update(state: SelfSparringState, outcome: DuelOutcome) -> SelfSparringState:
    state.wins[outcome.winner] += 1
    state.losses[outcome.loser] += 1
    return state


def selfsparring_step(state: SelfSparringState, p: PreferenceMatrix) -> tuple[DuelOutcome, SelfSparringState]:
    first, second = selfsparring_select(state)
    outcome = duel(p, first, second, state.rng, step=state.t)
    selfsparring_update(state, outcome)
    state.t += 1
    return outcome, state


def run_selfsparring(
    config: RunConfig,
    env: PreferenceMatrix,
    seed: Optional[int] = None,
    schedule: Optional[Sequence[int]] = None,
    fast: bool = True,
) -> RegretLedger:
    from .harness import checkpoint_schedule

    if schedule is None:
        schedule = checkpoint_schedule(config.horizon, config.checkpoint_count)
    seed = config.base_seed if seed is None else seed
    diag = diagnose(env)
    g = regret_weights(diag, env, config.regret)
    state = SelfSparringState.start(env.k, np.random.default_rng(seed))
    counts = np.zeros(env.k, dtype=np.int64)
    cum = []
    for cp in schedule:
        cp = int(cp)
        if fast:
            state.t = int(
                _kernels.sparring_segment(state.rng, env.p, state.wins, state.losses, state.t, cp, counts)
            )
        else:
            while state.t <= cp:
                outcome, _ = selfsparring_step(state, env)
                counts[outcome.first] += 1
                counts[outcome.second] += 1
        cum.append(float(np.dot(counts, g)) / 2.0)
    return RegretLedger(np.asarray(schedule), np.asarray(cum), config.horizon, _posterior_leader(state))


def _posterior_leader(state: SelfSparringState) -> Optional[int]:
    n = state.wins + state.losses
    if not n.any():
        return None
    mean = (state.wins + 1.0) / (n + 2.0)
    return int(np.argmax(mean))


# ---------------------------------------------------------------------------
# generic policies


class Policy(Protocol):
    """Anything that proposes a pair and learns from the outcome."""

    def select(self, rng: np.random.Generator) -> tuple[int, int]: ...

    def update(self, outcome: DuelOutcome) -> None: ...


@dataclass
class SelfSparringPolicy:
    """Self-Sparring behind the :class:`Policy` interface."""

    k: int
    wins: np.ndarray = field(init=False)
    losses: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        self.wins = np.zeros(self.k, dtype=np.int64)
        self.losses = np.zeros(self.k, dtype=np.int64)

    def select(self, rng):
        return selfsparring_select(SelfSparringState(self.wins, self.losses, rng))

    def update(self, outcome):
        self.wins[outcome.winner] += 1
        self.losses[outcome.loser] += 1


#: baselines named in the literature whose algorithms are not shipped here
UNIMPLEMENTED_POLICIES = ("DTS", "RMED1", "REX3")


def make_policy(name: str, k: int) -> Policy:
    if name == "SelfSparring":
        return SelfSparringPolicy(k)
    if name in UNIMPLEMENTED_POLICIES:
        raise NotImplementedError(f"{name} is a reserved policy slot; supply a Policy implementation")
    raise KeyError(f"no policy named {name!r}")


def run_policy(
    policy: Policy,
    env: PreferenceMatrix,
    horizon: int,
    schedule: Sequence[int],
    seed: int,
    regret: str = "auto",
) -> RegretLedger:
    """Drive an arbitrary :class:`Policy` through ``horizon`` duels in pure Python."""
    diag = diagnose(env)
    g = regret_weights(diag, env, regret)
    rng = np.random.default_rng(seed)
    counts = np.zeros(env.k, dtype=np.int64)
    cum = []
    t = 1
    for cp in schedule:
        while t <= cp:
            first, second = policy.select(rng)
            outcome = duel(env, first, second, rng, step=t)
            policy.update(outcome)
            counts[first] += 1
            counts[second] += 1
            t += 1
        cum.append(float(np.dot(counts, g)) / 2.0)
    return RegretLedger(np.asarray(schedule), np.asarray(cum), horizon, None)
