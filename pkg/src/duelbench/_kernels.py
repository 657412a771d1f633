"""Compiled inner loops.

Each kernel mirrors a pure-Python step in ``mergedts`` / ``baselines`` draw
for draw: the same Generator calls in the same order, so a run that hands
work back and forth between the two produces the same trajectory as the
Python reference loop. numba's Generator.beta and Generator.random reproduce
NumPy's streams exactly.

Kernels never change batch membership. ``merge_segment`` stops *before*
drawing anything whenever the scheduled batch is a singleton or has a
ranker due for elimination; the caller then runs that step in Python.
"""

import math

import numpy as np
from numba import njit


@njit(nogil=True, cache=True)
def _pick_tie(rng, ties, n_ties):
    if n_ties == 1:
        return ties[0]
    return ties[int(rng.random() * n_ties)]


@njit(nogil=True, cache=True)
def sample_tournament_k(rng, w, row, s, ties):
    wins = np.zeros(s, dtype=np.int64)
    for a in range(s):
        i = row[a]
        for b in range(a + 1, s):
            j = row[b]
            th = rng.beta(w[i, j] + 1.0, w[j, i] + 1.0)
            if th > 0.5:
                wins[a] += 1
            if 1.0 - th > 0.5:
                wins[b] += 1
    best = -1
    n_ties = 0
    for a in range(s):
        if wins[a] > best:
            best = wins[a]
            ties[0] = row[a]
            n_ties = 1
        elif wins[a] == best:
            ties[n_ties] = row[a]
            n_ties += 1
    return _pick_tie(rng, ties, n_ties)


@njit(nogil=True, cache=True)
def relative_tournament_k(rng, w, row, s, first, ties):
    if s == 1:
        return first
    phi = np.empty(s)
    for a in range(s):
        j = row[a]
        if j == first:
            phi[a] = 1.0
        else:
            phi[a] = rng.beta(w[j, first] + 1.0, w[first, j] + 1.0)
    lo = 2.0
    for a in range(s):
        if row[a] != first and phi[a] < lo:
            lo = phi[a]
    n_ties = 0
    for a in range(s):
        if row[a] != first and phi[a] == lo:
            ties[n_ties] = row[a]
            n_ties += 1
    return _pick_tie(rng, ties, n_ties)


@njit(nogil=True, cache=True)
def rucb_select_k(rng, w, row, s, logterm, ties):
    first = row[int(rng.random() * s)]
    if s == 1:
        return first, first
    hi = -1.0
    n_ties = 0
    for b in range(s):
        j = row[b]
        if j == first:
            continue
        n = w[j, first] + w[first, j]
        if n == 0:
            u = 1.0
        else:
            u = w[j, first] / n + math.sqrt(logterm / n)
        if u > hi:
            hi = u
            ties[0] = j
            n_ties = 1
        elif u == hi:
            ties[n_ties] = j
            n_ties += 1
    return first, _pick_tie(rng, ties, n_ties)


@njit(nogil=True, cache=True)
def merge_segment(rng, p, w, members, sizes, nb, t, t_stop, alpha, c, counts, rucb):
    """Run merge-framework steps t..t_stop; return the next step to execute.

    Returns early (without drawing) at the first step whose batch is a
    singleton or contains a ranker with u_ij < 0.5 against a batch member.
    """
    ties = np.empty(members.shape[1], dtype=np.int64)
    while t <= t_stop:
        m = t % nb
        s = sizes[m]
        if s < 2:
            return t
        row = members[m]
        logterm = alpha * math.log(t + c)
        for a in range(s):
            i = row[a]
            for b in range(s):
                if a == b:
                    continue
                j = row[b]
                n = w[i, j] + w[j, i]
                if n > 0:
                    if w[i, j] / n + math.sqrt(logterm / n) < 0.5:
                        return t
        if rucb:
            first, second = rucb_select_k(rng, w, row, s, logterm, ties)
        else:
            first = sample_tournament_k(rng, w, row, s, ties)
            second = relative_tournament_k(rng, w, row, s, first, ties)
        if rng.random() < p[first, second]:
            w[first, second] += 1
        else:
            w[second, first] += 1
        counts[first] += 1
        counts[second] += 1
        t += 1
    return t


@njit(nogil=True, cache=True)
def ts_argmax_k(rng, wins, losses, ties):
    k = wins.shape[0]
    hi = -1.0
    n_ties = 0
    for i in range(k):
        th = rng.beta(wins[i] + 1.0, losses[i] + 1.0)
        if th > hi:
            hi = th
            ties[0] = i
            n_ties = 1
        elif th == hi:
            ties[n_ties] = i
            n_ties += 1
    return _pick_tie(rng, ties, n_ties)


@njit(nogil=True, cache=True)
def sparring_segment(rng, p, wins, losses, t, t_stop, counts):
    ties = np.empty(wins.shape[0], dtype=np.int64)
    while t <= t_stop:
        first = ts_argmax_k(rng, wins, losses, ties)
        second = ts_argmax_k(rng, wins, losses, ties)
        if rng.random() < p[first, second]:
            winner, loser = first, second
        else:
            winner, loser = second, first
        wins[winner] += 1
        losses[loser] += 1
        counts[first] += 1
        counts[second] += 1
        t += 1
    return t
