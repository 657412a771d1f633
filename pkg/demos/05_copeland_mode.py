"""Copeland regret on an environment without a Condorcet winner.

Rankers 0 and 1 each beat four of the other five; ranker 5 beats ranker 0,
so nobody beats everyone. MergeDTS should settle on ranker 0 or 1.
"""

from collections import Counter
import tempfile
from pathlib import Path

import numpy as np

from duelbench import EnvironmentSpec, PreferenceMatrix, RunConfig, diagnose, run_replicates, save_matrix

p = np.full((6, 6), 0.5)
wins = {(0, 1): 0.7, (0, 2): 0.8, (0, 3): 0.8, (0, 4): 0.8, (5, 0): 0.6, (1, 2): 0.8, (1, 3): 0.8,
        (1, 4): 0.8, (1, 5): 0.8, (2, 3): 0.6, (3, 4): 0.6, (4, 2): 0.6, (2, 5): 0.8, (3, 5): 0.8, (4, 5): 0.8}
for (i, j), v in wins.items():
    p[i, j], p[j, i] = v, 1 - v
env = PreferenceMatrix(p)
d = diagnose(env)
print("Condorcet winner:", d.condorcet, "| Copeland scores:", d.copeland_scores.round(2))

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "copeland.txt"
    save_matrix(env, path)
    cfg = RunConfig(EnvironmentSpec("file", path=str(path)), horizon=100_000, replicates=20, regret="copeland")
    ledgers = run_replicates(cfg)
print("surviving rankers:", dict(Counter(lg.final_winner for lg in ledgers)))
print("mean Copeland regret:", np.mean([lg.final_regret for lg in ledgers]).round(1))
