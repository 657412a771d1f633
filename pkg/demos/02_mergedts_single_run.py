"""Step MergeDTS by hand on Cycle, then run full replicates.

The first part drives the reference ``step`` function and prints how the
batches shrink. The second part uses the harness, which runs the same
algorithm through a compiled loop.
"""

import numpy as np

from duelbench import EnvironmentSpec, RunConfig, aggregate, generate_cycle, run_replicates
from duelbench.mergedts import MergeDtsState, c_of_epsilon, step

env = generate_cycle(19, 0.51, 1.0)
T = 200_000
c = c_of_epsilon(1.01, env.k, 1 / T)
state = MergeDtsState.start(env.k, 1.01, 4, c, np.random.default_rng(0))

last = None
while state.t <= 60_000 and state.declared_winner is None:
    step(state, env)
    shape = [len(b) for b in state.batches.batches]
    if shape != last:
        print(f"t={state.t:>6} stage {state.batches.stage}: batch sizes {shape}")
        last = shape
print("declared winner:", state.declared_winner)

cfg = RunConfig(
    EnvironmentSpec("cycle", n_suboptimal=19, p_condorcet=0.51, p_cycle=1.0),
    horizon=T,
    replicates=10,
    checkpoint_count=8,
)
ledgers = run_replicates(cfg)
agg = aggregate(ledgers)
for s, m, e in zip(agg.checkpoints, agg.mean, agg.stderr):
    print(f"R({s:>6}) = {m:8.1f} +- {e:.1f}")
print("winners:", [lg.final_winner for lg in ledgers])
