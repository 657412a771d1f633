"""MergeDTS against MergeRUCB and Self-Sparring on a 32-ranker utility environment.

Uses the tuned-style parameters. MergeDTS should land well below MergeRUCB.
Self-Sparring often wins outright here: a utility environment has no cycles
for it to get stuck in.
"""

import numpy as np

from duelbench import EnvironmentSpec, RunConfig, aggregate, run_replicates

g = np.linspace(0.02, 0.2, 31)
env = EnvironmentSpec("utility", utilities=(0.0, *(-np.log((0.5 + g) / (0.5 - g)))))
T = 200_000
configs = {
    "MergeDTS": RunConfig(env, alpha=0.8**6, batch_size=16, c_override=4e6, horizon=T, replicates=8),
    "MergeRUCB": RunConfig(env, "MergeRUCB", alpha=0.8**6, batch_size=8, c_override=4e5, horizon=T, replicates=8),
    "SelfSparring": RunConfig(env, "SelfSparring", horizon=T, replicates=8),
}
for name, cfg in configs.items():
    agg = aggregate(run_replicates(cfg))
    print(f"{name:<13} R({T}) = {agg.final_mean:9.1f} +- {agg.final_stderr:.1f}")
