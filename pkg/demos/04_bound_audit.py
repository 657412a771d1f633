"""Check observed regret against the high-probability bound, and the
per-pair comparison cap, on Cycle2."""

from duelbench import EnvironmentSpec, RunConfig, bound_audit, diagnose, generate_cycle, run_replicates
from duelbench.mergedts import PairAudit, exploration_constant, run

env = generate_cycle(19, 0.6, 0.51)
diag = diagnose(env)
cfg = RunConfig(EnvironmentSpec("cycle", n_suboptimal=19, p_condorcet=0.6, p_cycle=0.51), horizon=500_000,
                replicates=10)
report = bound_audit(cfg, run_replicates(cfg), diag)
print(report.message)
print("verdict:", "pass" if report.passed else "fail")

# per-pair counts need the reference path, which is slower
audit = PairAudit(diag.gaps)
small = RunConfig(cfg.env, horizon=50_000)
run(small, env, seed=1, audit=audit)
bad = audit.violations(small.alpha, small.horizon, exploration_constant(small, env.k))
print(f"pairs compared more often than the cap allows: {len(bad)}")
