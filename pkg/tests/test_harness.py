import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from duelbench import (
    EnvironmentSpec,
    PreferenceMatrix,
    RegretLedger,
    RunConfig,
    aggregate,
    bound_audit,
    checkpoint_schedule,
    diagnose,
    generate_cycle,
)
from duelbench.errors import InvalidParameterError, ReplicateError
from duelbench.harness import (
    aggregate_csv_text,
    read_results_csv,
    results_csv_text,
    run_replicates,
    run_single,
    write_results_csv,
)

CYCLE = EnvironmentSpec("cycle", n_suboptimal=19, p_condorcet=0.51, p_cycle=1.0)


class TestSchedule:
    def test_geometric(self):
        s = checkpoint_schedule(10**6, 100)
        assert s[0] == 100 and s[-1] == 10**6
        assert len(s) <= 100 and len(set(s)) == len(s)
        ratios = np.diff(np.log(s))
        # integer rounding perturbs the ratios near the small end
        assert np.allclose(ratios, ratios.mean(), rtol=0.1)

    def test_short_horizon_saturates(self):
        assert checkpoint_schedule(5, 5) == [1, 2, 3, 4, 5]
        assert checkpoint_schedule(7, 1) == [7]
        with pytest.raises(InvalidParameterError):
            checkpoint_schedule(3, 5)

    @given(st.integers(1, 10**7), st.integers(1, 200))
    def test_properties(self, t, n):
        if t < n and n > 1:
            return
        s = checkpoint_schedule(t, n)
        assert s[-1] == t and all(b > a for a, b in zip(s, s[1:])) and s[0] >= 1
        assert len(s) <= n


class TestAggregate:
    def test_two_ledgers(self):
        a = RegretLedger([5, 10], [1.0, 10.0], 10)
        b = RegretLedger([5, 10], [1.0, 14.0], 10)
        s = aggregate([a, b])
        assert s.final_mean == 12.0
        assert math.isclose(s.final_stderr, 2.0, rel_tol=1e-12)
        assert s.stderr[0] == 0.0 and s.n == 2

    def test_single_ledger(self):
        s = aggregate([RegretLedger([1], [3.0], 1)])
        assert s.final_stderr == 0.0

    def test_schedule_mismatch(self):
        with pytest.raises(InvalidParameterError):
            aggregate([RegretLedger([1, 2], [0, 1], 2), RegretLedger([1, 3], [0, 1], 3)])
        with pytest.raises(InvalidParameterError):
            aggregate([])

    @given(st.lists(st.floats(0, 1e6), min_size=2, max_size=30))
    def test_matches_numpy_oracle(self, finals):
        s = aggregate([RegretLedger([7], [f], 7) for f in finals])
        x = np.array(finals)
        assert math.isclose(s.final_mean, x.mean(), rel_tol=1e-9, abs_tol=1e-9)
        sd = math.sqrt(sum((v - x.mean()) ** 2 for v in finals) / (len(finals) - 1))
        assert math.isclose(s.final_stderr, sd / math.sqrt(len(finals)), rel_tol=1e-6, abs_tol=1e-6)


class TestBoundAudit:
    def diag(self):
        return diagnose(generate_cycle(19, 0.51, 1.0))

    def test_violations_counted(self):
        cfg = RunConfig(CYCLE, horizon=1000, replicates=3)
        d = self.diag()
        lgs = [RegretLedger([1000], [f], 1000) for f in (0.0, 1e12, 1e12)]
        rep = bound_audit(cfg, lgs, d)
        assert rep.applicable and rep.violations == 2 and rep.allowed == 2 and rep.passed
        rep = bound_audit(cfg, lgs + lgs, d)
        assert rep.violations == 4 and not rep.passed
        assert rep.expected_bound == rep.bound + 1

    def test_not_applicable(self):
        cfg = RunConfig(CYCLE, alpha=0.8**6, horizon=1000)
        rep = bound_audit(cfg, [RegretLedger([1000], [5.0], 1000)], self.diag())
        assert not rep.applicable and "not applicable" in rep.message


class TestReplicates:
    def test_seed_offsets(self):
        cfg = RunConfig(CYCLE, horizon=5000, replicates=3, base_seed=40, checkpoint_count=10)
        lgs = run_replicates(cfg, threads=1)
        shifted = RunConfig(CYCLE, horizon=5000, replicates=1, base_seed=42, checkpoint_count=10)
        assert lgs[2] == run_single(shifted, generate_cycle(19, 0.51, 1.0))

    def test_parallel_equals_serial(self, monkeypatch):
        cfg = RunConfig(CYCLE, horizon=20_000, replicates=6, checkpoint_count=20)
        serial = run_replicates(cfg, threads=1)
        assert run_replicates(cfg, threads=4) == serial
        monkeypatch.setenv("DUELBENCH_THREADS", "3")
        assert run_replicates(cfg) == serial

    def test_seed_wraps(self):
        cfg = RunConfig(CYCLE, horizon=100, replicates=2, base_seed=2**64 - 1, checkpoint_count=5)
        a = run_replicates(cfg, threads=1)
        b = run_replicates(RunConfig(CYCLE, horizon=100, replicates=1, base_seed=0, checkpoint_count=5), threads=1)
        assert a[1] == b[0]

    def test_custom_schedule(self):
        cfg = RunConfig(CYCLE, horizon=1000, replicates=1)
        lg = run_replicates(cfg, schedule=[500, 1000])[0]
        assert lg.steps.tolist() == [500, 1000]
        with pytest.raises(InvalidParameterError):
            run_replicates(cfg, schedule=[500, 900])

    def test_failure_names_replicate(self):
        cfg = RunConfig(CYCLE, horizon=100, replicates=2, regret="condorcet")
        env = PreferenceMatrix(np.full((3, 3), 0.5))
        with pytest.raises(ReplicateError) as info:
            run_replicates(cfg, env, threads=1)
        assert info.value.replicate == 0


class TestCsv:
    def test_round_trip(self, tmp_path):
        lgs = [RegretLedger([1, 10], [0.1, 1 / 3], 10), RegretLedger([1, 10], [0.0, 2.5], 10)]
        write_results_csv(lgs, tmp_path / "r.csv")
        text = (tmp_path / "r.csv").read_text()
        assert text.splitlines()[0] == "replicate,step,cum_regret"
        back = read_results_csv(tmp_path / "r.csv")
        assert [b.cum_regret.tolist() for b in back] == [a.cum_regret.tolist() for a in lgs]
        assert results_csv_text(back) == text

    def test_aggregate_text(self):
        s = aggregate([RegretLedger([5], [10.0], 5), RegretLedger([5], [14.0], 5)])
        assert aggregate_csv_text(s) == "step,mean,stderr,n\n5,12.0,2.0,2\n"
