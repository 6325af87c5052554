import numpy as np
import pytest

from neutralwalk.experiments import (
    RunFailed,
    run_batch,
    run_seed,
    sweep_alpha,
    sweep_fleet_size,
    thread_count,
)
from neutralwalk.explorer import evolvability, explore, nn_size
from neutralwalk.genotypes import ConfigError, FleetConfig, ModelKind

CFG = FleetConfig(task_count=8, fleet_size=12, capacity=6, init_state_max=4)


def test_single_run_matches_explore():
    agg = run_batch(CFG, 5, max_steps=400, runs=1, master_seed=3)
    res = explore(CFG, 5, 400, run_seed(3, 0))
    assert agg.run_count == 1
    assert agg.nn_size.mean == nn_size(res) and agg.nn_size.std == 0
    assert agg.evolvability.mean == evolvability(res) and agg.evolvability.std == 0
    assert np.array_equal(agg.mean_series, res.series.astype(float))


def test_same_master_seed_same_aggregate():
    a = run_batch(CFG, 5, max_steps=300, runs=4, master_seed=11)
    b = run_batch(CFG, 5, max_steps=300, runs=4, master_seed=11)
    assert a.nn_sizes == b.nn_sizes and a.evolvabilities == b.evolvabilities
    assert np.array_equal(a.mean_series, b.mean_series)


def test_parallel_matches_serial():
    a = run_batch(CFG, 5, max_steps=300, runs=4, master_seed=11, workers=1)
    b = run_batch(CFG, 5, max_steps=300, runs=4, master_seed=11, workers=2)
    assert a.nn_sizes == b.nn_sizes and a.evolvabilities == b.evolvabilities
    assert np.array_equal(a.mean_series, b.mean_series)


def test_seeds_distinct_and_reproducible():
    seeds = [run_seed(42, i) for i in range(1000)]
    assert len(set(seeds)) == 1000
    assert seeds == [run_seed(42, i) for i in range(1000)]
    assert run_seed(43, 0) != run_seed(42, 0)


def test_models_share_seeds():
    table = sweep_alpha(CFG, [5], max_steps=200, runs=3, master_seed=9)
    seeds = {m: agg.seeds for (m, _), agg in table.items()}
    assert seeds[ModelKind.DEGENERATE] == seeds[ModelKind.REDUNDANT]


def test_sweeps_reduce_to_batch():
    batch = run_batch(CFG.with_(model="redundant"), 5, max_steps=200, runs=3, master_seed=9)
    by_alpha = sweep_alpha(CFG, [5], max_steps=200, runs=3, master_seed=9, models=["redundant"])
    by_size = sweep_fleet_size(CFG, [12], 5, max_steps=200, runs=3, master_seed=9, models=["redundant"])
    assert by_alpha[(ModelKind.REDUNDANT, 5)].nn_sizes == batch.nn_sizes
    assert by_size[(ModelKind.REDUNDANT, 12)].nn_sizes == batch.nn_sizes


def test_fleet_sweep_keeps_demand():
    table = sweep_fleet_size(CFG, [12, 14], 5, max_steps=50, runs=1, master_seed=1, models=["degenerate"])
    agg = table[(ModelKind.DEGENERATE, 14)]
    assert agg.config.base_fleet_size == 12 and agg.config.fleet_size == 14


def test_sweep_validation():
    with pytest.raises(ConfigError):
        sweep_fleet_size(CFG, [14, 12], runs=1)
    with pytest.raises(ConfigError):
        sweep_alpha(CFG, [5, 2], runs=1)
    with pytest.raises(ConfigError):
        sweep_alpha(CFG, [-1], runs=1)
    with pytest.raises(ConfigError):
        sweep_fleet_size(CFG, [29], models=["degenerate"], runs=1)
    with pytest.raises(ConfigError):
        run_batch(CFG, runs=0)


def test_failure_reports_seed(monkeypatch):
    import neutralwalk.experiments as ex

    def boom(*a, **k):
        raise RuntimeError("bad")

    monkeypatch.setattr(ex, "explore", boom)
    with pytest.raises(RunFailed) as info:
        run_batch(CFG, 5, max_steps=10, runs=2, master_seed=5)
    assert info.value.seed == run_seed(5, 0)


def test_thread_env(monkeypatch):
    monkeypatch.delenv("NEUTRALWALK_THREADS", raising=False)
    assert thread_count() == 1
    monkeypatch.setenv("NEUTRALWALK_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("NEUTRALWALK_THREADS", "zero")
    with pytest.raises(ConfigError):
        thread_count()


def test_topology_optional():
    agg = run_batch(CFG, 5, max_steps=300, runs=2, master_seed=1, topology=True)
    assert agg.degree_average is not None and agg.degree_average > 0
    assert run_batch(CFG, 5, max_steps=300, runs=2, master_seed=1).degree_average is None
