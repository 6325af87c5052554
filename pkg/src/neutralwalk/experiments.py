"""Batch runs and parameter sweeps over many seeded explorations."""

from __future__ import annotations

import os
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .explorer import DEFAULT_MAX_STEPS, evolvability, explore, nn_size, topology_metrics
from .genotypes import ConfigError, FleetConfig, ModelKind

DEFAULT_RUNS = 50
DEFAULT_MASTER_SEED = 20250101
DEFAULT_FLEET_SIZES = (32, 36, 40, 44, 48)
DEFAULT_ALPHAS = (0, 2, 5, 10)
THREADS_ENV = "NEUTRALWALK_THREADS"
TOPOLOGY_PAIRS = 1000


class RunFailed(RuntimeError):
    def __init__(self, run_index: int, seed: int, cause: BaseException):
        super().__init__(f"run {run_index} (seed {seed}) failed: {cause!r}")
        self.run_index = run_index
        self.seed = seed


@dataclass(frozen=True)
class Stats:
    mean: float
    std: float
    min: int
    max: int

    @classmethod
    def of(cls, values: Sequence[int]) -> "Stats":
        arr = np.asarray(values, dtype=float)
        std = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
        return cls(float(arr.mean()), std, int(arr.min()), int(arr.max()))


@dataclass(frozen=True)
class RunAggregate:
    """Statistics over the completed runs of one batch.

    ``mean_series`` has columns ``step, nn_size, unique_boundary_phenotypes,
    duplicates``; runs that stopped early are padded with their final row.
    """

    config: FleetConfig
    alpha: object
    max_steps: int
    master_seed: int
    seeds: Tuple[int, ...]
    nn_sizes: Tuple[int, ...]
    evolvabilities: Tuple[int, ...]
    steps_executed: Tuple[int, ...]
    mean_series: np.ndarray
    # per-run (degree_average, path_length_average), only when requested
    topologies: Optional[Tuple[Tuple[float, Optional[float]], ...]] = None

    @property
    def degree_average(self) -> Optional[float]:
        if not self.topologies:
            return None
        return float(np.mean([t[0] for t in self.topologies]))

    @property
    def path_length_average(self) -> Optional[float]:
        if not self.topologies:
            return None
        values = [t[1] for t in self.topologies if t[1] is not None]
        return float(np.mean(values)) if values else None

    @property
    def run_count(self) -> int:
        return len(self.seeds)

    @property
    def nn_size(self) -> Stats:
        return Stats.of(self.nn_sizes)

    @property
    def evolvability(self) -> Stats:
        return Stats.of(self.evolvabilities)

    def standard_error(self, which: str = "nn_size") -> float:
        stats = getattr(self, which)
        return stats.std / np.sqrt(self.run_count)


def run_seed(master_seed: int, run_index: int) -> int:
    """Per-run seed derived from ``(master_seed, run_index)``."""
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(int(run_index),))
    return int(seq.generate_state(1, np.uint64)[0])


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV}: expected a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"{THREADS_ENV}: expected a positive integer, got {raw!r}")
    return n


def _one_run(args) -> tuple:
    config, alpha, max_steps, seed, topology = args
    result = explore(config, alpha, max_steps, seed)
    topo = None
    if topology:
        report = topology_metrics(result, TOPOLOGY_PAIRS, random.Random(seed))
        topo = (report.degree_average, report.path_length_average)
    return nn_size(result), evolvability(result), result.steps_executed, result.series, topo


def _pad_mean(series_list: List[np.ndarray]) -> np.ndarray:
    length = max(s.shape[0] for s in series_list)
    total = np.zeros((length, 4), dtype=float)
    for s in series_list:
        total[: s.shape[0]] += s
        if s.shape[0] < length:
            tail = s[-1].astype(float)
            total[s.shape[0]:] += tail
    out = total / len(series_list)
    out[:, 0] = np.arange(length)
    return out


def run_batch(
    config: FleetConfig,
    alpha=5,
    max_steps: int = DEFAULT_MAX_STEPS,
    runs: int = DEFAULT_RUNS,
    master_seed: int = DEFAULT_MASTER_SEED,
    workers: Optional[int] = None,
    topology: bool = False,
) -> RunAggregate:
    """Run ``runs`` independent explorations and aggregate them.

    Results are keyed by run index, so the aggregate does not depend on the
    order in which worker processes finish.
    """
    if runs < 1:
        raise ConfigError(f"runs: need at least one run, got {runs}")
    seeds = [run_seed(master_seed, i) for i in range(runs)]
    jobs = [(config, alpha, max_steps, s, topology) for s in seeds]
    workers = thread_count() if workers is None else workers
    outputs: Dict[int, tuple] = {}
    if workers <= 1 or runs == 1:
        for i, job in enumerate(jobs):
            try:
                outputs[i] = _one_run(job)
            except Exception as exc:
                raise RunFailed(i, seeds[i], exc) from exc
    else:
        with ProcessPoolExecutor(max_workers=min(workers, runs)) as pool:
            futures = {i: pool.submit(_one_run, job) for i, job in enumerate(jobs)}
            for i, fut in futures.items():
                try:
                    outputs[i] = fut.result()
                except Exception as exc:
                    raise RunFailed(i, seeds[i], exc) from exc
    ordered = [outputs[i] for i in range(runs)]
    return RunAggregate(
        config=config,
        alpha=alpha,
        max_steps=max_steps,
        master_seed=master_seed,
        seeds=tuple(seeds),
        nn_sizes=tuple(o[0] for o in ordered),
        evolvabilities=tuple(o[1] for o in ordered),
        steps_executed=tuple(o[2] for o in ordered),
        mean_series=_pad_mean([o[3] for o in ordered]),
        topologies=tuple(o[4] for o in ordered) if topology else None,
    )


def _models(models: Optional[Iterable]) -> List[ModelKind]:
    if models is None:
        return [ModelKind.DEGENERATE, ModelKind.REDUNDANT]
    return [ModelKind(m) for m in models]


def sweep_fleet_size(
    base_config: FleetConfig,
    sizes: Sequence[int] = DEFAULT_FLEET_SIZES,
    alpha=5,
    max_steps: int = DEFAULT_MAX_STEPS,
    runs: int = DEFAULT_RUNS,
    master_seed: int = DEFAULT_MASTER_SEED,
    models: Optional[Iterable] = None,
    workers: Optional[int] = None,
    topology: bool = False,
) -> Dict[Tuple[ModelKind, int], RunAggregate]:
    """Add excess vehicles while the demand-defining base fleet stays fixed.

    The base fleet is ``base_config.base_size`` vehicles (the first size when
    ``base_fleet_size`` is unset); extra vehicles start with nothing allocated.
    """
    sizes = list(sizes)
    if not sizes:
        raise ConfigError("sizes: need at least one fleet size")
    if sizes != sorted(sizes):
        raise ConfigError(f"sizes: must be ascending, got {sizes}")
    base = base_config.base_fleet_size if base_config.base_fleet_size is not None else sizes[0]
    if sizes[0] < base:
        raise ConfigError(f"sizes: every size must be at least the base fleet of {base}")
    table = {}
    for model in _models(models):
        for v in sizes:
            cfg = base_config.with_(model=model, fleet_size=v, base_fleet_size=base)
            table[(model, v)] = run_batch(cfg, alpha, max_steps, runs, master_seed, workers, topology)
    return table


def sweep_alpha(
    base_config: FleetConfig,
    alphas: Sequence = DEFAULT_ALPHAS,
    max_steps: int = DEFAULT_MAX_STEPS,
    runs: int = DEFAULT_RUNS,
    master_seed: int = DEFAULT_MASTER_SEED,
    models: Optional[Iterable] = None,
    workers: Optional[int] = None,
    topology: bool = False,
) -> Dict[Tuple[ModelKind, object], RunAggregate]:
    alphas = list(alphas)
    if not alphas:
        raise ConfigError("alphas: need at least one value")
    if any(a < 0 for a in alphas):
        raise ConfigError(f"alphas: must be non-negative, got {alphas}")
    if alphas != sorted(alphas):
        raise ConfigError(f"alphas: must be ascending, got {alphas}")
    table = {}
    for model in _models(models):
        cfg = base_config.with_(model=model)
        for a in alphas:
            table[(model, a)] = run_batch(cfg, a, max_steps, runs, master_seed, workers, topology)
    return table
